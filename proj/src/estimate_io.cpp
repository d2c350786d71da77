// SPDX-License-Identifier: Apache-2.0
//
// mbtd - multiband time-delay estimation by weighted subspace fitting
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "mbtd/estimate_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mbtd/bench.hpp"

namespace mbtd {

namespace {

using nlohmann::json;

json complex_vector(const CVector& v)
{
    json re = json::array();
    json im = json::array();
    for (const cplx z : v) {
        re.push_back(z.real());
        im.push_back(z.imag());
    }
    return json{{"re", re}, {"im", im}};
}

CVector read_complex(const json& j)
{
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.at("im").get<std::vector<double>>();
    if (re.size() != im.size()) {
        throw ArgumentError("estimate file: real and imaginary parts differ in length");
    }
    CVector v(static_cast<Eigen::Index>(re.size()));
    for (std::size_t k = 0; k < re.size(); ++k) {
        v[static_cast<Eigen::Index>(k)] = cplx(re[k], im[k]);
    }
    return v;
}

} // namespace

std::string to_json(const EstimateFile& file)
{
    if (file.snapshots.empty()) {
        throw ArgumentError("estimate file: no snapshots");
    }
    const BandPlan& plan = file.snapshots.front().plan;
    json doc;
    doc["schema"] = 1;
    doc["paths"] = file.paths;
    doc["plan"] = {{"f0_hz", plan.f0()},
                   {"bandwidth_hz", plan.bandwidth()},
                   {"subcarriers", plan.n_subcarriers()},
                   {"band_offsets", plan.band_offsets()}};
    doc["sigmas"] = file.snapshots.front().sigmas;
    json snaps = json::array();
    for (const auto& est : file.snapshots) {
        json bands = json::array();
        for (const auto& h : est.per_band) {
            bands.push_back(complex_vector(h));
        }
        snaps.push_back(bands);
    }
    doc["snapshots"] = snaps;
    if (file.truth) {
        doc["truth"] = {{"delays_s", file.truth->delays()}, {"gains", complex_vector(file.truth->gains())}};
    }
    return doc.dump(1) + "\n";
}

EstimateFile parse_estimate_file(const std::string& text)
{
    try {
        const json doc = json::parse(text);
        if (doc.at("schema").get<int>() != 1) {
            throw ArgumentError("estimate file: unsupported schema");
        }
        const json& p = doc.at("plan");
        const BandPlan plan(p.at("f0_hz").get<double>(), p.at("bandwidth_hz").get<double>(),
                            p.at("subcarriers").get<int>(), p.at("band_offsets").get<std::vector<int>>());
        const auto sigmas = doc.at("sigmas").get<std::vector<double>>();
        EstimateFile file;
        file.paths = doc.at("paths").get<int>();
        for (const auto& snap : doc.at("snapshots")) {
            ChannelEstimate est{{}, sigmas, plan};
            for (const auto& band : snap) {
                est.per_band.push_back(read_complex(band));
            }
            if (est.bands() != plan.band_count()) {
                throw ArgumentError("estimate file: snapshot band count differs from plan");
            }
            for (const auto& h : est.per_band) {
                if (h.size() != plan.n_subcarriers()) {
                    throw ArgumentError("estimate file: band length differs from N");
                }
            }
            file.snapshots.push_back(std::move(est));
        }
        if (file.snapshots.empty()) {
            throw ArgumentError("estimate file: no snapshots");
        }
        if (doc.contains("truth")) {
            const json& t = doc.at("truth");
            file.truth.emplace(read_complex(t.at("gains")), t.at("delays_s").get<std::vector<double>>());
        }
        return file;
    } catch (const json::exception& e) {
        throw ArgumentError(std::string("estimate file: ") + e.what());
    }
}

void save_estimate_file(const EstimateFile& file, const std::filesystem::path& path)
{
    write_file_atomic(path, to_json(file));
}

EstimateFile load_estimate_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ArgumentError("cannot open estimate file '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_estimate_file(buf.str());
}

} // namespace mbtd
