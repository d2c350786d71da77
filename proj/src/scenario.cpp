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

#include "mbtd/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "mbtd/seed.hpp"

namespace mbtd {

namespace {

constexpr std::uint64_t kGainStream = 0x6761696E; // "gain"
constexpr std::uint64_t kPilotStream = 0x70696C6F; // "pilo"

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v)
{
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(trim(item));
    }
    return out;
}

double to_double(const std::string& s, int line, const std::string& key)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ConfigError("'" + key + "': expected a finite number, got '" + s + "'", line);
    }
    return v;
}

long long to_int(const std::string& s, int line, const std::string& key)
{
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ConfigError("'" + key + "': expected an integer, got '" + s + "'", line);
    }
    return v;
}

bool to_bool(const std::string& s, int line, const std::string& key)
{
    if (s == "true" || s == "yes" || s == "1") {
        return true;
    }
    if (s == "false" || s == "no" || s == "0") {
        return false;
    }
    throw ConfigError("'" + key + "': expected true or false, got '" + s + "'", line);
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& s, int line, const std::string& key, F convert)
{
    std::vector<T> out;
    for (const auto& item : split_list(s)) {
        if (item.empty()) {
            throw ConfigError("'" + key + "': empty list element", line);
        }
        out.push_back(static_cast<T>(convert(item, line, key)));
    }
    return out;
}

} // namespace

ConfigError::ConfigError(const std::string& what, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
{
}

BandPlan Scenario::plan() const
{
    return BandPlan(f0_hz, bandwidth_hz, subcarriers, band_offsets);
}

ProbeConfig Scenario::probe() const
{
    const BandPlan p = plan();
    ProbeConfig probe = ProbeConfig::flat(p);
    probe.pilots *= pilot_magnitude;
    if (qpsk_pilots) {
        std::mt19937_64 rng(derive_seed(master_seed, {kPilotStream}));
        std::uniform_int_distribution<int> quadrant(0, 3);
        for (Eigen::Index k = 0; k < probe.pilots.size(); ++k) {
            const double ang = std::numbers::pi / 4.0 + std::numbers::pi / 2.0 * quadrant(rng);
            probe.pilots[k] = std::polar(pilot_magnitude, ang);
        }
    }
    return probe;
}

std::size_t Scenario::axis_size() const noexcept
{
    return axis == SweepAxis::snr ? snr_axis_db.size() : snapshot_axis.size();
}

double Scenario::axis_value(std::size_t index) const
{
    return axis == SweepAxis::snr ? snr_axis_db.at(index) : static_cast<double>(snapshot_axis.at(index));
}

MultipathChannel Scenario::channel(int trial) const
{
    const auto K = static_cast<Eigen::Index>(delays_s.size());
    CVector gains(K);
    if (fixed_gains) {
        gains.setOnes();
        return MultipathChannel(gains, delays_s);
    }
    std::mt19937_64 rng(derive_seed(master_seed, {kGainStream, static_cast<std::uint64_t>(trial)}));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const auto cn = [&]() {
        const double re = normal(rng);
        const double im = normal(rng);
        return cplx(re, im) / std::sqrt(2.0);
    };
    for (Eigen::Index k = 0; k < K; ++k) {
        if (k == 0 && rician_los) {
            const double kf = std::pow(10.0, rician_k_db / 10.0);
            gains[k] = std::sqrt(kf / (kf + 1.0)) * std::polar(1.0, phase(rng)) + std::sqrt(1.0 / (kf + 1.0)) * cn();
        } else {
            gains[k] = cn();
        }
        if (gains[k] == cplx(0.0, 0.0)) {
            gains[k] = cplx(1e-300, 0.0);
        }
    }
    return MultipathChannel(gains, delays_s);
}

void Scenario::validate() const
{
    if (delays_s.empty()) {
        throw ConfigError("no path delays given", 0);
    }
    BandPlan p(1.0, 1.0, 2, {0});
    try {
        p = plan();
        MultipathChannel(CVector::Ones(static_cast<Eigen::Index>(delays_s.size())), delays_s).check_range(p);
        probe().validate(p);
    } catch (const Error& e) {
        throw ConfigError(e.what(), 0);
    }
    if (trials < 1) {
        throw ConfigError("trials must be >= 1", 0);
    }
    if (estimators.empty()) {
        throw ConfigError("no estimators listed", 0);
    }
    if (axis_size() == 0) {
        throw ConfigError(axis == SweepAxis::snr ? "snr_axis_db is empty" : "snapshot_axis is empty", 0);
    }
    if (axis == SweepAxis::snr && snapshots < 1) {
        throw ConfigError("snapshots must be >= 1", 0);
    }
    for (const int s : snapshot_axis) {
        if (s < 1) {
            throw ConfigError("snapshot_axis entries must be >= 1", 0);
        }
    }
    if (static_cast<int>(per_band_offsets_db.size()) != p.band_count()) {
        throw ConfigError("per_band_offsets_db needs one entry per band", 0);
    }
    const int K = paths();
    const int q = q_cols > 0 ? q_cols : 0;
    if (q > 0 && (q < K || subcarriers + 1 - q < K + 2)) {
        throw ConfigError("q_cols must satisfy K <= q_cols <= N + 1 - (K + 2)", 0);
    }
    if (q == 0 && subcarriers + 1 - K - 2 < K) {
        throw ConfigError("subcarrier count too small for the number of paths", 0);
    }
    if (grid_points != 0 && grid_points < 10 * subcarriers) {
        throw ConfigError("grid_points must be 0 (auto) or at least 10 N", 0);
    }
}

Scenario parse_scenario(const std::string& text)
{
    Scenario scn;
    std::map<std::string, int> seen;
    std::vector<double> band_centers;
    int centers_line = 0;
    int offsets_line = 0;
    std::vector<double> delays_ns;
    std::string axis_name = "snr";
    int axis_line = 0;

    using Setter = std::function<void(const std::string&, int, const std::string&)>;
    const std::map<std::string, Setter> setters{
        {"schema",
         [&](const std::string& v, int ln, const std::string& k) {
             if (to_int(v, ln, k) != 1) {
                 throw ConfigError("unsupported schema version '" + v + "' (expected 1)", ln);
             }
         }},
        {"name", [&](const std::string& v, int, const std::string&) { scn.name = v; }},
        {"delays_ns",
         [&](const std::string& v, int ln, const std::string& k) { delays_ns = to_list<double>(v, ln, k, to_double); }},
        {"rician_los", [&](const std::string& v, int ln, const std::string& k) { scn.rician_los = to_bool(v, ln, k); }},
        {"rician_k_db",
         [&](const std::string& v, int ln, const std::string& k) { scn.rician_k_db = to_double(v, ln, k); }},
        {"fixed_gains",
         [&](const std::string& v, int ln, const std::string& k) { scn.fixed_gains = to_bool(v, ln, k); }},
        {"f0_hz", [&](const std::string& v, int ln, const std::string& k) { scn.f0_hz = to_double(v, ln, k); }},
        {"bandwidth_hz",
         [&](const std::string& v, int ln, const std::string& k) { scn.bandwidth_hz = to_double(v, ln, k); }},
        {"subcarriers",
         [&](const std::string& v, int ln, const std::string& k) {
             scn.subcarriers = static_cast<int>(to_int(v, ln, k));
         }},
        {"band_offsets",
         [&](const std::string& v, int ln, const std::string& k) {
             scn.band_offsets = to_list<int>(v, ln, k, to_int);
             offsets_line = ln;
         }},
        {"band_centers_hz",
         [&](const std::string& v, int ln, const std::string& k) {
             band_centers = to_list<double>(v, ln, k, to_double);
             centers_line = ln;
         }},
        {"pilot_magnitude",
         [&](const std::string& v, int ln, const std::string& k) { scn.pilot_magnitude = to_double(v, ln, k); }},
        {"pilot_pattern",
         [&](const std::string& v, int ln, const std::string&) {
             if (v == "flat") {
                 scn.qpsk_pilots = false;
             } else if (v == "qpsk") {
                 scn.qpsk_pilots = true;
             } else {
                 throw ConfigError("pilot_pattern must be 'flat' or 'qpsk'", ln);
             }
         }},
        {"axis",
         [&](const std::string& v, int ln, const std::string&) {
             axis_name = v;
             axis_line = ln;
         }},
        {"snr_axis_db",
         [&](const std::string& v, int ln, const std::string& k) {
             scn.snr_axis_db = to_list<double>(v, ln, k, to_double);
         }},
        {"snapshots",
         [&](const std::string& v, int ln, const std::string& k) {
             scn.snapshots = static_cast<int>(to_int(v, ln, k));
         }},
        {"snapshot_axis",
         [&](const std::string& v, int ln, const std::string& k) {
             scn.snapshot_axis = to_list<int>(v, ln, k, to_int);
         }},
        {"snr_db", [&](const std::string& v, int ln, const std::string& k) { scn.snr_db = to_double(v, ln, k); }},
        {"per_band_offsets_db",
         [&](const std::string& v, int ln, const std::string& k) {
             scn.per_band_offsets_db = to_list<double>(v, ln, k, to_double);
         }},
        {"trials",
         [&](const std::string& v, int ln, const std::string& k) { scn.trials = static_cast<int>(to_int(v, ln, k)); }},
        {"estimators",
         [&](const std::string& v, int ln, const std::string&) {
             scn.estimators.clear();
             for (const auto& name : split_list(v)) {
                 const auto kind = parse_estimator(name);
                 if (!kind) {
                     throw ConfigError("unknown estimator '" + name +
                                           "' (expected proposed, esprit, mresprit or mimusic)",
                                       ln);
                 }
                 scn.estimators.push_back(*kind);
             }
         }},
        {"q_cols",
         [&](const std::string& v, int ln, const std::string& k) { scn.q_cols = static_cast<int>(to_int(v, ln, k)); }},
        {"grid_points",
         [&](const std::string& v, int ln, const std::string& k) {
             scn.grid_points = static_cast<int>(to_int(v, ln, k));
         }},
        {"weighted", [&](const std::string& v, int ln, const std::string& k) { scn.weighted = to_bool(v, ln, k); }},
        {"column_weighting",
         [&](const std::string& v, int ln, const std::string& k) { scn.column_weighting = to_bool(v, ln, k); }},
        {"master_seed",
         [&](const std::string& v, int ln, const std::string& k) {
             const long long s = to_int(v, ln, k);
             if (s < 0) {
                 throw ConfigError("master_seed must be non-negative", ln);
             }
             scn.master_seed = static_cast<std::uint64_t>(s);
         }},
    };

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected 'key = value'", line_no);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw ConfigError("unknown key '" + key + "'", line_no);
        }
        if (const auto prev = seen.find(key); prev != seen.end()) {
            throw ConfigError("duplicate key '" + key + "' (first set on line " + std::to_string(prev->second) + ")",
                              line_no);
        }
        if (value.empty()) {
            throw ConfigError("key '" + key + "' has no value", line_no);
        }
        seen.emplace(key, line_no);
        it->second(value, line_no, key);
    }

    if (!seen.contains("schema")) {
        throw ConfigError("missing required key 'schema'", 0);
    }
    for (const char* required : {"delays_ns", "bandwidth_hz", "subcarriers", "estimators", "trials"}) {
        if (!seen.contains(required)) {
            throw ConfigError(std::string("missing required key '") + required + "'", 0);
        }
    }
    if (!band_centers.empty() && !scn.band_offsets.empty()) {
        throw ConfigError("give either band_offsets or band_centers_hz, not both", std::max(centers_line, offsets_line));
    }
    if (!band_centers.empty()) {
        try {
            const BandPlan p = BandPlan::from_centers(band_centers, scn.bandwidth_hz, scn.subcarriers);
            scn.band_offsets = p.band_offsets();
            scn.f0_hz = p.f0();
        } catch (const Error& e) {
            throw ConfigError(e.what(), centers_line);
        }
    } else if (scn.band_offsets.empty()) {
        throw ConfigError("missing band layout: give band_offsets or band_centers_hz", 0);
    }

    if (axis_name == "snr") {
        scn.axis = SweepAxis::snr;
    } else if (axis_name == "snapshots") {
        scn.axis = SweepAxis::snapshots;
    } else {
        throw ConfigError("axis must be 'snr' or 'snapshots'", axis_line);
    }
    scn.delays_s.reserve(delays_ns.size());
    for (const double d : delays_ns) {
        scn.delays_s.push_back(d * 1e-9);
    }
    if (scn.per_band_offsets_db.empty()) {
        scn.per_band_offsets_db.assign(scn.band_offsets.size(), 0.0);
    }
    scn.validate();
    return scn;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path.string() + "'", 0);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

} // namespace mbtd
