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

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "mbtd/bench.hpp"

using namespace mbtd;

namespace {

Scenario tiny_scenario()
{
    return parse_scenario(R"(
schema = 1
name = tiny
delays_ns = 41.5, 131.5
rician_k_db = 10
bandwidth_hz = 20e6
subcarriers = 32
band_offsets = 0, 32, 96
snr_axis_db = 5, 25
snapshots = 3
trials = 6
estimators = proposed, esprit, mimusic, mresprit
master_seed = 17
)");
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("los_error - nearest-neighbour matching")
{
    const std::vector<double> truth{1.0, 2.0, 3.0};
    CHECK(los_error(truth, std::vector<double>{1.1, 2.0, 3.0}) == Catch::Approx(0.1));
    // order of the estimate does not matter
    CHECK(los_error(truth, std::vector<double>{3.0, 0.95, 2.0}) == Catch::Approx(-0.05));
    // the closest estimate to the LOS is taken by path 2 first
    CHECK(los_error(truth, std::vector<double>{1.9, 2.0, 5.0}) == Catch::Approx(0.9));
    // fewer estimates than paths: the LOS can end up unmatched
    CHECK(std::isnan(los_error(truth, std::vector<double>{2.0})));
    CHECK_THROWS_AS(los_error(truth, std::vector<double>{}), ArgumentError);
}

TEST_CASE("csv - header only for an empty result")
{
    CHECK(to_csv(BenchResult{}) == std::string(kCsvHeader) + "\n");
    CHECK(parse_csv(to_csv(BenchResult{})).rows.empty());
}

TEST_CASE("csv - round trip at full precision")
{
    BenchResult res;
    res.rows.push_back({"snr", 10.0, "proposed", 1.234567890123457e-11, 9.87654321098765e-12, 199, 1});
    res.rows.push_back({"snr", -2.5, "esprit", std::numeric_limits<double>::quiet_NaN(), 0.1 + 0.2, 0, 200});
    res.rows.push_back({"snapshots", 20.0, "mimusic", 5e-324, 1.7976931348623157e308, 3, 0});
    const std::string text = to_csv(res);
    CHECK(text.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
    const BenchResult back = parse_csv(text);
    REQUIRE(back.rows.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& a = res.rows[i];
        const auto& b = back.rows[i];
        CHECK(a.axis == b.axis);
        CHECK(a.axis_value == b.axis_value);
        CHECK(a.estimator == b.estimator);
        CHECK((a.rmse_s == b.rmse_s || (std::isnan(a.rmse_s) && std::isnan(b.rmse_s))));
        CHECK(a.crlb_s == b.crlb_s);
        CHECK(a.trials == b.trials);
        CHECK(a.failures == b.failures);
    }
    CHECK(to_csv(back) == text);
}

TEST_CASE("csv - malformed input")
{
    CHECK_THROWS_AS(parse_csv("axis,value\n"), ArgumentError);
    CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\nsnr,1,proposed,1e-9\n"), ArgumentError);
    CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\nsnr,x,proposed,1,1,1,0\n"), ArgumentError);
}

TEST_CASE("plotdata and svg - one series per estimator plus the bound")
{
    BenchResult res;
    for (const char* e : {"proposed", "mresprit", "esprit", "mimusic"}) {
        for (const double x : {0.0, 10.0}) {
            res.rows.push_back({"snr", x, e, 1e-10 / (1.0 + x), 5e-11 / (1.0 + x), 10, 0});
        }
    }
    const std::string pd = to_plotdata(res);
    std::size_t series = 0;
    for (std::size_t at = pd.find("# series "); at != std::string::npos; at = pd.find("# series ", at + 1)) {
        ++series;
    }
    CHECK(series == 5);
    CHECK(pd.find("# series crlb") != std::string::npos);

    const std::string svg = to_svg(res, "demo");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("proposed") != std::string::npos);
}

TEST_CASE("write_file_atomic - replaces content, leaves no temp file")
{
    const auto dir = std::filesystem::temp_directory_path() / "mbtd_atomic_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.csv";
    write_file_atomic(path, "first\n");
    write_file_atomic(path, "second\n");
    CHECK(slurp(path) == "second\n");
    CHECK_FALSE(std::filesystem::exists(dir / "out.csv.partial"));
    CHECK_THROWS(write_file_atomic(dir / "missing" / "x.csv", "x"));
    CHECK_FALSE(std::filesystem::exists(dir / "missing"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("run_bench - accounting and determinism")
{
    const Scenario scn = tiny_scenario();
    const BenchResult a = run_bench(scn, 1);
    REQUIRE(a.rows.size() == 2 * 4);
    for (const auto& row : a.rows) {
        CHECK(row.trials + row.failures == scn.trials);
        CHECK((std::isnan(row.rmse_s) || row.rmse_s >= 0.0));
        CHECK(row.crlb_s > 0.0);
        CHECK(row.axis == "snr");
    }
    CHECK(a.rows[0].estimator == "proposed");
    CHECK(a.rows[0].axis_value == 5.0);
    CHECK(a.rows[4].axis_value == 25.0);
    // the bound is shared by every estimator at one axis point
    CHECK(a.rows[0].crlb_s == a.rows[3].crlb_s);

    const BenchResult b = run_bench(scn, 3);
    CHECK(to_csv(a) == to_csv(b));

    Scenario other = scn;
    other.master_seed = 18;
    CHECK(to_csv(run_bench(other, 1)) != to_csv(a));
}

TEST_CASE("run_bench - noiseless single trial is exact")
{
    Scenario scn = tiny_scenario();
    scn.trials = 1;
    scn.snr_axis_db = {300.0};
    scn.estimators = {EstimatorKind::proposed};
    const BenchResult r = run_bench(scn, 1);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].failures == 0);
    CHECK(r.rows[0].rmse_s < 1e-9 * 50e-9);
}

TEST_CASE("crlb_axis - matches the bench column and ignores thread count")
{
    const Scenario scn = tiny_scenario();
    const auto one = crlb_axis(scn, 1);
    const auto four = crlb_axis(scn, 4);
    CHECK(one == four);
    const BenchResult r = run_bench(scn, 2);
    CHECK(one[0] == r.rows[0].crlb_s);
    CHECK(one[1] == r.rows[4].crlb_s);
    CHECK(one[1] < one[0]);
}
