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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mbtd/scenario.hpp"

namespace mbtd {

struct BenchRow {
    std::string axis;  // "snr" or "snapshots"
    double axis_value = 0.0;
    std::string estimator;
    double rmse_s = 0.0; // NaN when every trial failed
    double crlb_s = 0.0;
    int trials = 0;      // trials that produced an estimate
    int failures = 0;

    bool operator==(const BenchRow&) const = default;
};

struct BenchResult {
    std::vector<BenchRow> rows;
};

/// Matches estimates to true delays greedily by nearest distance (one to
/// one) and returns the signed error of the estimate matched to the
/// smallest true delay.
double los_error(std::span<const double> truth, std::span<const double> estimate);

/// Seeded Monte-Carlo sweep. The output is a pure function of the scenario;
/// `threads` only changes the schedule.
BenchResult run_bench(const Scenario& scn, int threads = 1);

/// Root of the trial-averaged CRLB of the LOS delay at every axis point.
std::vector<double> crlb_axis(const Scenario& scn, int threads = 1);

// Serialization.
inline constexpr const char* kCsvHeader = "axis,axis_value,estimator,rmse_s,crlb_s,trials,failures";

std::string to_csv(const BenchResult& res);
BenchResult parse_csv(const std::string& text);
void emit_csv(const BenchResult& res, const std::filesystem::path& path);

/// Gnuplot-style data: one block per estimator plus a final "crlb" block.
/// "axis,axis_value,crlb_s" table for a bound curve from crlb_axis.
std::string crlb_csv(const Scenario& scn, const std::vector<double>& bound);

std::string to_plotdata(const BenchResult& res);
void emit_plotdata(const BenchResult& res, const std::filesystem::path& path);

/// Log-y line plot of RMSE and CRLB against the sweep axis.
std::string to_svg(const BenchResult& res, const std::string& title);
void emit_svg(const BenchResult& res, const std::filesystem::path& path, const std::string& title);

/// Writes through a temporary sibling file and renames it into place, so a
/// failed run never leaves partial output behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace mbtd
