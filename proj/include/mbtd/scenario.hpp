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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mbtd/frontend_sim.hpp"
#include "mbtd/pipeline.hpp"

namespace mbtd {

/// Invalid scenario file; carries the 1-based line the problem was found on
/// (0 when it concerns the document as a whole).
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line);
    int line() const noexcept { return line_; }

private:
    int line_;
};

enum class SweepAxis { snr, snapshots };

struct Scenario {
    std::string name;

    // Channel: fixed delay set, random gains per trial.
    std::vector<double> delays_s;
    bool rician_los = true;
    double rician_k_db = 5.0;
    bool fixed_gains = false;

    // Band plan.
    double f0_hz = 0.0;
    double bandwidth_hz = 0.0;
    int subcarriers = 0;
    std::vector<int> band_offsets;

    // Probe.
    double pilot_magnitude = 1.0;
    bool qpsk_pilots = false;

    // Sweep.
    SweepAxis axis = SweepAxis::snr;
    std::vector<double> snr_axis_db;   // axis = snr
    int snapshots = 10;                // axis = snr
    std::vector<int> snapshot_axis;    // axis = snapshots
    double snr_db = 10.0;              // axis = snapshots
    std::vector<double> per_band_offsets_db;

    int trials = 100;
    std::vector<EstimatorKind> estimators;
    int q_cols = 0;
    int grid_points = 0;
    bool weighted = true;
    bool column_weighting = false;
    std::uint64_t master_seed = 1;

    int paths() const noexcept { return static_cast<int>(delays_s.size()); }
    BandPlan plan() const;
    ProbeConfig probe() const;
    std::size_t axis_size() const noexcept;
    double axis_value(std::size_t index) const;

    /// Channel of one trial; gains depend on (master_seed, trial) only so
    /// every axis point sees the same realizations.
    MultipathChannel channel(int trial) const;

    /// Throws ConfigError (line 0) on cross-field inconsistencies.
    void validate() const;
};

/// Parses the flat `key = value` scenario format. `#` starts a comment,
/// lists are comma separated, and `schema = 1` is mandatory.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

} // namespace mbtd
