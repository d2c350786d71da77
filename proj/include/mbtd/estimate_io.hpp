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
#include <optional>
#include <string>
#include <vector>

#include "mbtd/frontend_sim.hpp"

namespace mbtd {

/// On-disk channel measurement: all snapshots of one probing run, the path
/// count to estimate, and (for simulated files) the generating channel.
struct EstimateFile {
    std::vector<ChannelEstimate> snapshots;
    int paths = 0;
    std::optional<MultipathChannel> truth;
};

/// JSON document with `"schema": 1`. Doubles are written at round-trip
/// precision.
std::string to_json(const EstimateFile& file);
EstimateFile parse_estimate_file(const std::string& text);

void save_estimate_file(const EstimateFile& file, const std::filesystem::path& path);
EstimateFile load_estimate_file(const std::filesystem::path& path);

} // namespace mbtd
