// Copyright 2026 The ProbeOpt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// NDJSON persistence of execution records and JSON form of SimConfig.
//
// One record per line:
//   {"seed", "env": {hx, hy, mx, my}, "params": {...}, "image": [f32...],
//    "trajectory": {t[], x[], y[], z[], fz[]}, "probe_boundaries": [[s, e]...],
//    "success"}
// Environment constants not listed (capture radius, stiffness, ...) come from
// the SimConfig the dataset was collected with.

#ifndef PROBEOPT_SIMENV_RECORD_IO_H_
#define PROBEOPT_SIMENV_RECORD_IO_H_

#include <nlohmann/json.hpp>

#include "probeopt/simenv/simulator.h"

namespace probeopt::sim {

nlohmann::json ToJson(const SimConfig& cfg);
SimConfig SimConfigFromJson(const nlohmann::json& j,
                            const SimConfig& defaults = {});

nlohmann::json RecordToJson(const ExecutionRecord& rec);
// Throws LoadError on malformed input.
ExecutionRecord RecordFromJson(const nlohmann::json& j, const SimConfig& cfg);

}  // namespace probeopt::sim

#endif  // PROBEOPT_SIMENV_RECORD_IO_H_
