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
// Subcommands of the probeopt tool. Each one is a pure function of the
// configuration and flags to its output files.
//
// Exit codes: 0 success, 1 verification or runtime failure, 2 usage,
// configuration, missing input or unwritable output.

#ifndef PROBEOPT_HARNESS_COMMANDS_H_
#define PROBEOPT_HARNESS_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "probeopt/harness/config.h"

namespace probeopt::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Command-line flags. Set values override the matching config entries.
struct CommandFlags {
  std::optional<std::filesystem::path> config;
  bool print_config = false;
  std::optional<std::size_t> n;                  // collect.n
  std::optional<std::uint64_t> seed;             // seed
  std::optional<std::filesystem::path> out;      // paths.dataset
  std::string stage = "both";                    // train
  bool oracle = false;                           // eval, optimize
  std::optional<std::size_t> n_envs;             // optimize.n_envs
  std::optional<std::vector<std::size_t>> sizes; // ablate.sizes
  std::optional<std::string> corrupt_op;         // gradcheck negative control
};

// Loads the config file and applies the flag overrides.
HarnessConfig EffectiveConfig(const CommandFlags& flags);

// Output files of each command, relative to the configured directories.
inline constexpr const char* kProbeCheckpoint = "probe.ckpt";
inline constexpr const char* kSearchCheckpoint = "search.ckpt";

int CmdCollect(const HarnessConfig& cfg, std::ostream& out);
int CmdTrain(const HarnessConfig& cfg, std::string_view stage,
             std::ostream& out);
int CmdEval(const HarnessConfig& cfg, bool oracle, std::ostream& out);
int CmdOptimize(const HarnessConfig& cfg, bool oracle, std::ostream& out);
int CmdAblate(const HarnessConfig& cfg, std::ostream& out);
int CmdGradcheck(const HarnessConfig& cfg,
                 const std::optional<std::string>& corrupt_op,
                 std::ostream& out);

// Dispatches `command`, mapping exceptions to exit codes and messages on
// `err`.
int RunCommand(std::string_view command, const CommandFlags& flags,
               std::ostream& out, std::ostream& err);

}  // namespace probeopt::harness

#endif  // PROBEOPT_HARNESS_COMMANDS_H_
