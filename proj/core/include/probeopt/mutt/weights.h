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
// Parameter storage for the probe and search models plus the checkpoint
// container.
//
// Checkpoint layout (all integers and floats little-endian):
//   "MUTTCKPT1"
//   u64 length, architecture descriptor as JSON text
//   u64 count, then per array: u32 name length, name, u64 rows, u64 cols,
//       rows*cols f64 in column-major order
//   u64 count, then per normalization channel: u32 name length, name,
//       u64 size, size f64
//   u64 FNV-1a hash of every preceding byte

#ifndef PROBEOPT_MUTT_WEIGHTS_H_
#define PROBEOPT_MUTT_WEIGHTS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "probeopt/autodiff/tape.h"

namespace probeopt::mutt {

using ParamSet = std::map<std::string, ad::Matrix>;

// Number of probe-context features: probe x/y, point_to x/y, v_descent,
// accel, f_contact.
inline constexpr int kContextDim = 7;
// Search-token features: probe x/y, offset dx/dy, predicted duration,
// contact depth, mean profile z, mean profile fz.
inline constexpr int kFeatureDim = 8;

struct ModelConfig {
  int image_height = 32;
  int image_width = 32;
  int patch_size = 4;
  int d_model = 64;
  int heads = 4;
  int layers = 2;
  int ffn_hidden = 128;
  int profile_len = 25;
  int max_probes = 20;

  int tokens() const {
    return (image_height / patch_size) * (image_width / patch_size);
  }
  int probe_outputs() const { return 2 * profile_len + 2; }
  // Throws InvalidArgument on inconsistent sizes.
  void Validate() const;

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json ToJson(const ModelConfig& c);
ModelConfig ModelConfigFromJson(const nlohmann::json& j,
                                const ModelConfig& defaults = {});

// Dataset statistics. Inputs are mapped to (v - mean) / scale; normalized
// outputs are mapped back with v * scale + mean.
struct Normalization {
  double pixel_mean = 0.0, pixel_scale = 1.0;
  Eigen::RowVectorXd context_mean = Eigen::RowVectorXd::Zero(kContextDim);
  Eigen::RowVectorXd context_scale = Eigen::RowVectorXd::Ones(kContextDim);
  double z_mean = 0.0, z_scale = 1.0;
  double fz_mean = 0.0, fz_scale = 1.0;
  double duration_mean = 0.0, duration_scale = 1.0;
  double depth_mean = 0.0, depth_scale = 1.0;
  Eigen::RowVectorXd feature_mean = Eigen::RowVectorXd::Zero(kFeatureDim);
  Eigen::RowVectorXd feature_scale = Eigen::RowVectorXd::Ones(kFeatureDim);

  // Throws InvalidArgument unless every scale is finite and > 0.
  void Validate() const;
  bool operator==(const Normalization&) const = default;
};

struct ModelWeights {
  ModelConfig arch;
  ParamSet probe;   // probe-level model
  ParamSet search;  // search-level model
  Normalization norm;
};

// Names and shapes every weight set must have for `arch`.
ParamSet ExpectedProbeShapes(const ModelConfig& arch);
ParamSet ExpectedSearchShapes(const ModelConfig& arch);

// Random projections (normal, std 1/sqrt(fan_in)), unit layer-norm gains,
// zero biases and zero output heads.
ModelWeights InitWeights(const ModelConfig& arch, std::uint64_t seed);
ParamSet InitProbeParams(const ModelConfig& arch, std::uint64_t seed);
ParamSet InitSearchParams(const ModelConfig& arch, std::uint64_t seed);

// Throws LoadError when arrays are missing, extra or mis-shaped, or when
// the normalization is invalid.
void CheckWeights(const ModelWeights& w);

void SaveCheckpoint(const ModelWeights& w, const std::filesystem::path& path);
ModelWeights LoadCheckpoint(const std::filesystem::path& path);
std::string SerializeCheckpoint(const ModelWeights& w);
ModelWeights DeserializeCheckpoint(const std::string& bytes);

// Binds a ParamSet to tape leaves on first use, so each forward pass only
// records the arrays it touches.
class ParamBinder {
 public:
  ParamBinder(ad::Tape& tape, const ParamSet& params, bool trainable)
      : tape_(tape), params_(params), trainable_(trainable) {}

  ad::Var operator()(const std::string& name);
  ad::Tape& tape() { return tape_; }

  // Adds the gradient of every bound array into `grads`, creating zero
  // entries as needed.
  void AccumulateGrads(ParamSet& grads) const;

 private:
  ad::Tape& tape_;
  const ParamSet& params_;
  bool trainable_;
  std::map<std::string, ad::Var> bound_;
};

}  // namespace probeopt::mutt

#endif  // PROBEOPT_MUTT_WEIGHTS_H_
