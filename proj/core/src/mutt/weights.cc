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
#include "probeopt/mutt/weights.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "probeopt/core/errors.h"

namespace probeopt::mutt {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[] = "MUTTCKPT1";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

void AddBlock(ParamSet& s, const std::string& name, int rows, int cols) {
  s.emplace(name, ad::Matrix::Zero(rows, cols));
}

void AddTrunk(ParamSet& s, const ModelConfig& a, int in_dim, int out_dim) {
  const int d = a.d_model;
  AddBlock(s, "enc.patch_w", a.patch_size * a.patch_size, d);
  AddBlock(s, "enc.patch_b", 1, d);
  AddBlock(s, "enc.pos", a.tokens(), d);
  AddBlock(s, "in.w", in_dim, d);
  AddBlock(s, "in.b", 1, d);
  for (int l = 0; l < a.layers; ++l) {
    const std::string p = "l" + std::to_string(l) + ".";
    for (const char* ln : {"ln_q", "ln_m", "ln_f"}) {
      AddBlock(s, p + ln + ".g", 1, d);
      AddBlock(s, p + ln + ".b", 1, d);
    }
    for (const char* w : {"wq", "wk", "wv", "wo"}) AddBlock(s, p + w, d, d);
    AddBlock(s, p + "bo", 1, d);
    AddBlock(s, p + "ff1.w", d, a.ffn_hidden);
    AddBlock(s, p + "ff1.b", 1, a.ffn_hidden);
    AddBlock(s, p + "ff2.w", a.ffn_hidden, d);
    AddBlock(s, p + "ff2.b", 1, d);
  }
  AddBlock(s, "out.ln.g", 1, d);
  AddBlock(s, "out.ln.b", 1, d);
  AddBlock(s, "out.w", d, out_dim);
  AddBlock(s, "out.b", 1, out_dim);
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void RandomInit(ParamSet& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (auto& [name, m] : s) {
    if (name.rfind("out.", 0) == 0 && !EndsWith(name, ".g")) continue;
    if (EndsWith(name, ".g")) {
      m.setOnes();
      continue;
    }
    if (EndsWith(name, ".b") || name == "enc.patch_b" || EndsWith(name, "bo")) {
      continue;
    }
    const double std = (name == "enc.pos" || name == "index_emb")
                           ? 0.1
                           : 1.0 / std::sqrt(static_cast<double>(m.rows()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = std * n01(rng);
    }
  }
}

void CheckScale(double s, const char* what) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw InvalidArgument(std::string("normalization scale '") + what +
                          "' must be finite and > 0");
  }
}

// Byte writer / reader for the container.
class Writer {
 public:
  template <typename T>
  void Put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out_.append(b, sizeof(T));
  }
  void PutString(const std::string& s) {
    Put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void PutDoubles(const double* p, std::size_t n) {
    out_.append(reinterpret_cast<const char*>(p), n * sizeof(double));
  }
  void Raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  void Need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw LoadError("checkpoint truncated");
  }
  template <typename T>
  T Get() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string GetString(std::size_t max_len = 1 << 20) {
    const auto n = Get<std::uint32_t>();
    if (n > max_len) throw LoadError("checkpoint string too long");
    Need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void GetDoubles(double* p, std::size_t n) {
    if (n > (in_.size() - pos_) / sizeof(double)) {
      throw LoadError("checkpoint truncated");
    }
    std::memcpy(p, in_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

std::uint64_t Fnv1a(const char* p, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(p[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void WriteSet(Writer& w, const std::string& prefix, const ParamSet& s) {
  for (const auto& [name, m] : s) {
    w.PutString(prefix + name);
    w.Put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    w.Put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    w.PutDoubles(m.data(), static_cast<std::size_t>(m.size()));
  }
}

void CheckSet(const ParamSet& got, const ParamSet& want, const char* which) {
  for (const auto& [name, m] : want) {
    auto it = got.find(name);
    if (it == got.end()) {
      throw LoadError(std::string(which) + " weights missing '" + name + "'");
    }
    if (it->second.rows() != m.rows() || it->second.cols() != m.cols()) {
      throw LoadError(std::string(which) + " weight '" + name + "' is " +
                      std::to_string(it->second.rows()) + "x" +
                      std::to_string(it->second.cols()) +
                      ", descriptor implies " + std::to_string(m.rows()) +
                      "x" + std::to_string(m.cols()));
    }
  }
  for (const auto& [name, m] : got) {
    if (!want.contains(name)) {
      throw LoadError(std::string(which) + " weights have unexpected '" +
                      name + "'");
    }
  }
}

std::vector<std::pair<std::string, Eigen::RowVectorXd>> NormChannels(
    const Normalization& n) {
  auto one = [](double v) { return Eigen::RowVectorXd::Constant(1, v); };
  return {{"pixel_mean", one(n.pixel_mean)},
          {"pixel_scale", one(n.pixel_scale)},
          {"context_mean", n.context_mean},
          {"context_scale", n.context_scale},
          {"z_mean", one(n.z_mean)},
          {"z_scale", one(n.z_scale)},
          {"fz_mean", one(n.fz_mean)},
          {"fz_scale", one(n.fz_scale)},
          {"duration_mean", one(n.duration_mean)},
          {"duration_scale", one(n.duration_scale)},
          {"depth_mean", one(n.depth_mean)},
          {"depth_scale", one(n.depth_scale)},
          {"feature_mean", n.feature_mean},
          {"feature_scale", n.feature_scale}};
}

void SetNormChannel(Normalization& n, const std::string& name,
                    const Eigen::RowVectorXd& v) {
  auto scalar = [&](double& dst) {
    if (v.size() != 1) throw LoadError("normalization '" + name + "' size");
    dst = v(0);
  };
  auto vec = [&](Eigen::RowVectorXd& dst) {
    if (v.size() != dst.size()) {
      throw LoadError("normalization '" + name + "' size");
    }
    dst = v;
  };
  if (name == "pixel_mean") return scalar(n.pixel_mean);
  if (name == "pixel_scale") return scalar(n.pixel_scale);
  if (name == "context_mean") return vec(n.context_mean);
  if (name == "context_scale") return vec(n.context_scale);
  if (name == "z_mean") return scalar(n.z_mean);
  if (name == "z_scale") return scalar(n.z_scale);
  if (name == "fz_mean") return scalar(n.fz_mean);
  if (name == "fz_scale") return scalar(n.fz_scale);
  if (name == "duration_mean") return scalar(n.duration_mean);
  if (name == "duration_scale") return scalar(n.duration_scale);
  if (name == "depth_mean") return scalar(n.depth_mean);
  if (name == "depth_scale") return scalar(n.depth_scale);
  if (name == "feature_mean") return vec(n.feature_mean);
  if (name == "feature_scale") return vec(n.feature_scale);
  throw LoadError("unknown normalization channel '" + name + "'");
}

}  // namespace

void ModelConfig::Validate() const {
  auto pos = [](int v, const char* what) {
    if (v <= 0) {
      throw InvalidArgument(std::string("model config: ") + what +
                            " must be > 0");
    }
  };
  pos(image_height, "image_height");
  pos(image_width, "image_width");
  pos(patch_size, "patch_size");
  pos(d_model, "d_model");
  pos(heads, "heads");
  pos(layers, "layers");
  pos(ffn_hidden, "ffn_hidden");
  pos(profile_len, "profile_len");
  pos(max_probes, "max_probes");
  if (image_height % patch_size != 0 || image_width % patch_size != 0) {
    throw InvalidArgument("model config: image size must be a multiple of "
                          "patch_size");
  }
  if (d_model % heads != 0) {
    throw InvalidArgument("model config: d_model must be divisible by heads");
  }
  if (profile_len < 2) {
    throw InvalidArgument("model config: profile_len must be >= 2");
  }
}

nlohmann::json ToJson(const ModelConfig& c) {
  return {{"image_height", c.image_height}, {"image_width", c.image_width},
          {"patch_size", c.patch_size},     {"d_model", c.d_model},
          {"heads", c.heads},               {"layers", c.layers},
          {"ffn_hidden", c.ffn_hidden},     {"profile_len", c.profile_len},
          {"max_probes", c.max_probes}};
}

ModelConfig ModelConfigFromJson(const nlohmann::json& j,
                                const ModelConfig& defaults) {
  if (!j.is_object()) throw InvalidArgument("model config must be an object");
  ModelConfig c = defaults;
  for (const auto& [key, v] : j.items()) {
    int* dst = key == "image_height"  ? &c.image_height
               : key == "image_width" ? &c.image_width
               : key == "patch_size"  ? &c.patch_size
               : key == "d_model"     ? &c.d_model
               : key == "heads"       ? &c.heads
               : key == "layers"      ? &c.layers
               : key == "ffn_hidden"  ? &c.ffn_hidden
               : key == "profile_len" ? &c.profile_len
               : key == "max_probes"  ? &c.max_probes
                                      : nullptr;
    if (dst == nullptr) {
      throw InvalidArgument("model config: unknown key '" + key + "'");
    }
    if (!v.is_number_integer()) {
      throw InvalidArgument("model config: '" + key + "' must be an integer");
    }
    *dst = v.get<int>();
  }
  c.Validate();
  return c;
}

void Normalization::Validate() const {
  CheckScale(pixel_scale, "pixel");
  CheckScale(z_scale, "z");
  CheckScale(fz_scale, "fz");
  CheckScale(duration_scale, "duration");
  CheckScale(depth_scale, "depth");
  if (context_mean.size() != kContextDim || context_scale.size() != kContextDim ||
      feature_mean.size() != kFeatureDim || feature_scale.size() != kFeatureDim) {
    throw InvalidArgument("normalization vectors have the wrong size");
  }
  for (Eigen::Index i = 0; i < context_scale.size(); ++i) {
    CheckScale(context_scale(i), "context");
  }
  for (Eigen::Index i = 0; i < feature_scale.size(); ++i) {
    CheckScale(feature_scale(i), "feature");
  }
  for (double m : {pixel_mean, z_mean, fz_mean, duration_mean, depth_mean}) {
    if (!std::isfinite(m)) throw InvalidArgument("non-finite normalization mean");
  }
  if (!context_mean.allFinite() || !feature_mean.allFinite()) {
    throw InvalidArgument("non-finite normalization mean");
  }
}

ParamSet ExpectedProbeShapes(const ModelConfig& arch) {
  arch.Validate();
  ParamSet s;
  AddTrunk(s, arch, kContextDim, arch.probe_outputs());
  return s;
}

ParamSet ExpectedSearchShapes(const ModelConfig& arch) {
  arch.Validate();
  ParamSet s;
  AddTrunk(s, arch, kFeatureDim, 1);
  AddBlock(s, "index_emb", arch.max_probes, arch.d_model);
  return s;
}

ParamSet InitProbeParams(const ModelConfig& arch, std::uint64_t seed) {
  ParamSet s = ExpectedProbeShapes(arch);
  RandomInit(s, seed);
  return s;
}

ParamSet InitSearchParams(const ModelConfig& arch, std::uint64_t seed) {
  ParamSet s = ExpectedSearchShapes(arch);
  RandomInit(s, seed);
  return s;
}

ModelWeights InitWeights(const ModelConfig& arch, std::uint64_t seed) {
  ModelWeights w;
  w.arch = arch;
  w.probe = InitProbeParams(arch, seed);
  w.search = InitSearchParams(arch, seed ^ 0x5bd1e995ULL);
  return w;
}

void CheckWeights(const ModelWeights& w) {
  try {
    w.arch.Validate();
    w.norm.Validate();
  } catch (const InvalidArgument& e) {
    throw LoadError(e.what());
  }
  CheckSet(w.probe, ExpectedProbeShapes(w.arch), "probe");
  CheckSet(w.search, ExpectedSearchShapes(w.arch), "search");
}

std::string SerializeCheckpoint(const ModelWeights& w) {
  CheckWeights(w);
  Writer out;
  out.Raw(kMagic, kMagicLen);
  const std::string desc = ToJson(w.arch).dump();
  out.Put<std::uint64_t>(desc.size());
  out.Raw(desc.data(), desc.size());
  out.Put<std::uint64_t>(w.probe.size() + w.search.size());
  WriteSet(out, "probe/", w.probe);
  WriteSet(out, "search/", w.search);
  const auto channels = NormChannels(w.norm);
  out.Put<std::uint64_t>(channels.size());
  for (const auto& [name, v] : channels) {
    out.PutString(name);
    out.Put<std::uint64_t>(static_cast<std::uint64_t>(v.size()));
    out.PutDoubles(v.data(), static_cast<std::size_t>(v.size()));
  }
  const std::uint64_t h = Fnv1a(out.str().data(), out.str().size());
  out.Put<std::uint64_t>(h);
  return std::move(out.str());
}

ModelWeights DeserializeCheckpoint(const std::string& bytes) {
  if (bytes.size() < kMagicLen ||
      bytes.compare(0, kMagicLen - 1, kMagic, kMagicLen - 1) != 0) {
    throw LoadError("not a model checkpoint (bad magic)");
  }
  if (bytes[kMagicLen - 1] != kMagic[kMagicLen - 1]) {
    throw LoadError(std::string("unsupported checkpoint version '") +
                    bytes[kMagicLen - 1] + "', expected '" +
                    kMagic[kMagicLen - 1] + "'");
  }
  if (bytes.size() < kMagicLen + 8) throw LoadError("checkpoint truncated");
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  if (Fnv1a(bytes.data(), bytes.size() - 8) != stored) {
    throw LoadError("checkpoint checksum mismatch (corrupt file)");
  }
  const std::string body = bytes.substr(0, bytes.size() - 8);
  Reader in(body);
  for (std::size_t i = 0; i < kMagicLen; ++i) in.Get<char>();

  ModelWeights w;
  const auto desc_len = in.Get<std::uint64_t>();
  in.Need(desc_len);
  try {
    w.arch = ModelConfigFromJson(
        nlohmann::json::parse(body.substr(in.pos(), desc_len)));
  } catch (const std::exception& e) {
    throw LoadError(std::string("bad architecture descriptor: ") + e.what());
  }
  for (std::uint64_t i = 0; i < desc_len; ++i) in.Get<char>();

  const auto n_arrays = in.Get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_arrays; ++i) {
    const std::string name = in.GetString();
    const auto rows = in.Get<std::uint64_t>();
    const auto cols = in.Get<std::uint64_t>();
    if (rows > (1u << 20) || cols > (1u << 20)) {
      throw LoadError("array '" + name + "' has implausible shape");
    }
    ad::Matrix m(static_cast<Eigen::Index>(rows),
                 static_cast<Eigen::Index>(cols));
    in.GetDoubles(m.data(), static_cast<std::size_t>(m.size()));
    ParamSet* dst = nullptr;
    std::string key;
    if (name.rfind("probe/", 0) == 0) {
      dst = &w.probe;
      key = name.substr(6);
    } else if (name.rfind("search/", 0) == 0) {
      dst = &w.search;
      key = name.substr(7);
    } else {
      throw LoadError("array '" + name + "' belongs to no model");
    }
    if (!dst->emplace(key, std::move(m)).second) {
      throw LoadError("duplicate array '" + name + "'");
    }
  }
  const auto n_channels = in.Get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_channels; ++i) {
    const std::string name = in.GetString();
    const auto n = in.Get<std::uint64_t>();
    if (n > 4096) throw LoadError("normalization '" + name + "' too long");
    Eigen::RowVectorXd v(static_cast<Eigen::Index>(n));
    in.GetDoubles(v.data(), static_cast<std::size_t>(n));
    SetNormChannel(w.norm, name, v);
  }
  if (in.pos() != body.size()) throw LoadError("trailing bytes in checkpoint");
  CheckWeights(w);
  return w;
}

void SaveCheckpoint(const ModelWeights& w, const std::filesystem::path& path) {
  const std::string bytes = SerializeCheckpoint(w);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing checkpoint " + path.string());
}

ModelWeights LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return DeserializeCheckpoint(ss.str());
}

ad::Var ParamBinder::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  auto p = params_.find(name);
  if (p == params_.end()) {
    throw InvalidArgument("model has no parameter '" + name + "'");
  }
  ad::Var v = trainable_ ? tape_.Variable(p->second) : tape_.Constant(p->second);
  bound_.emplace(name, v);
  return v;
}

void ParamBinder::AccumulateGrads(ParamSet& grads) const {
  for (const auto& [name, v] : bound_) {
    auto [it, fresh] = grads.try_emplace(name);
    if (fresh) it->second = ad::Matrix::Zero(v.rows(), v.cols());
    it->second += tape_.Grad(v);
  }
}

}  // namespace probeopt::mutt
