// Copyright 2026 The HOLA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HOLA_NETWORK_HPP
#define HOLA_NETWORK_HPP

// Small feed-forward policy/value network stored as one flat parameter vector.
// Layout per layer: row-major weights (out x in) followed by biases (out).
// Hidden layers use tanh; the linear output layer emits
// [action mean, raw log-std, state value].

#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hola/arena.hpp"
#include "hola/core.hpp"

namespace hola {

inline constexpr int kSlotFeatures = 5;
inline constexpr int kNetOutputs = 3;
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kInitialLogStd = -0.5;

inline int feature_width(int teammate_slots, int opponent_slots) {
  return 5 + kSlotFeatures * (teammate_slots + opponent_slots) + 6;
}

inline int feature_width(const ArenaConfig& c) { return feature_width(c.num_pursuers - 1, c.num_evaders); }

// Flattens an observation into network inputs. Directions are given in the
// world frame (bearing + own heading) because actions are absolute headings.
inline std::vector<double> observation_features(const Observation& o) {
  const double range = o.perception_range > 0.0 ? o.perception_range : 1.0;
  std::vector<double> f;
  f.reserve(feature_width(static_cast<int>(o.teammates.size()), static_cast<int>(o.opponents.size())));
  f.push_back(o.self_position.x);
  f.push_back(o.self_position.y);
  f.push_back(std::cos(o.self_heading));
  f.push_back(std::sin(o.self_heading));
  f.push_back(o.self_active ? 1.0 : 0.0);
  auto slot = [&](const SlotView& s) {
    const bool seen = s.visible && s.active;
    const double dir = s.bearing + o.self_heading;
    f.push_back(seen ? s.distance / range : 1.0);
    f.push_back(seen ? std::cos(dir) : 0.0);
    f.push_back(seen ? std::sin(dir) : 0.0);
    f.push_back(s.active ? 1.0 : 0.0);
    f.push_back(s.visible ? 1.0 : 0.0);
  };
  for (const auto& s : o.teammates) slot(s);
  for (const auto& s : o.opponents) slot(s);
  auto rb = [&](const RangeBearing& r) {
    const double dir = r.bearing + o.self_heading;
    f.push_back(r.distance / range);
    f.push_back(r.visible ? std::cos(dir) : 0.0);
    f.push_back(r.visible ? std::sin(dir) : 0.0);
  };
  rb(o.nearest_obstacle);
  rb(o.nearest_wall);
  return f;
}

struct PolicyParameters {
  std::vector<int> shape;  // input width, hidden widths..., kNetOutputs
  std::vector<double> values;

  static std::size_t count_for(const std::vector<int>& shape) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < shape.size(); ++l)
      n += static_cast<std::size_t>(shape[l]) * shape[l + 1] + shape[l + 1];
    return n;
  }

  static std::vector<int> default_shape(int input_width) { return {input_width, 64, 64, kNetOutputs}; }

  // Xavier-uniform hidden layers; small output weights so the initial policy
  // is close to mean 0 (action 0.5) with log-std about -0.5.
  static PolicyParameters initialize(std::vector<int> shape, std::uint64_t seed) {
    require(shape.size() >= 2 && shape.back() == kNetOutputs, "network must end in 3 outputs");
    for (int w : shape) require(w > 0, "layer widths must be positive");
    PolicyParameters p;
    p.shape = std::move(shape);
    p.values.assign(count_for(p.shape), 0.0);
    Rng rng(seed);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < p.shape.size(); ++l) {
      const int in = p.shape[l], out = p.shape[l + 1];
      const bool last = l + 2 == p.shape.size();
      const double bound = std::sqrt(6.0 / (in + out)) * (last ? 0.01 : 1.0);
      for (int k = 0; k < in * out; ++k) p.values[off + k] = uniform(rng, -bound, bound);
      off += static_cast<std::size_t>(in) * out;
      if (last) p.values[off + 1] = std::atanh(2.0 * (kInitialLogStd - kLogStdMin) / (kLogStdMax - kLogStdMin) - 1.0);
      off += out;
    }
    return p;
  }

  int input_width() const { return shape.empty() ? 0 : shape.front(); }

  void check() const {
    require(shape.size() >= 2 && shape.back() == kNetOutputs, "bad network shape");
    require(values.size() == count_for(shape), "parameter count does not match shape");
  }

  friend bool operator==(const PolicyParameters&, const PolicyParameters&) = default;
};

struct NetOutput {
  double mean = 0.0;
  double log_std_raw = 0.0;
  double log_std = 0.0;
  double value = 0.0;
};

// Maps the raw head smoothly into [kLogStdMin, kLogStdMax].
inline double bounded_log_std(double raw) {
  return kLogStdMin + 0.5 * (kLogStdMax - kLogStdMin) * (std::tanh(raw) + 1.0);
}

struct ForwardCache {
  std::vector<std::vector<double>> activations;  // input, then each hidden layer post-tanh
  NetOutput out;
};

inline NetOutput forward(const PolicyParameters& p, std::span<const double> x, ForwardCache* cache = nullptr) {
  require(static_cast<int>(x.size()) == p.input_width(), "observation width does not match network");
  std::vector<double> cur(x.begin(), x.end());
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(cur);
  }
  std::size_t off = 0;
  const std::size_t layers = p.shape.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = p.shape[l], out = p.shape[l + 1];
    const double* w = p.values.data() + off;
    const double* b = w + static_cast<std::size_t>(in) * out;
    std::vector<double> next(out);
    for (int o = 0; o < out; ++o) {
      double s = b[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) s += row[i] * cur[i];
      next[o] = l + 1 < layers ? std::tanh(s) : s;
    }
    off += static_cast<std::size_t>(in) * out + out;
    cur = std::move(next);
    if (cache && l + 1 < layers) cache->activations.push_back(cur);
  }
  NetOutput r{cur[0], cur[1], bounded_log_std(cur[1]), cur[2]};
  if (cache) cache->out = r;
  return r;
}

// Accumulates d(loss)/d(params) into grad given the loss gradient with respect to
// the mean, the bounded log-std and the value.
inline void backward(const PolicyParameters& p, const ForwardCache& cache, double d_mean, double d_log_std,
                     double d_value, std::span<double> grad) {
  require(grad.size() == p.values.size(), "gradient buffer size mismatch");
  const double t = std::tanh(cache.out.log_std_raw);
  std::vector<double> delta{d_mean, d_log_std * 0.5 * (kLogStdMax - kLogStdMin) * (1.0 - t * t), d_value};
  const std::size_t layers = p.shape.size() - 1;
  std::vector<std::size_t> offsets(layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = off;
    off += static_cast<std::size_t>(p.shape[l]) * p.shape[l + 1] + p.shape[l + 1];
  }
  for (std::size_t l = layers; l-- > 0;) {
    const int in = p.shape[l], out = p.shape[l + 1];
    const auto& a = cache.activations[l];
    const double* w = p.values.data() + offsets[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + static_cast<std::size_t>(in) * out;
    std::vector<double> prev(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      gb[o] += d;
      double* grow = gw + static_cast<std::size_t>(o) * in;
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) {
        grow[i] += d * a[i];
        prev[i] += d * row[i];
      }
    }
    if (l > 0)
      for (int i = 0; i < in; ++i) prev[i] *= 1.0 - a[i] * a[i];
    delta = std::move(prev);
  }
}

inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double squash(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// log |d squash / du| = log s(u) + log(1 - s(u)).
inline double log_squash_jacobian(double u) { return -softplus(-u) - softplus(u); }

inline double gaussian_log_density(double u, double mean, double log_std) {
  const double z = (u - mean) * std::exp(-log_std);
  return -0.5 * z * z - log_std - 0.5 * std::log(kTwoPi);
}

// Log density of the squashed action a = squash(u) when u ~ N(mean, std).
inline double squashed_log_prob(double u, double mean, double log_std) {
  return gaussian_log_density(u, mean, log_std) - log_squash_jacobian(u);
}

struct ActSample {
  Action action;
  double pre_action = 0.0;
  double log_prob = 0.0;
  double value = 0.0;
  double mean = 0.0;
  double log_std = 0.0;
};

inline ActSample parametric_act_features(const PolicyParameters& p, std::span<const double> features, Rng& rng) {
  const NetOutput out = forward(p, features);
  ActSample s;
  s.mean = out.mean;
  s.log_std = out.log_std;
  s.value = out.value;
  s.pre_action = out.mean + std::exp(out.log_std) * standard_normal(rng);
  s.action = Action(squash(s.pre_action));
  s.log_prob = squashed_log_prob(s.pre_action, out.mean, out.log_std);
  return s;
}

// Samples an action, its log-probability (including the squash correction) and
// the value estimate.
inline ActSample parametric_act(const PolicyParameters& p, const Observation& obs, Rng& rng) {
  const auto f = observation_features(obs);
  return parametric_act_features(p, f, rng);
}

// Zero-variance limit: squash(mean).
inline ActSample parametric_mode(const PolicyParameters& p, const Observation& obs) {
  const auto f = observation_features(obs);
  const NetOutput out = forward(p, f);
  ActSample s;
  s.mean = s.pre_action = out.mean;
  s.log_std = out.log_std;
  s.value = out.value;
  s.action = Action(squash(out.mean));
  return s;
}

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  PolicyParameters params;
  std::uint64_t config_hash = 0;
};

// Text checkpoint: versioned header, shape, config hash, then one hex-float per
// line so parameters survive the round trip bit-exactly.
inline void save_checkpoint(const std::string& path, const PolicyParameters& p, std::uint64_t config_hash) {
  p.check();
  std::ofstream os(path);
  if (!os) throw FileError("cannot write checkpoint " + path);
  os << "hola-checkpoint " << kCheckpointVersion << "\nshape";
  for (int w : p.shape) os << ' ' << w;
  os << "\nconfig_hash " << hex64(config_hash) << "\ncount " << p.values.size() << '\n';
  for (double v : p.values) os << hexfloat(v) << '\n';
  if (!os) throw FileError("failed writing checkpoint " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FileError("cannot open checkpoint " + path);
  auto fail = [&](const std::string& why) -> FileError { return FileError("checkpoint " + path + ": " + why); };
  std::string line, tag;
  Checkpoint ck;
  int version = 0;
  if (!std::getline(is, line) || !(std::istringstream(line) >> tag >> version) || tag != "hola-checkpoint")
    throw fail("missing header");
  if (version != kCheckpointVersion) throw fail("unsupported version " + std::to_string(version));
  if (!std::getline(is, line)) throw fail("missing shape");
  {
    std::istringstream ss(line);
    ss >> tag;
    if (tag != "shape") throw fail("missing shape");
    int w;
    while (ss >> w) ck.params.shape.push_back(w);
  }
  std::string hex;
  if (!std::getline(is, line) || !(std::istringstream(line) >> tag >> hex) || tag != "config_hash")
    throw fail("missing config hash");
  ck.config_hash = std::stoull(hex, nullptr, 16);
  std::size_t count = 0;
  if (!std::getline(is, line) || !(std::istringstream(line) >> tag >> count) || tag != "count")
    throw fail("missing count");
  ck.params.values.reserve(count);
  while (ck.params.values.size() < count && std::getline(is, line)) {
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) throw fail("bad value on line " + std::to_string(ck.params.values.size() + 5));
    ck.params.values.push_back(v);
  }
  if (ck.params.values.size() != count) throw fail("truncated parameter list");
  try {
    ck.params.check();
  } catch (const ContractError& e) {
    throw fail(e.what());
  }
  return ck;
}

}  // namespace hola

#endif  // HOLA_NETWORK_HPP
