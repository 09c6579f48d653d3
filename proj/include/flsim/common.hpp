#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace flsim {

// Flat parameter vector: the single currency for model weights, local
// updates, deviations, poisons and aggregates. Length is fixed by the
// ModelSpec and never changes across devices or rounds.
using ParamVector = std::vector<double>;

// Penultimate-layer activations; length d = last hidden width.
using FeatureVector = std::vector<double>;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic seed for a named sub-stream of a master seed. The path
// encodes a stream id plus indices such as round and device, so distinct
// streams never share RNG state.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t p : path) {
    h = splitmix64(h ^ splitmix64(p ^ 0x6a09e667f3bcc909ULL));
  }
  return h;
}

// Stream ids used by the experiment harness.
namespace seed_stream {
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kPartition = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kMalicious = 4;
inline constexpr std::uint64_t kTrain = 5;
inline constexpr std::uint64_t kAttack = 6;
inline constexpr std::uint64_t kProbe = 7;
}  // namespace seed_stream

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_same_length(const std::vector<double>& a,
                                const std::vector<double>& b,
                                const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(what);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  require_same_length(a, b, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

}  // namespace flsim
