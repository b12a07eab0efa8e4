// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ofo {

// splitmix64 finalizer; decorrelates derived stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream tags for the simulator's RNG layout: one master seed spawns
// per-agent online streams plus a dedicated stream for init vectors.
namespace stream {
inline constexpr std::uint64_t kAgent = 0x41;
inline constexpr std::uint64_t kInit = 0x49;
inline constexpr std::uint64_t kSampler = 0x53;
}  // namespace stream

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                    std::uint64_t index = 0) {
  return mix64(mix64(master ^ (tag << 32)) + index);
}

// Standard-normal stream via Box-Muller on top of mt19937_64. The C++
// standard leaves normal_distribution implementation-defined; generating
// the transform explicitly keeps traces reproducible across toolchains.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0,1], u2 in [0,1)
    const double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform in [0,1); used by samplers that need plain uniforms.
  double next_uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ofo
