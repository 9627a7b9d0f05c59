#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace qdtm {

// Seeded generator with portable derived draws.
//
// std::mt19937_64 is fully specified by the standard, but the library
// distributions are not, so every draw here is derived from raw engine
// output. The same seed gives the same stream on every toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on {0, ..., n-1}; n must be positive.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller.
  double normal();

  // Draws an index with probability proportional to weights[i]. Weights must
  // be non-negative with a positive sum; returns weights.size() otherwise.
  std::size_t categorical(std::span<const double> weights);

  // Engine state as text, suitable for checkpoints.
  std::string save() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

// Mixes a base seed with a stream index so parallel chains get
// independent, reproducible streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace qdtm
