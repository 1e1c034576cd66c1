#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace multirecv {

// Explicitly seeded random source. Independent streams are derived from a
// (seed, stream id) pair so parallel workers stay reproducible per stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0) { reseed(seed, stream); }

  void reseed(std::uint64_t seed, std::uint64_t stream = 0) {
    seed_ = seed;
    stream_ = stream;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    engine_.seed(seq);
    normal_.reset();
  }

  // New generator on a different stream of the same seed.
  [[nodiscard]] Rng split(std::uint64_t stream) const { return Rng(seed_, stream_ * 0x100000001b3ULL + stream + 1); }

  // Uniform on the open interval (0, 1).
  double uniform() {
    double u;
    do {
      u = std::generate_canonical<double, 53>(engine_);
    } while (u <= 0.0);
    return u;
  }

  double normal() { return normal_(engine_); }

  double exponential() { return -std::log(uniform()); }

  double gamma(double shape, double rate) {
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(engine_);
  }

  std::uint64_t poisson(double rate) {
    std::poisson_distribution<std::uint64_t> dist(rate);
    return dist(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
};

}  // namespace multirecv
