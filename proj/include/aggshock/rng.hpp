#pragma once

#include <cstdint>
#include <random>

namespace aggshock {

// SplitMix64 finalizer over (master, replication, stream).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication, std::uint64_t stream);

class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double operator()() { return dist_(engine_); }
  double operator()(double mean, double sd) { return mean + sd * dist_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace aggshock
