#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

namespace empo2 {

// Derives an independent child seed from a parent seed and a path of stream
// ids. Used to fan one master seed out to env, mode, rollout and eval streams.
std::uint64_t derive_seed(std::uint64_t parent,
                          std::initializer_list<std::uint64_t> path);

// Seeded generator with platform-independent conversions. The engine is
// std::mt19937_64; only its raw output is used, never std:: distributions,
// whose results differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  // Standard normal via Box-Muller (one value per call).
  double normal();

  // Engine state as text; restoring it resumes the exact stream.
  std::string state() const;
  void set_state(const std::string& text);

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace empo2
