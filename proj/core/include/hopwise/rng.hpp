#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace hopwise {

// Seeded generator with distribution code that does not depend on the
// standard library implementation, so runs are reproducible across
// toolchains. State serializes to text for checkpoints.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via the polar method.
  double normal();

  /// Derive an independent child seed.
  std::uint64_t split() { return next_u64() ^ 0x9e3779b97f4a7c15ULL; }

  std::string state() const;
  void set_state(const std::string& s);

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_ && a.has_spare_ == b.has_spare_ &&
           (!a.has_spare_ || a.spare_ == b.spare_);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hopwise
