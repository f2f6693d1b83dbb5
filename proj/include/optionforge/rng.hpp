#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace optionforge {

// Random stream owned by the caller. Uniform doubles are built directly from
// the engine bits so draws do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Draws an index from an (unnormalized) non-negative weight vector.
  std::size_t categorical(std::span<const double> weights);

  std::uint64_t next_u64() { return engine_(); }

  /// Engine state as text, for checkpoints.
  [[nodiscard]] std::string state() const;
  void restore(const std::string& state);

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::mt19937_64 engine_;
};

}  // namespace optionforge
