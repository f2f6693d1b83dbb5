#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace optionforge {

// Errors. InvalidSpec covers bad construction parameters and configs,
// ContractViolation a broken precondition at call time, NumericalFailure a
// non-finite value produced by an update.
class InvalidSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Index type that cannot be mixed up with indices of another domain.
template <typename Tag>
class StrongIndex {
 public:
  constexpr StrongIndex() = default;
  constexpr explicit StrongIndex(std::size_t value) : value_(value) {}

  [[nodiscard]] constexpr std::size_t value() const { return value_; }

  friend constexpr auto operator<=>(StrongIndex, StrongIndex) = default;

 private:
  std::size_t value_ = 0;
};

using StateId = StrongIndex<struct StateTag>;
using ActionId = StrongIndex<struct ActionTag>;
using OptionId = StrongIndex<struct OptionTag>;

enum class Algorithm { vic, diayn, valor };

std::string to_string(Algorithm algorithm);
Algorithm algorithm_from_string(const std::string& name);

}  // namespace optionforge

template <typename Tag>
struct std::hash<optionforge::StrongIndex<Tag>> {
  std::size_t operator()(optionforge::StrongIndex<Tag> id) const noexcept {
    return std::hash<std::size_t>{}(id.value());
  }
};
