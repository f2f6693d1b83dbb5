#include "optionforge/rng.hpp"

#include <locale>
#include <sstream>
#include <stdexcept>

#include "optionforge/types.hpp"

namespace optionforge {

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) {
    throw ContractViolation("categorical: weights must have a positive sum");
  }
  const double u = uniform() * total;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cumulative += weights[i];
    last_positive = i;
    if (u < cumulative) return i;
  }
  // Rounding can leave u just above the accumulated total.
  return last_positive;
}

std::string Rng::state() const {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << engine_;
  return out.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream in(state);
  in.imbue(std::locale::classic());
  in >> engine_;
  if (!in) throw InvalidSpecError("rng: malformed engine state");
}

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::vic: return "vic";
    case Algorithm::diayn: return "diayn";
    case Algorithm::valor: return "valor";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "vic") return Algorithm::vic;
  if (name == "diayn") return Algorithm::diayn;
  if (name == "valor") return Algorithm::valor;
  throw InvalidSpecError("unknown algorithm '" + name + "'");
}

}  // namespace optionforge
