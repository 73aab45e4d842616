#pragma once

#include <optional>
#include <span>

#include "mabs/common.hpp"

namespace mabs {

// Beta-Bernoulli arm. alpha/beta start at 1 (uniform prior); an exhausted
// arm keeps its counts but is skipped by selection.
struct ArmState {
  double alpha = 1.0;
  double beta = 1.0;
  bool exhausted = false;
};

// One draw from Beta(alpha, beta) via two gamma variates.
double sample_beta(double alpha, double beta, Rng& rng);

// Thompson step: sample a success-rate estimate per live arm, return the
// argmax. Ties (rare with continuous draws) break uniformly at random.
// nullopt when every arm is exhausted.
std::optional<std::size_t> select_arm(std::span<const ArmState> arms, Rng& rng);

// reward must be +1 or -1; updates the matching pseudo-count.
void update_arm(ArmState& arm, int reward);

inline double posterior_mean(const ArmState& arm) {
  return arm.alpha / (arm.alpha + arm.beta);
}

}  // namespace mabs
