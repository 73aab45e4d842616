#include "mabs/bandit.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mabs {

double sample_beta(double alpha, double beta, Rng& rng) {
  if (!(alpha > 0) || !(beta > 0) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw std::invalid_argument("sample_beta: parameters must be finite and positive");
  std::gamma_distribution<double> ga(alpha, 1.0);
  std::gamma_distribution<double> gb(beta, 1.0);
  const double g1 = ga(rng);
  const double g2 = gb(rng);
  const double sum = g1 + g2;
  if (sum <= 0) return 0.5;  // both gammas underflowed to zero
  return g1 / sum;
}

std::optional<std::size_t> select_arm(std::span<const ArmState> arms, Rng& rng) {
  double best = -1.0;
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (arms[i].exhausted) continue;
    const double draw = sample_beta(arms[i].alpha, arms[i].beta, rng);
    if (draw > best) {
      best = draw;
      ties.assign(1, i);
    } else if (draw == best) {
      ties.push_back(i);
    }
  }
  if (ties.empty()) return std::nullopt;
  if (ties.size() == 1) return ties.front();
  std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
  return ties[pick(rng)];
}

void update_arm(ArmState& arm, int reward) {
  if (reward == 1)
    arm.alpha += 1.0;
  else if (reward == -1)
    arm.beta += 1.0;
  else
    throw std::invalid_argument("update_arm: reward must be +1 or -1");
}

}  // namespace mabs
