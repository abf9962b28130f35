#pragma once

// Regime-specific circular-linear law: Poisson wind speed split by the
// reliability threshold W = I(Y >= 2), and a hurdle distribution for the
// direction that places mass nu on the calm marker when Y = 0 and an IWP on
// the circle otherwise.

#include <optional>
#include <span>

#include "windhmm/circular.hpp"

namespace windhmm {

struct RegimeParams {
  double lambda_y = 0.0;
  IwpParams iwp;
  double nu = 0.0;
};

/// A direction value: a grid point, the calm marker, or not recorded.
class Direction {
 public:
  enum class Kind { grid, calm, missing };

  static Direction at(int index) { return Direction(Kind::grid, index); }
  static Direction calm() { return Direction(Kind::calm, -1); }
  static Direction missing() { return Direction(Kind::missing, -1); }

  Kind kind() const noexcept { return kind_; }
  bool is_grid() const noexcept { return kind_ == Kind::grid; }
  bool is_calm() const noexcept { return kind_ == Kind::calm; }
  bool is_missing() const noexcept { return kind_ == Kind::missing; }
  /// Grid index; only meaningful when is_grid().
  int index() const noexcept { return index_; }

  friend bool operator==(const Direction&, const Direction&) = default;

 private:
  Direction(Kind kind, int index) : kind_(kind), index_(index) {}
  Kind kind_;
  int index_;
};

/// One recorded timestep: speed y* (knots) and direction.
struct ObservationCell {
  std::optional<int> y_star;
  Direction x = Direction::missing();

  friend bool operator==(const ObservationCell&, const ObservationCell&) = default;
};

/// Throws DomainError if the cell is impossible under the model (calm with
/// a reliable speed, negative speed, off-grid index).
void validate(const ObservationCell& cell, const DiscreteCircle& circle);

/// Completed latent data of a timestep.  x is never missing here; k is set
/// exactly when x is a grid point.
struct LatentCell {
  int y = 0;
  int w = 0;
  std::optional<int> k;
  Direction x = Direction::calm();
};

/// P(W = 1) = 1 - e^{-lambda}(1 + lambda).
double w_success_prob(double lambda_y);

/// log P(y | w, lambda_y): zero-one-truncated Poisson when w = 1, Bernoulli
/// with success lambda/(1 + lambda) on {0, 1} when w = 0.
double linear_logpmf(int y, int w, double lambda_y);

/// log P(y, w | lambda_y); collapses to log Poisson(y; lambda_y).
double joint_yw_logpmf(int y, int w, double lambda_y);

/// nu* = nu I(y = 0).
double hurdle_prob(int y, double nu);

/// log P(x, k, y, w | psi) for a completed latent cell.
double obs_loglik(const Direction& x, std::optional<int> k, int y, int w, const RegimeParams& psi,
                  const DiscreteCircle& circle);

/// log P(recorded data | psi) with every unrecorded or unreliable quantity
/// (y when y* < 2 or absent, x when absent, k always) summed out.
/// log_iwp is iwp_log_pmf_table(psi.iwp, ...).
double observed_loglik(const ObservationCell& cell, const RegimeParams& psi,
                       std::span<const double> log_iwp);

LatentCell sample_observation(const RegimeParams& psi, const DiscreteCircle& circle,
                              const WindingConfig& cfg, Rng& rng);

}  // namespace windhmm
