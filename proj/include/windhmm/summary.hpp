#pragma once

// Posterior summaries and predictive densities from retained draws.
//
// Regimes are identified per draw by sorting the occupied states on
// lambda_y (ties on lambda_x).  Regime-level summaries use the draws whose
// regime count equals the posterior mode of R.

#include <map>
#include <vector>

#include <json.hpp>

#include "windhmm/circular.hpp"
#include "windhmm/gibbs.hpp"

namespace windhmm {

struct Estimate {
  double mean = 0.0;
  double lo = 0.0;  // 2.5% quantile
  double hi = 0.0;  // 97.5% quantile
};

/// Mean and equal-tail 95% interval (linear-interpolated quantiles).
Estimate summarize_values(std::vector<double> values);

/// Circular version for angles: the point estimate is the mean direction in
/// [0, 2pi) and the interval is lo <= mean <= hi on the unwrapped scale.
Estimate summarize_angles(const std::vector<double>& angles);

struct RegimeSummary {
  Estimate lambda_y, lambda_x, nu, mu, c;
  Estimate occupancy;
  double eta_positive = 0.0;    // P(eta = +1)
  std::vector<double> xi_pmf;  // over grid indices
};

struct PosteriorSummary {
  long draws = 0;
  int circle_points = 36;
  std::map<int, double> r_pmf;
  int r_mode = 0;
  long mode_draws = 0;
  std::vector<RegimeSummary> regimes;
  std::vector<std::vector<Estimate>> transition;
  Estimate rho, gamma, tau;
};

/// Occupied states reordered by lambda_y ascending, ties by lambda_x; pi
/// permuted alongside.
Draw relabel(const Draw& d);

/// Throws DomainError on an empty draw set.
PosteriorSummary summarize(const std::vector<Draw>& draws, const DiscreteCircle& circle);

nlohmann::json to_json(const Estimate& e);
nlohmann::json to_json(const PosteriorSummary& s, const DiscreteCircle& circle);

struct RegimeDensity {
  double calm = 0.0;               // P(x = calm)
  std::vector<double> direction;  // P(x = j), j on the grid
  std::vector<double> speed;      // P(y = v), v = 0..y_max
  double speed_tail = 0.0;        // P(y > y_max)
};

/// Monte Carlo average over the modal-R draws of each regime's predictive
/// laws.  The truncated IWP is renormalized before averaging.
std::vector<RegimeDensity> predictive_density(const std::vector<Draw>& draws,
                                              const DiscreteCircle& circle,
                                              const WindingConfig& cfg, int y_max = 50);

}  // namespace windhmm
