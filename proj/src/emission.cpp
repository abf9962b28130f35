#include "windhmm/emission.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "windhmm/errors.hpp"

namespace windhmm {

void validate(const ObservationCell& cell, const DiscreteCircle& circle) {
  if (cell.y_star && *cell.y_star < 0) throw DomainError("negative recorded speed");
  if (cell.x.is_grid() && !circle.contains(cell.x.index())) {
    throw DomainError("direction index outside the circle");
  }
  if (cell.x.is_calm() && cell.y_star && *cell.y_star >= 2) {
    throw DomainError("calm direction recorded with speed " + std::to_string(*cell.y_star));
  }
}

double w_success_prob(double lambda_y) {
  const double p = -std::expm1(-lambda_y) - lambda_y * std::exp(-lambda_y);
  return std::clamp(p, 0.0, 1.0);
}

namespace {

void check_consistent(int y, int w) {
  if (y < 0 || (w != 0 && w != 1) || (y >= 2) != (w == 1)) {
    throw DomainError("inconsistent speed/threshold pair y=" + std::to_string(y) +
                      " w=" + std::to_string(w));
  }
}

}  // namespace

double linear_logpmf(int y, int w, double lambda_y) {
  check_consistent(y, w);
  if (w == 1) return log_poisson(y, lambda_y) - std::log(w_success_prob(lambda_y));
  const double p1 = lambda_y / (1.0 + lambda_y);
  return y == 1 ? std::log(p1) : std::log1p(-p1);
}

double joint_yw_logpmf(int y, int w, double lambda_y) {
  check_consistent(y, w);
  return log_poisson(y, lambda_y);
}

double hurdle_prob(int y, double nu) { return y == 0 ? nu : 0.0; }

double obs_loglik(const Direction& x, std::optional<int> k, int y, int w, const RegimeParams& psi,
                  const DiscreteCircle& circle) {
  if (x.is_missing()) throw DomainError("obs_loglik needs a completed direction");
  const double base = joint_yw_logpmf(y, w, psi.lambda_y);
  const double hurdle = hurdle_prob(y, psi.nu);
  if (x.is_calm()) {
    if (y != 0) throw DomainError("calm direction requires zero speed");
    if (k) throw DomainError("calm direction has no winding number");
    return base + std::log(hurdle);
  }
  if (!k) throw DomainError("grid direction requires a winding number");
  return base + std::log1p(-hurdle) + iwp_augmented_logpmf(x.index(), *k, psi.iwp, circle);
}

double observed_loglik(const ObservationCell& cell, const RegimeParams& psi,
                       std::span<const double> log_iwp) {
  const double lam = psi.lambda_y;
  const double nu = psi.nu;
  const auto& x = cell.x;
  const auto log_dir = [&](int y) {
    if (x.is_missing()) return 0.0;
    if (x.is_calm()) return y == 0 ? std::log(nu) : kNegInf;
    return std::log1p(-hurdle_prob(y, nu)) + log_iwp[x.index()];
  };

  if (cell.y_star && *cell.y_star >= 2) return log_poisson(*cell.y_star, lam) + log_dir(*cell.y_star);

  if (cell.y_star) {
    // y in {0, 1}.
    if (x.is_missing()) return -lam + std::log1p(lam);
    if (x.is_calm()) return -lam + std::log(nu);
    return -lam + std::log(1.0 - nu + lam) + log_iwp[x.index()];
  }

  if (x.is_missing()) return 0.0;
  if (x.is_calm()) return -lam + std::log(nu);
  return std::log1p(-nu * std::exp(-lam)) + log_iwp[x.index()];
}

LatentCell sample_observation(const RegimeParams& psi, const DiscreteCircle& circle,
                              const WindingConfig& cfg, Rng& rng) {
  LatentCell out;
  out.y = sample_poisson(psi.lambda_y, rng);
  out.w = out.y >= 2 ? 1 : 0;
  if (out.y == 0 && sample_bernoulli(psi.nu, rng)) {
    out.x = Direction::calm();
    return out;
  }
  const IwpDraw d = iwp_sample(psi.iwp, circle, cfg, rng);
  out.x = Direction::at(d.x);
  out.k = d.k;
  return out;
}

}  // namespace windhmm
