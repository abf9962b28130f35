#include "windhmm/circular.hpp"

#include <cmath>
#include <sstream>

#include "windhmm/errors.hpp"

namespace windhmm {

DiscreteCircle::DiscreteCircle(int points) : points_(points) {
  if (points < 2) {
    throw ConfigError("discrete circle needs at least 2 points, got " + std::to_string(points));
  }
}

int compute_k_max(double lambda_max, const DiscreteCircle& circle) {
  if (!(lambda_max > 0.0)) throw ConfigError("lambda_max must be positive");
  const double l = circle.size();
  const double v = 3.0 * std::sqrt(lambda_max) / l + lambda_max / l - 0.5;
  return std::max(0, static_cast<int>(std::ceil(v)));
}

WindingConfig WindingConfig::from_lambda_max(double lambda_max, const DiscreteCircle& circle) {
  return WindingConfig{lambda_max, compute_k_max(lambda_max, circle)};
}

int grid_index(double angle, const DiscreteCircle& circle) {
  if (!std::isfinite(angle)) throw GridError("angle is not finite");
  double reduced = std::fmod(angle, kTwoPi);
  if (reduced < 0.0) reduced += kTwoPi;
  const double pos = reduced / circle.step();
  const long nearest = std::lround(pos);
  if (std::abs(reduced - static_cast<double>(nearest) * circle.step()) >= 1e-9) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "angle " << angle << " is not on the " << circle.size() << "-point circle";
    throw GridError(msg.str());
  }
  return circle.wrap(nearest);
}

void validate(const IwpParams& p, const DiscreteCircle& circle) {
  if (p.eta != 1 && p.eta != -1) throw DomainError("eta must be -1 or +1");
  if (!circle.contains(p.xi)) throw DomainError("xi is not a grid index");
  if (!(p.lambda_x >= 0.0)) throw DomainError("lambda_x must be nonnegative");
}

long unwrapped_index(int x, int k, const IwpParams& p, const DiscreteCircle& circle) {
  return circle.wrap(static_cast<long>(p.eta) * x - p.xi) + static_cast<long>(k) * circle.size();
}

double iwp_augmented_logpmf(int x, int k, const IwpParams& p, const DiscreteCircle& circle) {
  return log_poisson(unwrapped_index(x, k, p, circle), p.lambda_x);
}

namespace {

void check_bound(const IwpParams& p, const WindingConfig& cfg) {
  if (p.lambda_x > cfg.lambda_max) {
    throw ConfigError("lambda_x " + std::to_string(p.lambda_x) + " exceeds lambda_max " +
                      std::to_string(cfg.lambda_max));
  }
}

}  // namespace

double iwp_pmf(int x, const IwpParams& p, const DiscreteCircle& circle, const WindingConfig& cfg) {
  check_bound(p, cfg);
  double total = 0.0;
  for (int k = 0; k <= cfg.k_max; ++k) total += std::exp(iwp_augmented_logpmf(x, k, p, circle));
  return total;
}

std::vector<double> iwp_log_pmf_table(const IwpParams& p, const DiscreteCircle& circle,
                                      const WindingConfig& cfg) {
  check_bound(p, cfg);
  std::vector<double> out(circle.size());
  std::vector<double> terms(cfg.k_max + 1);
  for (int x = 0; x < circle.size(); ++x) {
    for (int k = 0; k <= cfg.k_max; ++k) terms[k] = iwp_augmented_logpmf(x, k, p, circle);
    out[x] = log_sum_exp(terms);
  }
  return out;
}

double iwp_mean(const IwpParams& p, const DiscreteCircle& circle) {
  const double mu = p.eta * circle.angle(p.xi) + p.lambda_x * std::sin(p.eta * circle.step());
  double r = std::fmod(mu, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r;
}

double iwp_concentration(const IwpParams& p, const DiscreteCircle& circle) {
  return std::exp(-p.lambda_x * (1.0 - std::cos(circle.step())));
}

IwpDraw iwp_sample(const IwpParams& p, const DiscreteCircle& circle, const WindingConfig& cfg,
                   Rng& rng) {
  check_bound(p, cfg);
  const long limit = cfg.max_unwrapped(circle);
  long q = 0;
  do {
    q = sample_poisson(p.lambda_x, rng);
  } while (q > limit);
  const int l = circle.size();
  return IwpDraw{circle.wrap(static_cast<long>(p.eta) * (q + p.xi)), static_cast<int>(q / l)};
}

}  // namespace windhmm
