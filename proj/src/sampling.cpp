#include "windhmm/sampling.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <string>

#include "windhmm/errors.hpp"

namespace windhmm {

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double log_sum_exp(std::span<const double> v) {
  double hi = kNegInf;
  for (double x : v) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

double log_factorial(long n) {
  static const std::vector<double> table = [] {
    std::vector<double> t(4096);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::lgamma(static_cast<double>(i) + 1.0);
    return t;
  }();
  if (n < static_cast<long>(table.size())) return table[n];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

double log_poisson(long m, double lambda) {
  if (m < 0) return kNegInf;
  if (lambda == 0.0) return m == 0 ? 0.0 : kNegInf;
  return static_cast<double>(m) * std::log(lambda) - lambda - log_factorial(m);
}

double uniform_open(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  do {
    u = unif(rng);
  } while (u <= 0.0 || u >= 1.0);
  return u;
}

int sample_poisson(double lambda, Rng& rng) {
  if (lambda <= 0.0) return 0;
  std::poisson_distribution<int> dist(lambda);
  return dist(rng);
}

int sample_binomial(int n, double p, Rng& rng) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<int> dist(n, p);
  return dist(rng);
}

bool sample_bernoulli(double p, Rng& rng) { return uniform_open(rng) < p; }

double sample_log_gamma(double shape, Rng& rng) {
  if (!(shape > 0.0)) {
    if (shape == 0.0) return kNegInf;
    throw DomainError("gamma shape must be nonnegative, got " + std::to_string(shape));
  }
  if (shape >= 1.0) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return std::log(dist(rng));
  }
  // G(a) = G(a + 1) * U^(1/a), kept in log space so tiny shapes survive.
  std::gamma_distribution<double> dist(shape + 1.0, 1.0);
  return std::log(dist(rng)) + std::log(uniform_open(rng)) / shape;
}

double sample_gamma(double shape, double rate, Rng& rng) {
  if (!(rate > 0.0)) throw DomainError("gamma rate must be positive, got " + std::to_string(rate));
  return std::exp(sample_log_gamma(shape, rng)) / rate;
}

double sample_beta(double a, double b, Rng& rng) {
  if (a == 0.0 && b == 0.0) throw DomainError("beta with both parameters zero");
  const double la = sample_log_gamma(a, rng);
  const double lb = sample_log_gamma(b, rng);
  if (la == kNegInf) return 0.0;
  if (lb == kNegInf) return 1.0;
  return 1.0 / (1.0 + std::exp(lb - la));
}

std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng) {
  std::vector<double> out(alpha.size());
  double hi = kNegInf;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = sample_log_gamma(alpha[i], rng);
    hi = std::max(hi, out[i]);
  }
  if (hi == kNegInf) throw DomainError("dirichlet needs at least one positive concentration");
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - hi);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

double sample_truncated_gamma(double shape, double rate, double upper, Rng& rng) {
  if (!(shape > 0.0) || !(rate > 0.0) || !(upper > 0.0)) {
    throw DomainError("truncated gamma needs positive shape, rate and bound");
  }
  namespace bm = boost::math;
  const double c = rate * upper;
  const double lower_mass = bm::gamma_p(shape, c);
  double x = 0.0;
  if (lower_mass >= 0.5) {
    const double q_c = bm::gamma_q(shape, c);
    const double v = q_c + uniform_open(rng) * (1.0 - q_c);
    x = bm::gamma_q_inv(shape, v) / rate;
  } else if (lower_mass > 1e-300) {
    x = bm::gamma_p_inv(shape, uniform_open(rng) * lower_mass) / rate;
  } else {
    // All mass piles up against the bound: the log-density is concave and
    // increasing on (0, upper), so its tangent at upper is an envelope.
    if (shape < 1.0) throw NumericalError("truncated gamma: no representable mass below bound");
    const double slope = (shape - 1.0) / upper - rate;
    if (!(slope > 0.0)) throw NumericalError("truncated gamma: degenerate tangent envelope");
    for (int attempt = 0; attempt < 100000; ++attempt) {
      std::exponential_distribution<double> expo(slope);
      const double cand = upper - expo(rng);
      if (cand <= 0.0) continue;
      const double log_ratio =
          (shape - 1.0) * (std::log(cand / upper) - (cand - upper) / upper);
      if (std::log(uniform_open(rng)) < log_ratio) return cand;
    }
    throw NumericalError("truncated gamma: rejection sampler did not accept");
  }
  if (x >= upper) x = std::nextafter(upper, 0.0);
  if (x <= 0.0) x = std::numeric_limits<double>::min();
  return x;
}

std::size_t sample_categorical_log(std::span<const double> log_weights, Rng& rng) {
  double hi = kNegInf;
  for (double v : log_weights) hi = std::max(hi, v);
  if (hi == kNegInf) throw NumericalError("categorical draw with all weights zero");
  double total = 0.0;
  for (double v : log_weights) total += std::exp(v - hi);
  double target = uniform_open(rng) * total;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    const double w = std::exp(log_weights[i] - hi);
    if (w > 0.0) last_positive = i;
    target -= w;
    if (target < 0.0) return i;
  }
  return last_positive;
}

std::size_t sample_categorical(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw NumericalError("categorical draw with all weights zero");
  double target = uniform_open(rng) * total;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) last_positive = i;
    target -= weights[i];
    if (target < 0.0) return i;
  }
  return last_positive;
}

int sample_zero_truncated_poisson(double lambda, Rng& rng) {
  if (lambda <= 0.0) return 1;
  if (lambda >= 1.0) {
    for (;;) {
      const int y = sample_poisson(lambda, rng);
      if (y >= 1) return y;
    }
  }
  // Inversion from y = 1; P(1) = lambda / (e^lambda - 1).
  const double u = uniform_open(rng);
  double p = lambda / std::expm1(lambda);
  double cum = p;
  int y = 1;
  while (u > cum && y < 10000) {
    ++y;
    p *= lambda / y;
    cum += p;
  }
  return y;
}

}  // namespace windhmm
