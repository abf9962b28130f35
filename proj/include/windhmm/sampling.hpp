#pragma once

// Random variate generation and log-space helpers shared by every sampler
// in the library.  All draws go through an explicitly passed Rng; nothing
// here keeps global state.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace windhmm {

using Rng = std::mt19937_64;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow.
double log_add(double a, double b);

/// log(sum(exp(v))).  Returns -inf for an empty span or all -inf entries.
double log_sum_exp(std::span<const double> v);

/// log(n!) from a table for small n, lgamma beyond it.
double log_factorial(long n);

/// log Poisson(m; lambda), with the lambda = 0 point mass handled exactly.
double log_poisson(long m, double lambda);

/// Uniform on the open interval (0, 1).
double uniform_open(Rng& rng);

int sample_poisson(double lambda, Rng& rng);
int sample_binomial(int n, double p, Rng& rng);
bool sample_bernoulli(double p, Rng& rng);

/// Gamma(shape, rate).  shape > 0, rate > 0.
double sample_gamma(double shape, double rate, Rng& rng);

/// log of a Gamma(shape, 1) variate.  Stays finite for shapes so small that
/// the variate itself underflows.
double sample_log_gamma(double shape, Rng& rng);

double sample_beta(double a, double b, Rng& rng);

/// Dirichlet draw.  Entries of alpha must be >= 0 with at least one
/// positive; zero entries yield exact zeros.
std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng);

/// Gamma(shape, rate) restricted to (0, upper).  Inverse-CDF when the
/// interval carries representable mass, tangent-exponential rejection
/// otherwise.
double sample_truncated_gamma(double shape, double rate, double upper, Rng& rng);

/// Index drawn with probability proportional to exp(log_weights[i]).
std::size_t sample_categorical_log(std::span<const double> log_weights, Rng& rng);

/// Index drawn with probability proportional to weights[i] >= 0.
std::size_t sample_categorical(std::span<const double> weights, Rng& rng);

/// Poisson(lambda) conditioned on being >= 1.
int sample_zero_truncated_poisson(double lambda, Rng& rng);

}  // namespace windhmm
