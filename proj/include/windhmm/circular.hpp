#pragma once

// Discrete circle arithmetic and the invariant wrapped Poisson (IWP).
//
// A circular value is represented by its grid index j, standing for the
// angle 2*pi*j/l.  The IWP is the law of eta * (Q * 2*pi/l + xi) mod 2*pi
// with Q ~ Poisson(lambda_x); the winding number k = Q div l makes the pmf
// a single Poisson term instead of an infinite sum.

#include <numbers>
#include <vector>

#include "windhmm/sampling.hpp"

namespace windhmm {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

class DiscreteCircle {
 public:
  explicit DiscreteCircle(int points = 36);

  int size() const noexcept { return points_; }
  double step() const noexcept { return kTwoPi / points_; }
  double angle(int index) const noexcept { return step() * index; }
  /// Reduce any integer to {0..l-1}.
  int wrap(long index) const noexcept {
    const long r = index % points_;
    return static_cast<int>(r < 0 ? r + points_ : r);
  }
  bool contains(int index) const noexcept { return index >= 0 && index < points_; }

  friend bool operator==(const DiscreteCircle&, const DiscreteCircle&) = default;

 private:
  int points_;
};

struct IwpParams {
  double lambda_x = 0.0;
  int eta = 1;  // orientation, -1 or +1
  int xi = 0;   // offset as a grid index
};

/// Truncation of the winding number, fixed once from lambda_max.
struct WindingConfig {
  double lambda_max = 500.0;
  int k_max = 0;

  static WindingConfig from_lambda_max(double lambda_max, const DiscreteCircle& circle);
  /// Largest unwrapped value (k_max + 1) * l - 1 admitted by the truncation.
  long max_unwrapped(const DiscreteCircle& circle) const {
    return static_cast<long>(k_max + 1) * circle.size() - 1;
  }
};

/// ceil(3 sqrt(lambda_max)/l + lambda_max/l - 1/2).
int compute_k_max(double lambda_max, const DiscreteCircle& circle);

/// Grid index of an angle (radians, any winding).  Throws GridError when the
/// angle is farther than 1e-9 from every grid point.
int grid_index(double angle, const DiscreteCircle& circle);

/// Checks eta, xi and lambda_x >= 0; throws DomainError.
void validate(const IwpParams& p, const DiscreteCircle& circle);

/// Unwrapped Poisson value m = ((eta*x - xi) mod l) + k*l.
long unwrapped_index(int x, int k, const IwpParams& p, const DiscreteCircle& circle);

/// Truncated pmf sum_{k=0}^{k_max} Poisson(m(x,k); lambda_x).  Throws
/// ConfigError when lambda_x exceeds lambda_max.
double iwp_pmf(int x, const IwpParams& p, const DiscreteCircle& circle, const WindingConfig& cfg);

/// log Poisson(m(x,k); lambda_x), the joint of direction and winding number.
double iwp_augmented_logpmf(int x, int k, const IwpParams& p, const DiscreteCircle& circle);

/// log iwp_pmf for every grid point, indexed by x.
std::vector<double> iwp_log_pmf_table(const IwpParams& p, const DiscreteCircle& circle,
                                      const WindingConfig& cfg);

/// Closed-form circular mean (eta*xi + lambda_x sin(eta*2pi/l)) mod 2pi.
double iwp_mean(const IwpParams& p, const DiscreteCircle& circle);

/// Closed-form mean resultant length exp(-lambda_x (1 - cos(2pi/l))).
double iwp_concentration(const IwpParams& p, const DiscreteCircle& circle);

struct IwpDraw {
  int x = 0;
  int k = 0;
};

/// Draws (x, k) from the augmented law.  Unwrapped values beyond the
/// winding truncation are redrawn so the result matches iwp_pmf exactly.
IwpDraw iwp_sample(const IwpParams& p, const DiscreteCircle& circle, const WindingConfig& cfg,
                   Rng& rng);

}  // namespace windhmm
