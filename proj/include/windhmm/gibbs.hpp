#pragma once

// Gibbs/beam sampler for the sticky HDP-HMM with hurdle IWP-Poisson
// emissions.
//
// One sweep:
//   1. slice variables u given (z, pi), extend the represented states until
//      every row's remainder is below min u (new states draw psi from H);
//   2. z by beam FFBS with the latent speed, direction and winding number
//      summed out of the emission likelihood;
//   3. prune unoccupied states;
//   4. latent data given z: (y, w), then missing x given y, then k;
//   5. per regime: lambda_y, nu, lambda_x, (eta, xi) jointly with k fixed,
//      then lambda_x and (eta, xi) again with k summed out, then k again;
//   6. auxiliary tables, beta, (gamma, rho, tau), transition rows.

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "windhmm/circular.hpp"
#include "windhmm/emission.hpp"
#include "windhmm/hdp.hpp"

namespace windhmm {

/// Prior hyperparameters.  Gamma laws use shape/rate.
struct Priors {
  double a_y = 1.0;
  double b_y = 0.00005;
  double c_y = 50.0;
  double a_x = 1.0;
  double b_x = 0.00005;
  double lambda_max = 500.0;
  HyperPriors hyper;
};

struct ChainConfig {
  long n_iter = 100000;
  long burn_in = 50000;
  long thin = 10;
  std::uint64_t seed = 1;
  Priors priors;
  int circle_points = 36;
  /// States used to seed z (speed-quantile split of the series).
  int init_states = 5;

  /// Throws ConfigError.
  void validate() const;
  long retained_draws() const { return (n_iter - burn_in) / thin; }
};

struct SweepState {
  std::vector<LatentCell> cells;
  std::vector<int> z;  // length T, labels index psi and hdp states
  HdpState hdp;
  std::vector<RegimeParams> psi;
};

/// Checks the latent invariants (w = I(y >= 2), calm implies y = 0, k range,
/// agreement with recorded data).  Throws DomainError.
void check_invariants(const SweepState& state, std::span<const ObservationCell> data,
                      const DiscreteCircle& circle, const WindingConfig& cfg);

// Single-site full conditionals.

/// Gamma(a_y + sum_y, b_y + n) restricted to (0, c_y).
double update_lambda_y(long sum_y, long n, const Priors& priors, Rng& rng);

/// Gamma(a_x + sum_m, b_x + n) restricted to (0, lambda_max).
double update_lambda_x(long sum_m, long n, const Priors& priors, Rng& rng);

/// Winding number of a grid direction given the IWP parameters.
int update_k(int x, const IwpParams& p, const DiscreteCircle& circle, const WindingConfig& cfg,
             Rng& rng);

/// Conditional cdfs of k for every grid direction, row-major l x (k_max+1).
/// Drawing from a row is equivalent to update_k.
struct WindingTable {
  int width = 0;
  std::vector<double> cdf;

  WindingTable(const IwpParams& p, const DiscreteCircle& circle, const WindingConfig& cfg);
  int draw(int x, Rng& rng) const;
};

/// Counts of (direction index, winding number) pairs, indexed x*(k_max+1)+k.
std::vector<int> direction_histogram(std::span<const LatentCell> cells,
                                     const DiscreteCircle& circle, const WindingConfig& cfg);

/// Log-weights of the 2l (eta, xi) cells, index (eta == -1 ? 0 : l) + xi.
std::vector<double> eta_xi_log_weights(std::span<const int> histogram, double lambda_x,
                                       const DiscreteCircle& circle, const WindingConfig& cfg);

/// Joint draw of (eta, xi) under uniform priors with k held fixed.
std::pair<int, int> update_eta_xi(std::span<const int> histogram, double lambda_x,
                                  const DiscreteCircle& circle, const WindingConfig& cfg, Rng& rng);

/// Grid-direction counts of the cells (length l).
std::vector<int> direction_counts(std::span<const LatentCell> cells, const DiscreteCircle& circle);

/// sum_x counts[x] log P(x | lambda_x, eta, xi) with k summed out.
double collapsed_direction_loglik(std::span<const int> counts, const IwpParams& p,
                                  const DiscreteCircle& circle, const WindingConfig& cfg);

/// log sum_{eta, xi} exp(collapsed_direction_loglik): the direction
/// likelihood of lambda_x with k and (eta, xi) summed out.
double lambda_x_marginal_loglik(std::span<const int> counts, double lambda_x,
                                const DiscreteCircle& circle, const WindingConfig& cfg);

/// Metropolis-Hastings moves on lambda_x targeting its conditional with k
/// and (eta, xi) summed out: log-scale random walks and an independence
/// proposal from the prior.  Followed by update_eta_xi_collapsed this is a
/// blocked draw of (lambda_x, eta, xi); without it (lambda_x, xi, k) can
/// freeze in a shifted local mode.
double update_lambda_x_collapsed(std::span<const int> counts, double lambda_x,
                                 const Priors& priors, const DiscreteCircle& circle,
                                 const WindingConfig& cfg, Rng& rng);

/// Joint draw of (eta, xi) with k summed out.  Same index layout as
/// eta_xi_log_weights.
std::vector<double> eta_xi_collapsed_log_weights(std::span<const int> counts, double lambda_x,
                                                 const DiscreteCircle& circle,
                                                 const WindingConfig& cfg);
std::pair<int, int> update_eta_xi_collapsed(std::span<const int> counts, double lambda_x,
                                            const DiscreteCircle& circle, const WindingConfig& cfg,
                                            Rng& rng);

/// Beta(1 + n_calm, 1 + n_zero_with_direction).
double update_nu(long n_calm, long n_zero_with_direction, Rng& rng);

struct SpeedDraw {
  int y = 0;
  int w = 0;
};

/// Draws (y, w) given the recorded speed and direction of a cell.  A missing
/// direction is summed out.  Cells with y* >= 2 return y = y*.
SpeedDraw impute_y_w(const ObservationCell& cell, const RegimeParams& psi, Rng& rng);

struct DirectionDraw {
  Direction x = Direction::calm();
  std::optional<int> k;
};

/// Draws an unrecorded direction given the speed: the calm marker with
/// probability nu when y = 0, otherwise an IWP draw.
DirectionDraw impute_x(int y, const RegimeParams& psi, const DiscreteCircle& circle,
                       const WindingConfig& cfg, Rng& rng);

/// psi ~ H.
RegimeParams sample_regime_prior(const Priors& priors, const DiscreteCircle& circle, Rng& rng);

/// One retained posterior draw, restricted to occupied states.
struct StateDraw {
  long occupancy = 0;
  RegimeParams psi;
};

struct Draw {
  long iteration = 0;
  double rho = 0.0;
  double gamma = 0.0;
  double tau = 0.0;
  std::vector<StateDraw> states;
  /// Transition probabilities among occupied states, same order as states.
  std::vector<std::vector<double>> pi;

  int regimes() const { return static_cast<int>(states.size()); }
};

class Sampler {
 public:
  Sampler(std::vector<ObservationCell> data, ChainConfig config);

  void sweep();
  Draw snapshot(long iteration) const;

  const SweepState& state() const noexcept { return state_; }
  SweepState& mutable_state() noexcept { return state_; }
  std::span<const ObservationCell> data() const noexcept { return data_; }
  /// Replaces the recorded series (same length); used by joint-distribution
  /// tests that regenerate data between sweeps.
  void set_data(std::vector<ObservationCell> data);

  const DiscreteCircle& circle() const noexcept { return circle_; }
  const WindingConfig& winding() const noexcept { return winding_; }
  const ChainConfig& config() const noexcept { return config_; }
  Rng& rng() noexcept { return rng_; }

 private:
  void initialize();
  void impute_latents();
  void update_regime_params();
  void update_transitions();

  std::vector<ObservationCell> data_;
  ChainConfig config_;
  DiscreteCircle circle_;
  WindingConfig winding_;
  Rng rng_;
  SweepState state_;
};

/// Runs n_iter sweeps and hands every retained draw (after burn_in, every
/// thin-th sweep) to sink.
void run_chain(std::vector<ObservationCell> data, const ChainConfig& config,
               const std::function<void(const Draw&)>& sink);

}  // namespace windhmm
