#pragma once

// Sticky HDP-HMM transition machinery for a beam sampler.
//
// The infinite state space is held as K represented states plus one
// aggregated remainder.  beta holds the global stick weights of the
// represented states, pi[r] the transition row of state r; beta_rest and
// pi_rest[r] carry the mass of every state not yet instantiated.  State 0 is
// the origin z_0 and is never pruned.
//
// Parameterization: gamma is the total row concentration and rho the
// self-transition share, so a row is DP(gamma, (1 - rho) beta + rho delta_r).

#include <cstddef>
#include <span>
#include <vector>

#include "windhmm/sampling.hpp"

namespace windhmm {

struct HdpState {
  std::vector<double> beta;
  double beta_rest = 1.0;
  std::vector<std::vector<double>> pi;
  std::vector<double> pi_rest;
  double rho = 0.5;
  double gamma = 10.0;
  double tau = 1.0;

  std::size_t size() const noexcept { return beta.size(); }
};

/// Gamma(shape, rate) priors on gamma and tau; rho is uniform on (0, 1).
struct HyperPriors {
  double gamma_shape = 1.0;
  double gamma_rate = 0.1;
  double tau_shape = 1.0;
  double tau_rate = 0.1;
};

struct StickWeights {
  std::vector<double> beta;
  double rest = 1.0;
};

/// beta_r = beta*_r prod_{j<r} (1 - beta*_j), remainder tracked explicitly.
StickWeights stick_break(std::span<const double> beta_star);

struct TransitionRow {
  std::vector<double> p;
  double rest = 0.0;
};

/// Dirichlet draw of row r over the represented states plus remainder with
/// concentration gamma((1-rho) beta_j + rho I(r=j)) + counts[j] and tail
/// gamma (1-rho) beta_rest.  counts may be empty (prior draw).
TransitionRow sample_pi_row(std::size_t r, std::span<const double> beta, double beta_rest,
                            double rho, double gamma, Rng& rng,
                            std::span<const int> counts = {});

/// Fresh HDP state with `states` represented states drawn from the prior
/// given the hyperparameters.
HdpState sample_hdp_prior(std::size_t states, double rho, double gamma, double tau, Rng& rng);

/// u_t ~ U(0, pi_{z_{t-1}, z_t}), z_{-1} = origin.  Every u_t > 0.
std::vector<double> beam_slice(std::span<const int> z, const HdpState& hdp, Rng& rng);

/// Instantiates one new state: breaks a stick off beta_rest, splits each
/// row's remainder, draws the new row.
void add_state(HdpState& hdp, Rng& rng);

/// Adds states until every row's remainder is below threshold.  Returns the
/// number of states added.  Throws NumericalError after 10^4 additions.
std::size_t extend_representation(HdpState& hdp, double threshold, Rng& rng);

/// Beam-restricted forward filtering, backward sampling.  loglik is T x K
/// row-major; transition i -> j at step t is admissible iff pi_ij > u_t.
/// Throws NumericalError when a step has no admissible state.
std::vector<int> ffbs_states(std::span<const double> loglik, std::size_t K, const HdpState& hdp,
                             std::span<const double> u, Rng& rng);

/// Transition counts with the auxiliary table variables of the sticky
/// Chinese restaurant franchise.
struct TransitionCounts {
  std::size_t K = 0;
  std::vector<int> n;        // K x K, includes origin -> z_1
  std::vector<int> tables;   // K x K, m_jk
  std::vector<int> overrides;  // per state, w_jj
  std::vector<int> dish_tables;  // column sums of m - w, plus one for the origin

  int n_at(std::size_t i, std::size_t j) const { return n[i * K + j]; }
  int total_transitions() const;
  int total_tables() const;
  int total_overrides() const;
};

TransitionCounts count_transitions(std::span<const int> z, std::size_t K);

/// Samples tables m_jk and sticky overrides w_jj given the counts, beta,
/// rho and gamma, and fills dish_tables.
void sample_auxiliary_counts(TransitionCounts& counts, const HdpState& hdp, Rng& rng);

/// beta ~ Dir(dish_tables, tau) over represented states plus remainder.
/// States without dish tables receive a fresh stick from the remainder.
StickWeights resample_beta(const TransitionCounts& counts, double tau, Rng& rng);

/// One auxiliary-variable Gibbs pass over (gamma, rho, tau).
void resample_hypers(const TransitionCounts& counts, HdpState& hdp, const HyperPriors& priors,
                     Rng& rng);

/// Resamples every row given counts, beta and the hyperparameters.
void resample_pi(const TransitionCounts& counts, HdpState& hdp, Rng& rng);

/// Drops states with no assigned timestep (origin excepted), moving their
/// mass to the remainders and relabeling z in place.  Returns old -> new
/// index map, -1 for dropped states.
std::vector<int> prune_states(std::vector<int>& z, HdpState& hdp);

/// Draws the successor of state `from`, instantiating new states when the
/// draw lands in the remainder.
std::size_t sample_successor(HdpState& hdp, std::size_t from, Rng& rng);

}  // namespace windhmm
