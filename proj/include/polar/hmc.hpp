// SPDX-License-Identifier: Apache-2.0
#pragma once

// Static-path Hamiltonian Monte Carlo with jittered path length,
// dual-averaging step-size adaptation and a windowed diagonal metric.

#include <cstdint>
#include <optional>
#include <vector>

#include "polar/expansion.hpp"

namespace polar {

struct HmcConfig {
  int chains = 4;
  int warmup_iters = 1000;
  int sample_iters = 5000;
  double target_accept = 0.8;
  /// <= 0 selects the doubling heuristic for the initial step size.
  double init_step_size = 0.0;
  /// Path length is drawn uniformly from [1, max_leapfrog] when jitter_steps.
  int max_leapfrog = 32;
  bool jitter_steps = true;
  /// Energy error above which a transition counts as divergent.
  double max_energy_error = 1000.0;
  std::uint64_t seed = 1;
  /// Worker threads; 0 means one per chain.
  int threads = 0;

  void validate() const;
};

struct ChainOutput {
  int chain = 0;
  std::uint64_t seed = 0;
  /// sample_iters x dim post-warmup positions.
  Matrix draws;
  /// Mean post-warmup acceptance probability min(1, exp(-dH)).
  double accept_rate = 0.0;
  int divergence_count = 0;
  int warmup_divergences = 0;
  /// Step size used at each warmup iteration.
  std::vector<double> step_size_trace;
  /// Adapted diagonal of the inverse mass matrix (posterior variance estimate).
  Vector inv_mass_diag;
  double step_size = 0.0;
};

struct LeapfrogResult {
  Vector q;
  Vector m;
  /// H(q', m') - H(q, m) with H = -log f(q) + m^T M^{-1} m / 2.
  double energy_error = 0.0;
  bool divergent = false;
};

/// Integrates `steps` leapfrog steps of size eps.  inv_mass defaults to
/// the identity.  Non-finite states and degenerate targets set `divergent`.
LeapfrogResult leapfrog(const UnconstrainedTarget& target, const Vector& q, const Vector& m, double eps, int steps,
                        const Vector& inv_mass = Vector(), double max_energy_error = 1000.0);

/// Runs one chain; `chain` selects the rng stream derived from config.seed.
ChainOutput run_chain(const UnconstrainedTarget& target, const HmcConfig& config, int chain,
                      const std::optional<Vector>& init = std::nullopt);

/// Runs config.chains chains, in parallel up to config.threads.  `init` is
/// empty (iid N(0, 1) start) or holds one vector per chain.  Output order is
/// by chain index regardless of scheduling.
std::vector<ChainOutput> run_chains(const UnconstrainedTarget& target, const HmcConfig& config,
                                    const std::vector<Vector>& init = {});

}  // namespace polar
