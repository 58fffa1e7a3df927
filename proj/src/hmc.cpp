// SPDX-License-Identifier: Apache-2.0

#include "polar/hmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "polar/distributions.hpp"
#include "polar/errors.hpp"
#include "polar/kernels.hpp"

namespace polar {

void HmcConfig::validate() const {
  if (chains < 1) throw DomainError("hmc: chains must be >= 1");
  if (warmup_iters < 0 || sample_iters < 1) throw DomainError("hmc: need warmup >= 0 and samples >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw DomainError("hmc: target_accept must lie in (0, 1)");
  if (max_leapfrog < 1) throw DomainError("hmc: max_leapfrog must be >= 1");
  if (!(max_energy_error > 0.0)) throw DomainError("hmc: max_energy_error must be positive");
  if (threads < 0) throw DomainError("hmc: threads must be >= 0");
}

namespace {

std::span<const double> view(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Position with its cached log density and gradient.
struct PhasePoint {
  Vector q;
  Vector m;
  Vector grad;
  double logp = 0.0;
};

class Integrator {
 public:
  Integrator(const UnconstrainedTarget& target, const Vector& inv_mass) : target_(target), inv_mass_(inv_mass) {}

  double kinetic(const Vector& m) const { return 0.5 * kernels::weighted_sq_norm(view(m), view(inv_mass_)); }
  double hamiltonian(const PhasePoint& z) const { return -z.logp + kinetic(z.m); }

  // Returns false if the trajectory left the domain or became non-finite.
  bool evaluate(PhasePoint& z) const {
    try {
      z.logp = target_.log_density_gradient(z.q, z.grad);
    } catch (const NumericalError&) {
      return false;
    }
    return std::isfinite(z.logp) && z.grad.allFinite();
  }

  bool integrate(PhasePoint& z, double eps, int steps) const {
    for (int s = 0; s < steps; ++s) {
      kernels::axpy(0.5 * eps, view(z.grad), view(z.m));
      kernels::scaled_drift(eps, view(inv_mass_), view(z.m), view(z.q));
      if (!evaluate(z)) return false;
      kernels::axpy(0.5 * eps, view(z.grad), view(z.m));
    }
    return z.m.allFinite();
  }

 private:
  const UnconstrainedTarget& target_;
  const Vector& inv_mass_;
};

class DualAveraging {
 public:
  DualAveraging(double target, double eps0) : target_(target) { restart(eps0); }

  void restart(double eps0) {
    mu_ = std::log(10.0 * eps0);
    log_eps_ = std::log(eps0);
    log_eps_bar_ = 0.0;
    h_bar_ = 0.0;
    t_ = 0;
  }

  void update(double accept_stat) {
    ++t_;
    const double t = static_cast<double>(t_);
    const double w = 1.0 / (t + kT0);
    h_bar_ = (1.0 - w) * h_bar_ + w * (target_ - accept_stat);
    log_eps_ = mu_ - std::sqrt(t) / kGamma * h_bar_;
    const double eta = std::pow(t, -kKappa);
    log_eps_bar_ = eta * log_eps_ + (1.0 - eta) * log_eps_bar_;
  }

  double step_size() const { return std::exp(log_eps_); }
  double final_step_size() const { return t_ > 0 ? std::exp(log_eps_bar_) : std::exp(log_eps_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double target_;
  double mu_ = 0.0, log_eps_ = 0.0, log_eps_bar_ = 0.0, h_bar_ = 0.0;
  long t_ = 0;
};

// End indices (exclusive) of the metric-estimation windows inside
// [init_end, slow_end): base 25, doubling, last window absorbs the remainder.
std::vector<int> metric_window_ends(int init_end, int slow_end) {
  std::vector<int> ends;
  int size = 25;
  int start = init_end;
  while (start < slow_end) {
    int end = start + size;
    if (end + 2 * size > slow_end) end = slow_end;
    ends.push_back(end);
    start = end;
    size *= 2;
  }
  return ends;
}

class Chain {
 public:
  Chain(const UnconstrainedTarget& target, const HmcConfig& config, int index)
      : target_(target),
        config_(config),
        dim_(target.dim()),
        inv_mass_(Vector::Ones(target.dim())),
        integrator_(target, inv_mass_) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(config.seed >> 32), static_cast<std::uint32_t>(index)};
    rng_.seed(seq);
    out_.chain = index;
    out_.seed = config.seed;
  }

  ChainOutput run(const std::optional<Vector>& init) {
    initialize(init);
    warmup();
    sample();
    out_.inv_mass_diag = inv_mass_;
    return std::move(out_);
  }

 private:
  void initialize(const std::optional<Vector>& init) {
    current_.q.resize(dim_);
    current_.grad.resize(dim_);
    current_.m.resize(dim_);
    if (init) {
      if (init->size() != dim_ || !init->allFinite()) throw DomainError("hmc: initial point has wrong size or non-finite entries");
      current_.q = *init;
      if (!integrator_.evaluate(current_)) throw NumericalError("hmc: log density not finite at the supplied initial point");
      return;
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (Eigen::Index i = 0; i < dim_; ++i) current_.q(i) = normal(rng_);
      if (integrator_.evaluate(current_)) return;
    }
    throw NumericalError("hmc: no finite log density found in 100 random initializations", 100);
  }

  void draw_momentum(Vector& m) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < dim_; ++i) m(i) = normal(rng_) / std::sqrt(inv_mass_(i));
  }

  int path_length() {
    if (!config_.jitter_steps) return config_.max_leapfrog;
    std::uniform_int_distribution<int> u(1, config_.max_leapfrog);
    return u(rng_);
  }

  struct Step {
    double accept_stat = 0.0;
    bool divergent = false;
  };

  Step transition(double eps) {
    draw_momentum(current_.m);
    const double h0 = integrator_.hamiltonian(current_);
    PhasePoint proposal = current_;
    const int steps = path_length();
    Step st;
    double dh = std::numeric_limits<double>::infinity();
    if (integrator_.integrate(proposal, eps, steps)) dh = integrator_.hamiltonian(proposal) - h0;
    if (!std::isfinite(dh) || dh > config_.max_energy_error) {
      st.divergent = true;
      st.accept_stat = 0.0;
      return st;
    }
    st.accept_stat = dh <= 0.0 ? 1.0 : std::exp(-dh);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng_) < st.accept_stat) current_ = std::move(proposal);
    return st;
  }

  // Doubles or halves eps until the one-step acceptance crosses 0.8.
  double heuristic_step_size(double eps) {
    PhasePoint z = current_;
    auto log_accept = [&](double e) {
      z = current_;
      draw_momentum(z.m);
      const double h0 = integrator_.hamiltonian(z);
      if (!integrator_.integrate(z, e, 1)) return -std::numeric_limits<double>::infinity();
      const double dh = integrator_.hamiltonian(z) - h0;
      return std::isfinite(dh) ? -dh : -std::numeric_limits<double>::infinity();
    };
    const double log_target = std::log(0.8);
    const int direction = log_accept(eps) > log_target ? 1 : -1;
    for (int i = 0; i < 50; ++i) {
      const double next = direction > 0 ? 2.0 * eps : 0.5 * eps;
      const double la = log_accept(next);
      eps = next;
      if (direction > 0 ? !(la > log_target) : (la > log_target)) break;
    }
    return std::clamp(eps, 1e-8, 1e3);
  }

  void update_metric(const std::vector<Vector>& window) {
    const double n = static_cast<double>(window.size());
    if (window.size() < 3) return;
    Vector mean = Vector::Zero(dim_);
    for (const Vector& v : window) mean += v;
    mean /= n;
    Vector var = Vector::Zero(dim_);
    for (const Vector& v : window) var += (v - mean).cwiseAbs2();
    var /= (n - 1.0);
    inv_mass_ = (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
  }

  void warmup() {
    const int total = config_.warmup_iters;
    double eps = config_.init_step_size > 0.0 ? config_.init_step_size : heuristic_step_size(1.0);
    DualAveraging da(config_.target_accept, eps);
    const int init_end = static_cast<int>(std::floor(0.15 * total));
    const int slow_end = total - static_cast<int>(std::floor(0.10 * total));
    const std::vector<int> ends = total >= 20 ? metric_window_ends(init_end, slow_end) : std::vector<int>{};
    std::size_t next_window = 0;
    std::vector<Vector> window;
    int divergent = 0;
    out_.step_size_trace.reserve(total);
    for (int it = 0; it < total; ++it) {
      eps = da.step_size();
      out_.step_size_trace.push_back(eps);
      const Step st = transition(eps);
      if (st.divergent) ++divergent;
      da.update(st.accept_stat);
      if (next_window < ends.size() && it >= init_end) {
        window.push_back(current_.q);
        if (it + 1 == ends[next_window]) {
          update_metric(window);
          window.clear();
          ++next_window;
          const double restart = config_.init_step_size > 0.0 ? da.final_step_size() : heuristic_step_size(da.final_step_size());
          da.restart(restart);
        }
      }
    }
    out_.warmup_divergences = divergent;
    if (total > 0 && divergent == total) {
      std::ostringstream msg;
      msg << "hmc: chain " << out_.chain << " diverged on every warmup iteration (last step size " << eps
          << "); check the initialization and target";
      throw NumericalError(msg.str(), total);
    }
    step_size_ = total > 0 ? da.final_step_size() : eps;
    out_.step_size = step_size_;
  }

  void sample() {
    out_.draws.resize(config_.sample_iters, dim_);
    double accept_sum = 0.0;
    for (int it = 0; it < config_.sample_iters; ++it) {
      const Step st = transition(step_size_);
      accept_sum += st.accept_stat;
      if (st.divergent) ++out_.divergence_count;
      out_.draws.row(it) = current_.q.transpose();
    }
    out_.accept_rate = accept_sum / config_.sample_iters;
  }

  const UnconstrainedTarget& target_;
  const HmcConfig& config_;
  Eigen::Index dim_;
  Vector inv_mass_;
  Integrator integrator_;
  Rng rng_;
  PhasePoint current_;
  double step_size_ = 0.0;
  ChainOutput out_;
};

}  // namespace

LeapfrogResult leapfrog(const UnconstrainedTarget& target, const Vector& q, const Vector& m, double eps, int steps,
                        const Vector& inv_mass, double max_energy_error) {
  if (!(eps > 0.0) || steps < 1) throw DomainError("leapfrog: need eps > 0 and steps >= 1");
  const Vector metric = inv_mass.size() == 0 ? Vector::Ones(q.size()) : inv_mass;
  Integrator integ(target, metric);
  PhasePoint z{q, m, Vector(q.size()), 0.0};
  LeapfrogResult res;
  if (!integ.evaluate(z)) {
    res.q = q;
    res.m = m;
    res.divergent = true;
    res.energy_error = std::numeric_limits<double>::infinity();
    return res;
  }
  const double h0 = integ.hamiltonian(z);
  const bool ok = integ.integrate(z, eps, steps);
  res.q = z.q;
  res.m = z.m;
  res.energy_error = ok ? integ.hamiltonian(z) - h0 : std::numeric_limits<double>::infinity();
  res.divergent = !ok || !std::isfinite(res.energy_error) || res.energy_error > max_energy_error;
  return res;
}

ChainOutput run_chain(const UnconstrainedTarget& target, const HmcConfig& config, int chain,
                      const std::optional<Vector>& init) {
  config.validate();
  Chain c(target, config, chain);
  return c.run(init);
}

std::vector<ChainOutput> run_chains(const UnconstrainedTarget& target, const HmcConfig& config,
                                    const std::vector<Vector>& init) {
  config.validate();
  if (!init.empty() && static_cast<int>(init.size()) != config.chains) {
    throw DomainError("run_chains: supply either no initial points or one per chain");
  }
  std::vector<ChainOutput> out(config.chains);
  std::vector<std::exception_ptr> errors(config.chains);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int c = next.fetch_add(1); c < config.chains; c = next.fetch_add(1)) {
      try {
        std::optional<Vector> start;
        if (!init.empty()) start = init[c];
        out[c] = run_chain(target, config, c, start);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const int threads = std::min(config.chains, config.threads > 0 ? config.threads : config.chains);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace polar
