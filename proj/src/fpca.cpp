// SPDX-License-Identifier: Apache-2.0

#include "polar/fpca.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "polar/errors.hpp"
#include "polar/kernels.hpp"

namespace polar {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

Matrix double_center(const Matrix& y) {
  Matrix out = y;
  out.colwise() -= out.rowwise().mean();
  out.rowwise() -= out.colwise().mean();
  return out;
}

FpcaData FpcaData::from_raw(Matrix y_raw, std::vector<double> grid) {
  if (y_raw.rows() < 2 || y_raw.cols() < 2) throw DomainError("fpca: data must have at least 2 rows and 2 columns");
  if (static_cast<Eigen::Index>(grid.size()) != y_raw.cols()) throw DomainError("fpca: grid length must equal column count");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw DomainError("fpca: grid must be strictly increasing");
  if (!y_raw.allFinite()) throw DomainError("fpca: data contains non-finite values");
  FpcaData d;
  d.y = double_center(y_raw);
  d.y_raw = std::move(y_raw);
  d.grid = std::move(grid);
  return d;
}

std::pair<double, double> invgamma_from_moments(double mean, double sd) {
  if (!(mean > 0.0) || !(sd > 0.0)) throw DomainError("invgamma_from_moments: mean and sd must be positive");
  // mean = beta / (alpha - 1), var = mean^2 / (alpha - 2)
  const double alpha = mean * mean / (sd * sd) + 2.0;
  return {alpha, mean * (alpha - 1.0)};
}

FpcaHyper fpca_empirical_bayes(const Matrix& y, int k, double nugget) {
  if (k < 1 || k >= std::min(y.rows(), y.cols())) {
    std::ostringstream msg;
    msg << "fpca_empirical_bayes: rank k = " << k << " must satisfy 1 <= k < min(n, p) = " << std::min(y.rows(), y.cols());
    throw DomainError(msg.str());
  }
  Eigen::BDCSVD<Matrix> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix y_hat = svd.matrixU().leftCols(k) * svd.singularValues().head(k).asDiagonal() *
                       svd.matrixV().leftCols(k).transpose();
  const Matrix resid = y - y_hat;
  const double count = static_cast<double>(resid.size());
  const double mean = resid.mean();
  const double var = (resid.array() - mean).square().sum() / (count - 1.0);

  FpcaHyper h;
  h.k = k;
  h.nu = 1.0;
  h.nugget = nugget;
  h.sigma2_hat = var;
  const double scale = y.squaredNorm() / count;
  h.zero_residual = !(var > 1e-24 * std::max(scale, 1.0));
  h.s2 = std::max(3.0 * var, 1e-8);
  h.tau2 = y_hat.squaredNorm() / k;
  std::tie(h.alpha, h.beta) = invgamma_from_moments(kRhoPriorMean, kRhoPriorSd);
  return h;
}

Vector pack(const FpcaParams& params) {
  const Eigen::Index nu = params.x_u.size();
  const Eigen::Index nv = params.x_v.size();
  const Eigen::Index k = params.eta_d.size();
  Vector flat(nu + nv + k + 3);
  flat.head(nu) = Eigen::Map<const Vector>(params.x_u.data(), nu);
  flat.segment(nu, nv) = Eigen::Map<const Vector>(params.x_v.data(), nv);
  flat.segment(nu + nv, k) = params.eta_d;
  flat(nu + nv + k) = params.eta_sigma;
  flat(nu + nv + k + 1) = params.eta_phi;
  flat(nu + nv + k + 2) = params.eta_rho;
  return flat;
}

FpcaParams unpack_fpca(const Vector& flat, Eigen::Index n, Eigen::Index p, int k) {
  if (flat.size() != (n + p) * k + k + 3) throw DomainError("fpca: flat vector has the wrong size");
  FpcaParams out;
  out.x_u = Eigen::Map<const Matrix>(flat.data(), n, k);
  out.x_v = Eigen::Map<const Matrix>(flat.data() + n * k, p, k);
  out.eta_d = flat.segment((n + p) * k, k);
  out.eta_sigma = flat((n + p) * k + k);
  out.eta_phi = flat((n + p) * k + k + 1);
  out.eta_rho = flat((n + p) * k + k + 2);
  return out;
}

double log_one_minus_tanh2(double e) {
  const double a = std::abs(e);
  return std::log(4.0) - 2.0 * a - 2.0 * std::log1p(std::exp(-2.0 * a));
}

FpcaTarget::FpcaTarget(FpcaData data, FpcaHyper hyper, PolarVjpFn vjp)
    : data_(std::move(data)),
      hyper_(hyper),
      n_(data_.n()),
      p_(data_.p()),
      k_(hyper.k),
      vjp_(vjp ? vjp : static_cast<PolarVjpFn>(&polar_vjp)) {
  if (k_ < 1 || k_ > n_ || k_ > p_) throw DomainError("fpca: need 1 <= k <= min(n, p)");
  if (!(hyper_.nu > 0 && hyper_.s2 > 0 && hyper_.tau2 > 0 && hyper_.alpha > 0 && hyper_.beta > 0 && hyper_.nugget >= 0)) {
    throw DomainError("fpca: hyperparameters must be positive");
  }
  sq_dist_.resize(p_, p_);
  for (Eigen::Index j = 0; j < p_; ++j)
    for (Eigen::Index i = 0; i < p_; ++i) {
      const double dt = data_.grid[i] - data_.grid[j];
      sq_dist_(i, j) = dt * dt;
    }
}

FpcaState FpcaTarget::decode(const Vector& x) const {
  const FpcaParams prm = unpack_fpca(x, n_, p_, k_);
  FpcaState s;
  s.u = polar_factor(prm.x_u);
  s.v = polar_factor(prm.x_v);
  s.d = prm.eta_d.array().exp();
  s.sigma2 = std::exp(prm.eta_sigma);
  s.phi = std::tanh(prm.eta_phi);
  s.rho = std::exp(prm.eta_rho);
  return s;
}

double FpcaTarget::log_density_gradient(const Vector& x, Vector& grad) const {
  if (x.size() != dim()) throw DomainError("fpca: state vector has the wrong dimension");
  const Eigen::Map<const Matrix> x_u(x.data(), n_, k_);
  const Eigen::Map<const Matrix> x_v(x.data() + n_ * k_, p_, k_);
  const Eigen::Index off = (n_ + p_) * k_;
  const Vector eta_d = x.segment(off, k_);
  const double eta_sigma = x(off + k_);
  const double eta_phi = x(off + k_ + 1);
  const double eta_rho = x(off + k_ + 2);

  const ThinSvd svd_u = thin_svd(x_u);
  const ThinSvd svd_v = thin_svd(x_v);
  const Matrix u = polar_factor(svd_u);
  const Matrix v = polar_factor(svd_v);
  const Vector d = eta_d.array().exp();
  const double sigma2 = std::exp(eta_sigma);
  const double phi = std::tanh(eta_phi);
  const double log_1mphi2 = log_one_minus_tanh2(eta_phi);
  const double one_m_phi2 = std::exp(log_1mphi2);
  const double rho = std::exp(eta_rho);
  if (!std::isfinite(sigma2) || !(sigma2 > 0.0) || !(one_m_phi2 > 0.0) || !std::isfinite(rho) || !(rho > 0.0) ||
      !d.allFinite() || !(d.array() > 0.0).all()) {
    throw DegenerateInputError("fpca: transformed parameter left its domain");
  }

  // Residual series are the columns of resid_t (one per row of Y).
  const Matrix ud = u * d.asDiagonal();
  const Matrix resid_t = data_.y.transpose() - v * ud.transpose();
  Matrix grad_resid_t(p_, n_);
  const double pd = static_cast<double>(p_);
  double loglik = 0.0;
  double dl_dsigma2 = 0.0;
  double dl_dphi = 0.0;
  std::vector<double> g_inn(static_cast<std::size_t>(p_));
  for (Eigen::Index i = 0; i < n_; ++i) {
    const std::span<const double> row(resid_t.col(i).data(), static_cast<std::size_t>(p_));
    const kernels::Ar1Innovations inn = kernels::ar1_innovations(row, phi);
    const double quad = row[0] * row[0] + inn.ss / one_m_phi2;
    loglik += -0.5 * quad / sigma2;
    dl_dsigma2 += 0.5 * quad / (sigma2 * sigma2);
    const double dss_dphi = -2.0 * inn.cross;
    const double dquad_dphi = dss_dphi / one_m_phi2 + inn.ss * 2.0 * phi / (one_m_phi2 * one_m_phi2);
    dl_dphi += -0.5 * dquad_dphi / sigma2;
    kernels::ar1_innovation_grad(row, phi, g_inn);
    double* out = grad_resid_t.col(i).data();
    const double scale = -0.5 / (sigma2 * one_m_phi2);
    for (Eigen::Index t = 0; t < p_; ++t) out[t] = scale * g_inn[t];
    out[0] += -row[0] / sigma2;
  }
  const double nd = static_cast<double>(n_);
  loglik += -0.5 * nd * pd * (kLog2Pi + eta_sigma) - 0.5 * nd * (pd - 1.0) * log_1mphi2;
  dl_dsigma2 += -0.5 * nd * pd / sigma2;
  dl_dphi += nd * (pd - 1.0) * phi / one_m_phi2;

  // Resid = Y - U D V^T, so dL/dU = -G V D, dL/dV = -G^T U D with G = dL/dResid.
  const Matrix gv = grad_resid_t.transpose() * v;  // n x k
  const Matrix grad_u = -gv * d.asDiagonal();
  const Matrix grad_v = -grad_resid_t * ud;
  Vector dl_dd(k_);
  for (int j = 0; j < k_; ++j) dl_dd(j) = -u.col(j).dot(gv.col(j));

  // MACG(K(rho)) prior on V through the matrix-normal density of X_V.
  const Matrix kmat = se_kernel_matrix(data_.grid, rho, hyper_.nugget);
  const Eigen::LLT<Matrix> llt(kmat);
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array() > 0.0).all()) {
    throw DegenerateInputError("fpca: K(rho) lost positive definiteness");
  }
  const double log_det_k = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const Matrix a = llt.solve(Matrix(x_v));  // K^{-1} X_V
  const double kd = static_cast<double>(k_);
  const double lp_v = -0.5 * kd * log_det_k - 0.5 * x_v.cwiseProduct(a).sum();
  const Matrix kinv = llt.solve(Matrix::Identity(p_, p_));
  const Matrix b = a * a.transpose() - kd * kinv;
  const double inv_rho3 = 1.0 / (rho * rho * rho);
  double dlv_drho = 0.0;
  for (Eigen::Index j = 0; j < p_; ++j)
    for (Eigen::Index i = 0; i < p_; ++i) {
      if (i == j) continue;
      dlv_drho += kmat(i, j) * 2.0 * sq_dist_(i, j) * inv_rho3 * b(i, j);
    }
  dlv_drho *= 0.5;

  const double lp_u = -0.5 * x_u.squaredNorm();

  // Scalar priors.
  const double lp_rho = log_invgamma(rho, hyper_.alpha, hyper_.beta);
  const double dlp_drho = -(hyper_.alpha + 1.0) / rho + hyper_.beta / (rho * rho);
  const double lp_phi = -std::log(std::numbers::pi) - 0.5 * log_1mphi2;
  const double dlp_dphi = phi / one_m_phi2;
  const double sig_shape = 0.5 * hyper_.nu;
  const double sig_scale = 0.5 * hyper_.nu * hyper_.s2;
  const double lp_sigma = log_invgamma(sigma2, sig_shape, sig_scale);
  const double dlp_dsigma2 = -(sig_shape + 1.0) / sigma2 + sig_scale / (sigma2 * sigma2);
  double lp_d = 0.0;
  for (int j = 0; j < k_; ++j) lp_d += log_halfnormal(d(j), hyper_.tau2);

  // Jacobians of the unconstraining transforms.
  const double log_jac = eta_d.sum() + eta_sigma + log_1mphi2 + eta_rho;

  const double logp = loglik + lp_v + lp_u + lp_rho + lp_phi + lp_sigma + lp_d + log_jac;

  grad.resize(dim());
  const Matrix gx_u = -x_u + vjp_(svd_u, grad_u);
  const Matrix gx_v = -a + vjp_(svd_v, grad_v);
  grad.head(n_ * k_) = Eigen::Map<const Vector>(gx_u.data(), gx_u.size());
  grad.segment(n_ * k_, p_ * k_) = Eigen::Map<const Vector>(gx_v.data(), gx_v.size());
  for (int j = 0; j < k_; ++j) grad(off + j) = (dl_dd(j) - d(j) / hyper_.tau2) * d(j) + 1.0;
  grad(off + k_) = (dl_dsigma2 + dlp_dsigma2) * sigma2 + 1.0;
  grad(off + k_ + 1) = (dl_dphi + dlp_dphi) * one_m_phi2 - 2.0 * phi;
  grad(off + k_ + 2) = (dlv_drho + dlp_drho) * rho + 1.0;
  return logp;
}

FpcaTarget fpca_target(FpcaData data, FpcaHyper hyper) { return FpcaTarget(std::move(data), hyper); }

void RunningMean::add(const Matrix& m) {
  if (count_ == 0) {
    mean_ = m;
    count_ = 1;
    return;
  }
  if (m.rows() != mean_.rows() || m.cols() != mean_.cols()) throw DomainError("RunningMean: shape mismatch");
  ++count_;
  mean_ += (m - mean_) / static_cast<double>(count_);
}

Matrix fpca_point_estimate_V(const Matrix& mean_udvt, int k) {
  if (k < 1 || k > std::min(mean_udvt.rows(), mean_udvt.cols())) throw DomainError("fpca_point_estimate_V: bad rank");
  Eigen::JacobiSVD<Matrix> svd(mean_udvt, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixV().leftCols(k);
}

double principal_angle_degrees(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DomainError("principal_angle: row mismatch");
  const Matrix qa = polar_factor(a);
  const Matrix qb = polar_factor(b);
  Eigen::JacobiSVD<Matrix> svd(qa.transpose() * qb);
  const double smallest = std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0);
  return std::acos(smallest) * 180.0 / std::numbers::pi;
}

int zero_crossings(const Eigen::Ref<const Vector>& series) {
  int count = 0;
  int last = 0;
  for (Eigen::Index i = 0; i < series.size(); ++i) {
    const int s = series(i) > 0.0 ? 1 : (series(i) < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

SimulatedFpca simulate_fpca(Eigen::Index n, std::vector<double> grid, int k, const Vector& d, double sigma2,
                            double phi, double rho, Rng& rng, double nugget) {
  const Eigen::Index p = static_cast<Eigen::Index>(grid.size());
  if (d.size() != k || k < 1 || k > n || k > p) throw DomainError("simulate_fpca: need len(d) = k <= min(n, p)");
  if (!(sigma2 >= 0.0) || !(std::abs(phi) < 1.0) || !(rho > 0.0)) throw DomainError("simulate_fpca: invalid parameters");
  SimulatedFpca sim;
  const MacgParams prior{se_kernel(SeKernelParams{grid, rho, nugget})};
  sim.v = sample_macg(prior, k, rng).matrix();
  sim.u = sample_uniform_stiefel(static_cast<int>(n), k, rng).matrix();
  sim.d = d;
  const Matrix signal = sim.u * d.asDiagonal() * sim.v.transpose();
  Matrix noise(n, p);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(sigma2);
  const double innov_sd = sd * std::sqrt(1.0 - phi * phi);
  for (Eigen::Index i = 0; i < n; ++i) {
    noise(i, 0) = sd * normal(rng);
    for (Eigen::Index t = 1; t < p; ++t) noise(i, t) = phi * noise(i, t - 1) + innov_sd * normal(rng);
  }
  sim.centered_signal = double_center(signal);
  sim.data = FpcaData::from_raw(signal + noise, std::move(grid));
  return sim;
}

}  // namespace polar
