// SPDX-License-Identifier: Apache-2.0

#include <Eigen/SVD>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "polar/alignment.hpp"
#include "polar/cli.hpp"
#include "polar/csv.hpp"
#include "polar/distributions.hpp"
#include "polar/eigenmodel.hpp"
#include "polar/errors.hpp"
#include "polar/fpca.hpp"

namespace polar::cli {

using json = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  std::ofstream os(dir / name);
  if (!os) throw Error("cannot write " + (dir / name).string());
  return os;
}

void finish(std::ofstream& os, const fs::path& dir, const std::string& name) {
  os.flush();
  if (!os) throw Error("write failed for " + (dir / name).string());
}

void write_json(const fs::path& dir, const std::string& name, const json& j) {
  std::ofstream os = open_output(dir, name);
  os << j.dump(2) << '\n';
  finish(os, dir, name);
}

Rng seeded_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), stream};
  return Rng(seq);
}

HmcConfig effective(HmcConfig cfg) {
  if (cfg.threads <= 0) cfg.threads = thread_cap(cfg.chains);
  cfg.validate();
  return cfg;
}

json hmc_json(const HmcConfig& c) {
  return json{{"seed", c.seed},
              {"chains", c.chains},
              {"warmup", c.warmup_iters},
              {"samples", c.sample_iters},
              {"target_accept", c.target_accept},
              {"init_step_size", c.init_step_size},
              {"max_leapfrog", c.max_leapfrog},
              {"jitter_steps", c.jitter_steps},
              {"max_energy_error", c.max_energy_error},
              {"threads", c.threads}};
}

json chains_json(const std::vector<ChainOutput>& outputs) {
  json arr = json::array();
  for (const ChainOutput& o : outputs) {
    arr.push_back({{"chain", o.chain},
                   {"accept_rate", o.accept_rate},
                   {"step_size", o.step_size},
                   {"divergences", o.divergence_count},
                   {"warmup_divergences", o.warmup_divergences}});
  }
  return arr;
}

int total_divergences(const std::vector<ChainOutput>& outputs) {
  int n = 0;
  for (const ChainOutput& o : outputs) n += o.divergence_count;
  return n;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::string> numbered(const std::string& stem, Eigen::Index count) {
  std::vector<std::string> names;
  for (Eigen::Index i = 1; i <= count; ++i) names.push_back(stem + std::to_string(i));
  return names;
}

/// Flips columns so that each column's largest-magnitude entry is positive.
Vector sign_convention(const Matrix& v) {
  Vector s(v.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index i;
    v.col(j).cwiseAbs().maxCoeff(&i);
    s(j) = v(i, j) < 0.0 ? -1.0 : 1.0;
  }
  return s;
}

/// Uniform density on V(k, p): constant log density, zero gradient.
class UniformStiefel final : public StiefelTarget {
 public:
  UniformStiefel(int p, int k) : p_(p), k_(k) {}
  int p() const override { return p_; }
  int k() const override { return k_; }
  double log_density_gradient(const Matrix& q, Matrix& grad) const override {
    grad = Matrix::Zero(q.rows(), q.cols());
    return 0.0;
  }

 private:
  int p_, k_;
};

}  // namespace

DemoResult cmd_demo(const DemoOptions& o) {
  if (o.kind != "sphere" && o.kind != "stiefel" && o.kind != "macg") throw DomainError("demo: kind must be sphere, stiefel or macg");
  if (o.method != "exact" && o.method != "hmc") throw DomainError("demo: method must be exact or hmc");
  const int p = o.p;
  const int k = o.kind == "sphere" ? 1 : o.k;
  if (p < 1 || k < 1 || k > p) throw DomainError("demo: need p >= k >= 1");
  if (o.method == "exact" && o.draws < 1) throw DomainError("demo: draws must be >= 1");

  Matrix sigma = Matrix::Identity(p, p);
  if (o.kind == "macg" && !o.sigma_diag.empty()) {
    if (static_cast<int>(o.sigma_diag.size()) != p) throw DomainError("demo: --sigma-diag needs p entries");
    for (int i = 0; i < p; ++i) sigma(i, i) = o.sigma_diag[static_cast<std::size_t>(i)];
  }
  const MacgParams macg{SpdMatrix(sigma)};

  const HmcConfig cfg = effective(o.hmc);
  std::vector<Matrix> qs;
  json hmc_meta;
  if (o.method == "exact") {
    Rng rng = seeded_rng(cfg.seed, 0);
    qs.reserve(static_cast<std::size_t>(o.draws));
    for (int i = 0; i < o.draws; ++i) {
      qs.push_back(o.kind == "macg" ? sample_macg(macg, k, rng).matrix() : sample_uniform_stiefel(p, k, rng).matrix());
    }
  } else {
    std::vector<ChainOutput> outputs;
    if (o.kind == "macg") {
      const auto flat = std::make_shared<UniformStiefel>(p, k);
      outputs = run_chains(expand_macg_posterior(flat, macg.sigma), cfg);
    } else {
      outputs = run_chains(expand_general(std::make_shared<UniformStiefel>(p, k)), cfg);
    }
    for (const ChainOutput& c : outputs)
      for (Eigen::Index i = 0; i < c.draws.rows(); ++i)
        qs.push_back(polar_factor(Matrix(Eigen::Map<const Matrix>(c.draws.row(i).eval().data(), p, k))));
    hmc_meta = {{"config", hmc_json(cfg)}, {"chains", chains_json(outputs)}, {"divergences", total_divergences(outputs)}};
  }

  DemoResult r;
  const Eigen::Index n = static_cast<Eigen::Index>(qs.size());
  r.draws.resize(n, static_cast<Eigen::Index>(p) * k);
  Matrix mean_q = Matrix::Zero(p, k);
  Matrix mean_proj = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Matrix& q = qs[static_cast<std::size_t>(i)];
    r.draws.row(i) = Eigen::Map<const Eigen::RowVectorXd>(q.data(), q.size());
    mean_q += q;
    mean_proj += q * q.transpose();
  }
  mean_q /= static_cast<double>(n);
  mean_proj /= static_cast<double>(n);
  r.mean_norm = mean_q.norm();
  r.projection_deviation = (mean_proj - (static_cast<double>(k) / p) * Matrix::Identity(p, p)).norm();

  std::vector<std::string> header;
  for (int j = 1; j <= k; ++j)
    for (int i = 1; i <= p; ++i) header.push_back("q_" + std::to_string(i) + "_" + std::to_string(j));
  std::ofstream os = open_output(o.out, "draws.csv");
  csv::write_matrix(os, r.draws, header);
  finish(os, o.out, "draws.csv");

  json meta{{"kind", o.kind}, {"method", o.method}, {"p", p}, {"k", k}, {"draws", n}, {"seed", cfg.seed},
            {"mean_q_norm", r.mean_norm}, {"qqt_deviation", r.projection_deviation}};
  if (o.kind == "macg") meta["sigma_diag"] = std::vector<double>(sigma.diagonal().data(), sigma.diagonal().data() + p);
  if (o.method == "hmc") meta["hmc"] = hmc_meta;
  write_json(o.out, "moments.json", meta);
  return r;
}

EigenmodelResult cmd_eigenmodel(const EigenmodelOptions& o) {
  if (o.trace_thin < 1) throw DomainError("eigenmodel: --thin must be >= 1");
  const Table table = read_table(o.adjacency);
  const EigenmodelData data = EigenmodelData::from_matrix(table.values);
  const int p = data.p();
  const int k = o.k;
  const EigenmodelTarget target(data, k);
  const HmcConfig cfg = effective(o.hmc);

  const auto start = Clock::now();
  const std::vector<ChainOutput> outputs = run_chains(target, cfg);
  const double wall = seconds_since(start);

  // Per-chain draws of (c, lambda) with columns aligned to one reference draw.
  const EigenmodelParams ref_params = unpack_eigenmodel(outputs.front().draws.row(0).transpose(), p, k);
  const Matrix ref_q = polar_factor(ref_params.x);
  const LowRankDraw reference{ref_q, ref_params.lambda, ref_q};
  std::vector<Matrix> param_chains;
  RunningMean qlq;
  for (const ChainOutput& c : outputs) {
    Matrix rows(c.draws.rows(), 1 + k);
    for (Eigen::Index i = 0; i < c.draws.rows(); ++i) {
      const EigenmodelParams prm = unpack_eigenmodel(c.draws.row(i).transpose(), p, k);
      const Matrix q = polar_factor(prm.x);
      const LowRankDraw aligned = align_to(LowRankDraw{q, prm.lambda, q}, reference);
      rows(i, 0) = prm.c;
      rows.row(i).tail(k) = aligned.scale.transpose();
      qlq.add(q * prm.lambda.asDiagonal() * q.transpose());
    }
    param_chains.push_back(std::move(rows));
  }

  EigenmodelResult result;
  std::vector<std::string> names{"c"};
  for (const std::string& s : numbered("lambda_", k)) names.push_back(s);
  result.summary = summarize(param_chains, names);
  result.qlq_mean = qlq.mean();
  result.divergences = total_divergences(outputs);

  {
    std::ofstream os = open_output(o.out, "lambda_trace.csv");
    std::vector<std::string> header{"iteration", "chain"};
    for (const std::string& s : numbered("lambda_", k)) header.push_back(s);
    csv::write_row(os, header);
    for (std::size_t c = 0; c < param_chains.size(); ++c) {
      for (Eigen::Index i = 0; i < param_chains[c].rows(); ++i) {
        std::vector<std::string> row{std::to_string(i + 1), std::to_string(c)};
        for (int j = 0; j < k; ++j) row.push_back(csv::format_double(param_chains[c](i, 1 + j)));
        csv::write_row(os, row);
      }
    }
    finish(os, o.out, "lambda_trace.csv");
  }
  {
    std::ofstream os = open_output(o.out, "summary.csv");
    write_summary_csv(os, result.summary);
    finish(os, o.out, "summary.csv");
  }
  {
    std::ofstream os = open_output(o.out, "qlq_mean.csv");
    csv::write_matrix(os, result.qlq_mean, numbered("node_", p));
    finish(os, o.out, "qlq_mean.csv");
  }
  {
    std::ofstream os = open_output(o.out, "trace_tidy.csv");
    write_trace_tidy_csv(os, param_chains, names, o.trace_thin);
    finish(os, o.out, "trace_tidy.csv");
  }

  json meta{{"command", "eigenmodel"},
            {"adjacency", o.adjacency.string()},
            {"p", p},
            {"k", k},
            {"thin", o.trace_thin},
            {"hmc", hmc_json(cfg)},
            {"divergences", result.divergences},
            {"chains", chains_json(outputs)},
            {"wall_time_seconds", wall}};
  write_json(o.out, "run_meta.json", meta);
  return result;
}

FpcaResult cmd_fpca(const FpcaOptions& o) {
  if (o.curve_thin < 1) throw DomainError("fpca: --curve-thin must be >= 1");
  if (o.pc_multiple && !(*o.pc_multiple >= 0.0)) throw DomainError("fpca: --pc-multiple must be >= 0");
  const Table table = read_table(o.data);
  const Matrix y_raw = subsample_columns(table.values, o.stride);
  const Eigen::Index n = y_raw.rows();
  const Eigen::Index p = y_raw.cols();
  const int k = o.k;
  std::vector<double> grid(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) grid[static_cast<std::size_t>(j)] = static_cast<double>(j * o.stride);

  FpcaData data = FpcaData::from_raw(y_raw, grid);
  const FpcaHyper hyper = fpca_empirical_bayes(data.y, k, o.nugget);
  Eigen::JacobiSVD<Matrix> classical(data.y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const FpcaTarget target(std::move(data), hyper);
  const HmcConfig cfg = effective(o.hmc);

  // Chains start near the classical decomposition with small per-chain jitter.
  std::vector<Vector> init;
  for (int c = 0; c < cfg.chains; ++c) {
    Rng rng = seeded_rng(cfg.seed, 0x10000u + static_cast<std::uint32_t>(c));
    std::normal_distribution<double> normal(0.0, 1.0);
    FpcaParams prm;
    prm.x_u = std::sqrt(static_cast<double>(n)) * classical.matrixU().leftCols(k) + 0.1 * standard_normal_matrix(n, k, rng);
    prm.x_v = std::sqrt(static_cast<double>(p)) * classical.matrixV().leftCols(k) + 0.1 * standard_normal_matrix(p, k, rng);
    prm.eta_d = classical.singularValues().head(k).array().max(1e-8).log();
    for (int j = 0; j < k; ++j) prm.eta_d(j) += 0.1 * normal(rng);
    prm.eta_sigma = std::log(std::max(hyper.sigma2_hat, 1e-8)) + 0.1 * normal(rng);
    prm.eta_phi = 0.1 * normal(rng);
    prm.eta_rho = std::log(kRhoPriorMean) + 0.1 * normal(rng);
    init.push_back(pack(prm));
  }

  const auto start = Clock::now();
  const std::vector<ChainOutput> outputs = run_chains(target, cfg, init);
  const double wall = seconds_since(start);

  // Pass 1: posterior mean of U D V^T.
  RunningMean mean_udvt;
  for (const ChainOutput& c : outputs) {
    for (Eigen::Index i = 0; i < c.draws.rows(); ++i) {
      const FpcaState s = target.decode(c.draws.row(i).transpose());
      mean_udvt.add(s.u * s.d.asDiagonal() * s.v.transpose());
    }
  }
  Eigen::JacobiSVD<Matrix> mean_svd(mean_udvt.mean(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  FpcaResult result;
  result.grid = grid;
  result.v_estimate = fpca_point_estimate_V(mean_udvt.mean(), k);
  result.v_estimate = result.v_estimate * sign_convention(result.v_estimate).asDiagonal();
  result.v_classical = classical.matrixV().leftCols(k);
  result.v_classical = result.v_classical * sign_convention(result.v_classical).asDiagonal();
  const Vector ref_sign = sign_convention(mean_svd.matrixV().leftCols(k));
  const LowRankDraw reference{mean_svd.matrixU().leftCols(k) * ref_sign.asDiagonal(), mean_svd.singularValues().head(k),
                              mean_svd.matrixV().leftCols(k) * ref_sign.asDiagonal()};

  // Pass 2: aligned scalar summaries and thinned curves.
  const int curve = std::min(3, k) - 1;
  std::vector<Matrix> param_chains;
  std::vector<std::vector<std::string>> curve_rows;
  std::vector<std::vector<std::string>> rho_rows;
  for (std::size_t c = 0; c < outputs.size(); ++c) {
    const Matrix& draws = outputs[c].draws;
    Matrix rows(draws.rows(), k + 3);
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
      const FpcaState s = target.decode(draws.row(i).transpose());
      const LowRankDraw aligned = align_to(LowRankDraw{s.u, s.d, s.v}, reference);
      rows.row(i).head(k) = aligned.scale.transpose();
      rows(i, k) = s.sigma2;
      rows(i, k + 1) = s.phi;
      rows(i, k + 2) = s.rho;
      rho_rows.push_back({std::to_string(i + 1), std::to_string(c), csv::format_double(s.rho)});
      if (i % o.curve_thin == 0) {
        std::vector<std::string> row{std::to_string(i + 1), std::to_string(c)};
        for (Eigen::Index t = 0; t < p; ++t) row.push_back(csv::format_double(aligned.right(t, curve)));
        curve_rows.push_back(std::move(row));
      }
    }
    param_chains.push_back(std::move(rows));
  }
  std::vector<std::string> names = numbered("d_", k);
  names.insert(names.end(), {"sigma2", "phi", "rho"});
  result.summary = summarize(param_chains, names);
  result.divergences = total_divergences(outputs);

  std::vector<std::string> day_header;
  for (double t : grid) day_header.push_back("day_" + std::to_string(static_cast<long>(t)));

  auto write_curves = [&](const std::string& name, const Matrix& v) {
    std::ofstream os = open_output(o.out, name);
    std::vector<std::string> header{"day"};
    for (const std::string& s : numbered("v_", k)) header.push_back(s);
    csv::write_row(os, header);
    for (Eigen::Index t = 0; t < p; ++t) {
      std::vector<std::string> row{std::to_string(static_cast<long>(grid[static_cast<std::size_t>(t)]))};
      for (int j = 0; j < k; ++j) row.push_back(csv::format_double(v(t, j)));
      csv::write_row(os, row);
    }
    finish(os, o.out, name);
  };
  write_curves("v_estimate.csv", result.v_estimate);
  write_curves("v_classical.csv", result.v_classical);
  {
    std::ofstream os = open_output(o.out, "rho_draws.csv");
    csv::write_row(os, {"iteration", "chain", "rho"});
    for (const auto& row : rho_rows) csv::write_row(os, row);
    finish(os, o.out, "rho_draws.csv");
  }
  {
    std::ofstream os = open_output(o.out, "v3_draws.csv");
    std::vector<std::string> header{"iteration", "chain"};
    header.insert(header.end(), day_header.begin(), day_header.end());
    csv::write_row(os, header);
    for (const auto& row : curve_rows) csv::write_row(os, row);
    finish(os, o.out, "v3_draws.csv");
  }
  std::vector<double> multiples;
  {
    const Vector col_means = y_raw.colwise().mean().transpose();
    std::ofstream os = open_output(o.out, "pc_effect.csv");
    std::vector<std::string> header{"day", "mean"};
    for (int j = 1; j <= k; ++j) {
      header.push_back("pc" + std::to_string(j) + "_plus");
      header.push_back("pc" + std::to_string(j) + "_minus");
    }
    csv::write_row(os, header);
    for (int j = 0; j < k; ++j) {
      multiples.push_back(o.pc_multiple ? *o.pc_multiple
                                        : 2.0 * result.summary[static_cast<std::size_t>(j)].mean / std::sqrt(static_cast<double>(n)));
    }
    for (Eigen::Index t = 0; t < p; ++t) {
      std::vector<std::string> row{std::to_string(static_cast<long>(grid[static_cast<std::size_t>(t)])),
                                   csv::format_double(col_means(t))};
      for (int j = 0; j < k; ++j) {
        const double shift = multiples[static_cast<std::size_t>(j)] * result.v_estimate(t, j);
        row.push_back(csv::format_double(col_means(t) + shift));
        row.push_back(csv::format_double(col_means(t) - shift));
      }
      csv::write_row(os, row);
    }
    finish(os, o.out, "pc_effect.csv");
  }
  {
    std::ofstream os = open_output(o.out, "summary.csv");
    write_summary_csv(os, result.summary);
    finish(os, o.out, "summary.csv");
  }

  json meta{{"command", "fpca"},
            {"data", o.data.string()},
            {"n", n},
            {"p", p},
            {"k", k},
            {"stride", o.stride},
            {"curve_thin", o.curve_thin},
            {"curve_component", curve + 1},
            {"pc_multiple", multiples},
            {"pc_multiple_source", o.pc_multiple ? "flag" : "default"},
            {"hyper",
             {{"nu", hyper.nu},
              {"s2", hyper.s2},
              {"tau2", hyper.tau2},
              {"rho_alpha", hyper.alpha},
              {"rho_beta", hyper.beta},
              {"nugget", hyper.nugget},
              {"sigma2_hat", hyper.sigma2_hat},
              {"zero_residual", hyper.zero_residual}}},
            {"angle_to_classical_degrees", principal_angle_degrees(result.v_estimate, result.v_classical)},
            {"hmc", hmc_json(cfg)},
            {"divergences", result.divergences},
            {"chains", chains_json(outputs)},
            {"wall_time_seconds", wall}};
  write_json(o.out, "run_meta.json", meta);
  return result;
}

}  // namespace polar::cli
