// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "CLI11.hpp"
#include "polar/cli.hpp"
#include "polar/errors.hpp"

namespace polar::cli {

namespace {

void add_hmc_options(CLI::App& app, HmcConfig& hmc, fs::path& out) {
  app.add_option("--seed", hmc.seed, "Random seed")->capture_default_str();
  app.add_option("--chains", hmc.chains, "Number of chains")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--warmup", hmc.warmup_iters, "Warmup iterations per chain")->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--samples", hmc.sample_iters, "Post-warmup iterations per chain")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--target-accept", hmc.target_accept, "Target acceptance probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  app.add_option("--max-leapfrog", hmc.max_leapfrog, "Maximum leapfrog steps per transition")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output directory")->capture_default_str();
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Polar-expansion samplers for orthogonal-matrix models"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file of option values; command-line flags take precedence");

  DemoOptions demo;
  auto* demo_cmd = app.add_subcommand("demo", "Draw from the uniform sphere/Stiefel or an MACG law");
  demo_cmd->add_option("kind", demo.kind, "sphere | stiefel | macg")->check(CLI::IsMember({"sphere", "stiefel", "macg"}))->capture_default_str();
  demo_cmd->add_option("--p", demo.p, "Ambient dimension")->capture_default_str();
  demo_cmd->add_option("--k", demo.k, "Number of columns (ignored for sphere)")->capture_default_str();
  demo_cmd->add_option("--draws", demo.draws, "Number of exact draws")->capture_default_str();
  demo_cmd->add_option("--sigma-diag", demo.sigma_diag, "Diagonal of Sigma for macg")->delimiter(',');
  demo_cmd->add_option("--method", demo.method, "exact | hmc")->check(CLI::IsMember({"exact", "hmc"}))->capture_default_str();
  add_hmc_options(*demo_cmd, demo.hmc, demo.out);

  EigenmodelOptions eig;
  auto* eig_cmd = app.add_subcommand("eigenmodel", "Fit the probit network eigenmodel to an adjacency CSV");
  eig_cmd->add_option("adjacency", eig.adjacency, "Symmetric 0/1 adjacency CSV")->required()->check(CLI::ExistingFile);
  eig_cmd->add_option("--k", eig.k, "Latent rank")->capture_default_str()->check(CLI::PositiveNumber);
  eig_cmd->add_option("--thin", eig.trace_thin, "Thinning for trace_tidy.csv")->capture_default_str()->check(CLI::PositiveNumber);
  add_hmc_options(*eig_cmd, eig.hmc, eig.out);

  FpcaOptions fp;
  double pc_multiple = -1.0;
  auto* fp_cmd = app.add_subcommand("fpca", "Fit Bayesian functional PCA to an n x p curve CSV");
  fp_cmd->add_option("data", fp.data, "Rows are units, columns are grid points")->required()->check(CLI::ExistingFile);
  fp_cmd->add_option("--k", fp.k, "Number of components")->capture_default_str()->check(CLI::PositiveNumber);
  fp_cmd->add_option("--stride", fp.stride, "Keep every stride-th grid point")->capture_default_str()->check(CLI::PositiveNumber);
  auto* pc_opt = fp_cmd->add_option("--pc-multiple", pc_multiple, "Multiple of each PC curve in pc_effect.csv");
  fp_cmd->add_option("--curve-thin", fp.curve_thin, "Thinning for v3_draws.csv")->capture_default_str()->check(CLI::PositiveNumber);
  fp_cmd->add_option("--nugget", fp.nugget, "Diagonal jitter added to K(rho)")->capture_default_str();
  add_hmc_options(*fp_cmd, fp.hmc, fp.out);

  CheckOptions chk;
  bool inject = false;
  auto* chk_cmd = app.add_subcommand("check", "Run gradient, quadrature and ESS self-checks");
  chk_cmd->add_option("--points", chk.points, "Random points per gradient check")->capture_default_str()->check(CLI::PositiveNumber);
  chk_cmd->add_option("--seed", chk.seed, "Random seed")->capture_default_str();
  chk_cmd->add_option("--out", chk.out, "Output directory")->capture_default_str();
  chk_cmd->add_flag("--inject-vjp-fault", inject, "Use a deliberately wrong polar pullback");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*demo_cmd) {
      const DemoResult r = cmd_demo(demo);
      std::cout << "draws " << r.draws.rows() << ", ||mean Q|| " << r.mean_norm << ", ||mean QQ^T - (k/p)I|| "
                << r.projection_deviation << "\n";
    } else if (*eig_cmd) {
      const EigenmodelResult r = cmd_eigenmodel(eig);
      for (const SummaryRow& row : r.summary)
        std::cout << row.name << " mean " << row.mean << " ess/iter " << row.ess_per_iter << " rhat " << row.rhat << "\n";
      std::cout << "divergences " << r.divergences << "\n";
    } else if (*fp_cmd) {
      if (*pc_opt) fp.pc_multiple = pc_multiple;
      const FpcaResult r = cmd_fpca(fp);
      for (const SummaryRow& row : r.summary)
        std::cout << row.name << " mean " << row.mean << " sd " << row.sd << " rhat " << row.rhat << "\n";
      std::cout << "divergences " << r.divergences << "\n";
    } else if (*chk_cmd) {
      if (inject) chk.vjp = &faulty_polar_vjp;
      const CheckReport r = cmd_check(chk);
      for (const CheckEntry& e : r.entries) {
        std::cout << (e.passed ? "PASS " : "FAIL ") << e.name << " max_rel_error " << e.max_rel_error << " (tol "
                  << e.tolerance << ")";
        if (!e.passed) std::cout << " worst: " << e.worst;
        std::cout << "\n";
      }
      if (!r.passed()) return kExitNumerical;
    }
  } catch (const IngestionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace polar::cli
