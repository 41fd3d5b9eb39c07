// mlsl: command-line driver for the sweeps, the observation pipeline and the
// self check.

#include "mlsl/config.hpp"
#include "mlsl/errors.hpp"
#include "mlsl/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

void add_common(CLI::App* cmd, Common& c, bool need_config) {
  auto* opt = cmd->add_option("--config", c.config, "config document (INI)");
  if (need_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "overrides [model] seed");
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

void print_reports(const std::vector<mlsl::BoundReport>& reports) {
  for (const auto& r : reports) {
    double worst = 1e300;
    for (std::size_t i = 0; i < r.times.size(); ++i) worst = std::min(worst, r.margin[i] / r.bound[i]);
    std::printf("%-28s points=%zu min_relative_margin=%.6g\n", r.label.c_str(), r.times.size(), worst);
  }
}

int run_simulate(const Common& c) {
  const mlsl::SimConfig cfg = mlsl::load_config(c.config, c.seed);
  mlsl::SweepOptions so;
  so.threads = c.threads;
  so.keep_final_husimi = true;
  std::vector<mlsl::BoundReport> reports;
  if (cfg.field.kind == mlsl::FieldSpec::Kind::EpsilonRotation) {
    reports = mlsl::run_double_limit_sweep(cfg, {cfg.field.eps}, {cfg.hbar}, so);
  } else {
    reports = mlsl::run_single_limit_sweep(cfg, {cfg.hbar}, so);
  }
  mlsl::emit_outputs(reports, {}, cfg, c.out);
  print_reports(reports);
  return 0;
}

int run_sweep(const Common& c, const std::vector<double>& hbar, const std::vector<double>& eps) {
  const mlsl::SimConfig cfg = mlsl::load_config(c.config, c.seed);
  mlsl::SweepOptions so;
  so.threads = c.threads;
  const std::vector<double> hs = hbar.empty() ? std::vector<double>{cfg.hbar} : hbar;
  const std::vector<mlsl::BoundReport> reports =
      eps.empty() ? mlsl::run_single_limit_sweep(cfg, hs, so) : mlsl::run_double_limit_sweep(cfg, eps, hs, so);
  mlsl::emit_outputs(reports, {}, cfg, c.out);
  print_reports(reports);
  return 0;
}

int run_observe(const Common& c) {
  const mlsl::SimConfig cfg = mlsl::load_config(c.config, c.seed);
  const mlsl::ObservationReport r = mlsl::run_observation(cfg, c.threads);
  mlsl::emit_outputs({}, {r}, cfg, c.out);
  std::printf("gc_satisfied=%s c_geo=%.6g cstar=%.6g lambda_star=%.6g delta=%.6g c_obs=%.6g observed=%.6g holds=%s\n",
              r.gc_satisfied ? "true" : "false", r.c_geo, r.cstar, r.lambda_star, r.delta, r.c_obs,
              r.observed_integral, r.inequality_holds ? "true" : "false");
  if (!r.gc_satisfied) {
    std::fprintf(stderr, "%s: %zu of %zu lattice points of K never reach the window before T\n",
                 std::string(mlsl::to_string(mlsl::ErrorKind::GCViolated)).c_str(), r.gc_misses, r.lattice_points);
    return 2;
  }
  return 0;
}

int run_check(const Common& c) {
  int failed = 0;
  for (const auto& chk : mlsl::self_check(c.threads)) {
    std::printf("%-20s %s  %s\n", chk.name.c_str(), chk.passed ? "PASS" : "FAIL", chk.detail.c_str());
    if (!chk.passed) ++failed;
  }
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"magnetic semiclassical limit experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mlsl::kVersion);

  Common simulate_opts, sweep_opts, observe_opts, check_opts;
  std::vector<double> hbar_list, eps_list;

  auto* simulate = app.add_subcommand("simulate", "run one configuration and write its report");
  add_common(simulate, simulate_opts, true);
  auto* sweep = app.add_subcommand("sweep", "bound sweep over hbar (and eps for the rotation field)");
  add_common(sweep, sweep_opts, true);
  sweep->add_option("--hbar", hbar_list, "comma-separated hbar values")->delimiter(',');
  sweep->add_option("--eps", eps_list, "comma-separated eps values (double limit)")->delimiter(',');
  auto* observe = app.add_subcommand("observe", "observation-inequality pipeline");
  add_common(observe, observe_opts, true);
  auto* check = app.add_subcommand("check", "reduced-size invariant suites");
  add_common(check, check_opts, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*simulate) return run_simulate(simulate_opts);
    if (*sweep) return run_sweep(sweep_opts, hbar_list, eps_list);
    if (*observe) return run_observe(observe_opts);
    if (*check) return run_check(check_opts);
  } catch (const mlsl::Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 3;
  }
  return 0;
}
