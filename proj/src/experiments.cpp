#include "mlsl/experiments.hpp"

#include "mlsl/classical_flow.hpp"
#include "mlsl/errors.hpp"
#include "mlsl/quantum.hpp"
#include "mlsl/transport.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace mlsl {

namespace fs = std::filesystem;

void BoundReport::validate() const {
  const std::size_t n = times.size();
  if (measured_dist2.size() != n || bound.size() != n || margin.size() != n) {
    fail(ErrorKind::InvariantViolation, "report series of unequal length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (margin[i] != bound[i] - measured_dist2[i]) fail(ErrorKind::InvariantViolation, "margin is not bound - measured");
  }
}

double support_radius(const AtomicMeasure& f, const FieldSpec& field, const PotentialSpec& potential) {
  double e = 0.0;
  for (const auto& p : f.points) e = std::max(e, classical_energy(p, field, potential));
  return std::sqrt(e);
}

void check_support(const AtomicMeasure& f, const FieldSpec& field, const PotentialSpec& potential, double rho0) {
  for (const auto& p : f.points) {
    if (classical_energy(p, field, potential) > rho0 * rho0) {
      fail(ErrorKind::SupportViolation, "initial atom outside the energy sublevel set of level rho0^2");
    }
  }
}

std::vector<double> report_times(double t_final, double checkpoint) {
  std::vector<double> t{0.0};
  const long steps = static_cast<long>(std::floor(t_final / checkpoint + 1e-9));
  for (long k = 1; k <= steps; ++k) t.push_back(k * checkpoint);
  if (t_final - t.back() > 1e-9 * std::max(1.0, t_final)) t.push_back(t_final);
  return t;
}

namespace {

std::string fmt(double v, const char* f = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Case {
  FieldSpec field;
  PotentialSpec potential;
  double hbar = 0.1;
  std::optional<double> eps;
  std::string label;
};

BoundReport run_case(const SimConfig& c, const Case& k, const SweepOptions& opts) {
  Grid grid{c.d, c.grid_n, c.box_halfwidth, k.hbar};
  grid.validate();
  k.field.check_dimension(c.d);
  const AtomicMeasure& f_in = c.atoms_f;
  const AtomicMeasure& mu = c.matched ? c.atoms_f : c.atoms_mu;
  const double d = c.d;
  const double rho0 = support_radius(f_in, k.field, k.potential);
  check_support(f_in, k.field, k.potential, rho0);

  BoundReport r;
  r.label = k.label;
  r.hbar = k.hbar;
  r.eps = k.eps;
  r.config_hash = config_hash(c);
  r.constants = constants(k.potential.L, k.field.K, k.field.Kp, rho0, 1.0);
  if (k.eps) {
    r.constants.eps = k.eps;
    r.constants.rate_C = double_limit_rate(*k.eps, k.potential.L);
  }
  r.dist_in2 = w2_exact(f_in, mu).cost;

  // The sandwich uses the configured lambda for the single limit and the
  // eps-weighted cost (lambda = 1) for the double limit.
  CostParams cp;
  cp.hbar = k.hbar;
  cp.lambda = k.eps ? 1.0 : c.lambda;
  cp.eps = k.eps;
  const UpperBound up0 = pseudo_distance_upper_detail(f_in, mu, cp);
  const TheoremConstants growth_c = constants(k.potential.L, k.field.K, k.field.Kp, rho0, cp.lambda);
  const double l2 = cp.lambda * cp.lambda;
  const double w = cp.momentum_weight();

  FlowParams fp;
  fp.field = k.field;
  fp.potential = k.potential;
  fp.dt = c.dt_classical;

  DensityMixture R = toeplitz_mixture(mu, grid);
  AtomicMeasure f = f_in;
  double prev = 0.0;
  for (double t : report_times(c.t_final, c.checkpoint)) {
    if (t > prev) {
      R = propagate_mixture(R, t - prev, k.field, k.potential, c.dt_quantum, opts.threads);
      f = pushforward(f, t - prev, fp, opts.threads);
      prev = t;
    }
    PhaseGridOptions po;
    po.include = f.points;
    const PhaseGridDensity hus = husimi_overlap(R, covering_phase_grid(R, po));
    const double dist = w2_cloud_grid(f, hus, c.transport).distance;
    const double measured = dist * dist;

    double bound = 0.0, growth = 0.0;
    if (k.eps) {
      const double add = 0.5 * (1.0 + *k.eps * *k.eps) * k.hbar;
      growth = std::exp(r.constants.rate_C * t);
      bound = growth * (r.dist_in2 + add) + add;
    } else {
      const double add = d * k.hbar / 2.0;
      bound = r.constants.beta * std::exp(r.constants.alpha * t) * (r.dist_in2 + add) + add;
      growth = growth_c.beta * std::exp(growth_c.alpha * t);
    }
    // At t = 0 the coupling value is used directly.
    if (t == 0.0) growth = 1.0;

    r.times.push_back(t);
    r.measured_dist2.push_back(measured);
    r.bound.push_back(bound);
    r.margin.push_back(bound - measured);
    r.lower.push_back(0.5 * std::min(l2, w) * measured - (l2 + w) * d * k.hbar / 4.0);
    r.upper.push_back(growth * up0.value);
    r.loose_upper.push_back(growth * up0.loose_bound);
    if (opts.keep_final_husimi && t == c.t_final) r.final_husimi = std::make_shared<PhaseGridDensity>(hus);
  }
  r.validate();
  return r;
}

}  // namespace

std::vector<BoundReport> run_single_limit_sweep(const SimConfig& config, const std::vector<double>& hbar_list,
                                                const SweepOptions& opts) {
  config.validate();
  std::vector<BoundReport> out;
  for (double h : hbar_list) {
    if (!(h > 0.0)) fail(ErrorKind::NonPositiveInput, "hbar must be positive");
    Case k{config.field, config.potential, h, std::nullopt, "single_hbar" + fmt(h, "%g")};
    out.push_back(run_case(config, k, opts));
  }
  return out;
}

std::vector<BoundReport> run_double_limit_sweep(const SimConfig& config, const std::vector<double>& eps_list,
                                                const std::vector<double>& hbar_list, const SweepOptions& opts) {
  config.validate();
  if (config.d != 2) fail(ErrorKind::DimensionMismatch, "the double limit runs in d = 2");
  std::vector<BoundReport> out;
  for (double e : eps_list) {
    for (double h : hbar_list) {
      if (!(h > 0.0)) fail(ErrorKind::NonPositiveInput, "hbar must be positive");
      Case k{FieldSpec::epsilon_rotation(e), config.potential, h, e, "double_eps" + fmt(e, "%g") + "_hbar" + fmt(h, "%g")};
      out.push_back(run_case(config, k, opts));
    }
  }
  return out;
}

namespace {

std::vector<PhaseVec> box_lattice(const PhaseVec& center, double hw, int per_axis) {
  const Eigen::VectorXd c = center.flat();
  const int D = static_cast<int>(c.size());
  std::size_t total = 1;
  for (int a = 0; a < D; ++a) total *= static_cast<std::size_t>(per_axis);
  std::vector<PhaseVec> pts;
  pts.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::vector<double> flat(static_cast<std::size_t>(D));
    std::size_t rem = idx;
    for (int a = D - 1; a >= 0; --a) {
      const int i = static_cast<int>(rem % per_axis);
      rem /= per_axis;
      const double off = per_axis == 1 ? 0.0 : -hw + 2.0 * hw * i / (per_axis - 1);
      flat[static_cast<std::size_t>(a)] = c[a] + off;
    }
    pts.push_back(PhaseVec::from_flat(flat));
  }
  return pts;
}

}  // namespace

ObservationReport run_observation(const SimConfig& c, const ObserveSettings& o, int threads) {
  c.validate();
  ObservationReport r;
  r.config_hash = config_hash(c);
  FlowParams fp;
  fp.field = c.field;
  fp.potential = c.potential;
  fp.dt = o.dt;

  const std::vector<PhaseVec> lattice = box_lattice(o.k_center, o.k_halfwidth, o.lattice);
  std::vector<VisitSummary> visits(lattice.size());
  detail::parallel_for(lattice.size(), threads, [&](std::size_t i) { visits[i] = visit(lattice[i], o.omega, o.horizon, fp); });
  r.lattice_points = lattice.size();
  r.c_geo = std::numeric_limits<double>::infinity();
  for (const auto& v : visits) {
    if (!v.hit) ++r.gc_misses;
    r.c_geo = std::min(r.c_geo, v.occupation);
  }
  r.gc_satisfied = r.gc_misses == 0;

  AtomicMeasure f_in = o.use_initial_atoms ? c.atoms_f : AtomicMeasure::dirac(o.k_center);
  const Eigen::VectorXd kc = o.k_center.flat();
  for (const auto& p : f_in.points) {
    if ((p.flat() - kc).cwiseAbs().maxCoeff() > o.k_halfwidth) {
      fail(ErrorKind::SupportViolation, "initial atom outside the observation box K");
    }
  }
  r.rho0 = support_radius(f_in, c.field, c.potential);
  const CstarResult cs = optimize_cstar(o.horizon, c.potential.L, c.field.K, c.field.Kp, r.rho0, c.d, c.hbar);
  r.lambda_star = cs.lambda_star;
  r.cstar = cs.cstar;
  if (o.delta) {
    r.delta = *o.delta;
  } else {
    r.delta = r.c_geo > 0.0 ? 2.0 * r.cstar / r.c_geo : 1.0;
  }
  r.c_obs = r.c_geo - r.cstar / r.delta;

  const Grid grid{c.d, c.grid_n, c.box_halfwidth, c.hbar};
  grid.validate();
  DensityMixture R = toeplitz_mixture(f_in, grid);
  const Region omega = o.omega;
  const double delta = r.delta;
  auto indicator = [&](const Vec& x) { return omega.distance(x) < delta ? 1.0 : 0.0; };
  const int nodes = o.checkpoints;
  double prev = 0.0;
  for (int j = 0; j < nodes; ++j) {
    const double t = o.horizon * j / (nodes - 1);
    if (t > prev) {
      R = propagate_mixture(R, t - prev, c.field, c.potential, c.dt_quantum, threads);
      prev = t;
    }
    r.times.push_back(t);
    r.observed_mass.push_back(expectation_multiplication(R, indicator));
  }
  double integral = 0.0;
  for (int j = 1; j < nodes; ++j) {
    integral += 0.5 * (r.times[j] - r.times[j - 1]) * (r.observed_mass[j] + r.observed_mass[j - 1]);
  }
  r.observed_integral = integral;
  r.inequality_holds = r.observed_integral >= r.c_obs - 1e-9;
  return r;
}

ObservationReport run_observation(const SimConfig& config, int threads) {
  return run_observation(config, config.observe, threads);
}

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) fail(ErrorKind::IoFailure, "cannot write " + p.string());
  return os;
}

void finish(std::ofstream& os, const fs::path& p) {
  os.flush();
  if (!os) fail(ErrorKind::IoFailure, "write failed for " + p.string());
}

std::string hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string timestamp_line() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void emit_outputs(const std::vector<BoundReport>& reports, const std::vector<ObservationReport>& observations,
                  const SimConfig& config, const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::IoFailure, "cannot create " + out_dir + ": " + ec.message());

  std::ostringstream m;
  m << "format = mlsl-manifest-1\n";
  m << "version = " << kVersion << "\n";
  m << "seed = " << config.seed << "\n";
  m << "config_hash = " << hex(config_hash(config)) << "\n";
  m << "entries = " << reports.size() + observations.size() << "\n";
  m << "note = quantum grids and phase-space transforms run in d = 2; the single-limit estimate is stated for d >= 3\n";
  m << "\n[config]\n" << config_echo(config);

  for (const auto& r : reports) {
    r.validate();
    const fs::path dir = fs::path(out_dir) / r.label;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    const fs::path csv = dir / "series.csv";
    std::ofstream os = open_out(csv);
    os << "t,measured_dist2,bound,margin\n";
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      os << fmt(r.times[i]) << "," << fmt(r.measured_dist2[i]) << "," << fmt(r.bound[i]) << "," << fmt(r.margin[i]) << "\n";
    }
    finish(os, csv);
    if (r.final_husimi) {
      const fs::path bin = dir / "husimi.mlpg";
      std::ofstream bs = open_out(bin);
      write_phase_grid(bs, *r.final_husimi);
      finish(bs, bin);
    }
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.times.size(); ++i) worst = std::min(worst, r.margin[i] / r.bound[i]);
    m << "\n[report " << r.label << "]\n";
    m << "hbar = " << fmt(r.hbar) << "\n";
    if (r.eps) m << "eps = " << fmt(*r.eps) << "\nrate_C = " << fmt(r.constants.rate_C) << "\n";
    m << "alpha = " << fmt(r.constants.alpha) << "\nbeta = " << fmt(r.constants.beta) << "\n";
    m << "L = " << fmt(r.constants.L) << "\nK = " << fmt(r.constants.K) << "\nKp = " << fmt(r.constants.Kp) << "\n";
    m << "rho0 = " << fmt(r.constants.rho0) << "\ndist_in2 = " << fmt(r.dist_in2) << "\n";
    m << "points = " << r.times.size() << "\nmin_relative_margin = " << fmt(worst) << "\n";
    m << "series = " << r.label << "/series.csv\n";
  }

  for (std::size_t k = 0; k < observations.size(); ++k) {
    const ObservationReport& o = observations[k];
    const std::string label = observations.size() == 1 ? "observation" : "observation" + std::to_string(k);
    const fs::path dir = fs::path(out_dir) / label;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    const fs::path csv = dir / "observation.csv";
    std::ofstream os = open_out(csv);
    os << "t,observed_mass\n";
    for (std::size_t i = 0; i < o.times.size(); ++i) os << fmt(o.times[i]) << "," << fmt(o.observed_mass[i]) << "\n";
    finish(os, csv);
    m << "\n[report " << label << "]\n";
    m << "gc_satisfied = " << (o.gc_satisfied ? "true" : "false") << "\n";
    m << "gc_lattice_points = " << o.lattice_points << "\ngc_misses = " << o.gc_misses << "\n";
    m << "gc_caveat = GC verified on a finite lattice of K only\n";
    m << "c_geo = " << fmt(o.c_geo) << "\nrho0 = " << fmt(o.rho0) << "\nlambda_star = " << fmt(o.lambda_star) << "\n";
    m << "cstar = " << fmt(o.cstar) << "\ndelta = " << fmt(o.delta) << "\nc_obs = " << fmt(o.c_obs) << "\n";
    m << "observed_integral = " << fmt(o.observed_integral) << "\n";
    m << "inequality_holds = " << (o.inequality_holds ? "true" : "false") << "\n";
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const fs::path man = fs::path(out_dir) / "manifest";
  std::ofstream os = open_out(man);
  os << "timestamp = " << timestamp_line() << " wall_time_s=" << fmt(wall, "%.3f") << "\n";
  os << m.str();
  finish(os, man);
}

}  // namespace mlsl
