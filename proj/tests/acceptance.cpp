// Acceptance driver: `acceptance N DATA_DIR` runs criterion N and prints one
// line "criterion N: PASS|FAIL <detail>".  Criteria 6-8 store their sandwich
// series under DATA_DIR for criterion 9.

#include "mlsl/classical_flow.hpp"
#include "mlsl/config.hpp"
#include "mlsl/errors.hpp"
#include "mlsl/experiments.hpp"
#include "mlsl/operator_algebra.hpp"
#include "mlsl/quantum.hpp"
#include "mlsl/semiclassics.hpp"
#include "mlsl/transforms.hpp"
#include "mlsl/transport.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace mlsl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

PhaseVec pv(double x1, double x2, double p1, double p2) {
  Vec x(2), p(2);
  x << x1, x2;
  p << p1, p2;
  return PhaseVec(x, p);
}

PhaseVec random_phase(std::mt19937_64& rng, double r) {
  std::uniform_real_distribution<double> u(-r, r);
  const double a = u(rng), b = u(rng), c = u(rng);
  return pv(a, b, c, u(rng));
}

fs::path g_data;

void save_series(const std::string& file, const std::vector<BoundReport>& reps) {
  fs::create_directories(g_data);
  std::ofstream os(g_data / file);
  os.precision(17);
  for (const auto& r : reps) {
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      os << r.label << ',' << r.times[i] << ',' << r.lower[i] << ',' << r.upper[i] << ',' << r.loose_upper[i] << '\n';
    }
  }
}

Outcome c1() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int d : {2, 3}) {
    for (int i = 0; i < 20; ++i) worst = std::max(worst, anticommutator_cancellation_residual(OperatorTuple::random(d, 8, rng)));
  }
  return {worst <= 1e-12, "max normalized residual " + num(worst)};
}

Outcome c2() {
  const double hbar = 0.1;
  const Grid g{2, 256, 4.0, hbar};
  std::mt19937_64 rng(102);
  std::uniform_int_distribution<int> count(1, 3);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    std::vector<PhaseVec> a, b;
    for (int k = count(rng); k > 0; --k) a.push_back(random_phase(rng, 0.6));
    for (int k = count(rng); k > 0; --k) b.push_back(random_phase(rng, 0.6));
    const PairingResult p = trace_pairing(AtomicMeasure::uniform(a), toeplitz_mixture(AtomicMeasure::uniform(b), g));
    worst = std::max(worst, std::abs(p.lhs - p.rhs) / std::abs(p.rhs));
  }
  return {worst <= 1e-6, "max relative error " + num(worst)};
}

Outcome c3() {
  double worst = 0.0;
  std::string detail;
  for (double hbar : {0.2, 0.1, 0.05}) {
    const Grid g{2, 256, 4.0, hbar};
    const DensityMixture r =
        toeplitz_mixture(AtomicMeasure::uniform({pv(0.5, 0, 0, 0.4), pv(-0.5, 0.3, 0.2, 0), pv(0, -0.6, -0.3, 0.1)}), g);
    PhaseGridOptions po;
    po.spacing = 0.5 * std::sqrt(hbar / 2);
    const PhaseGridSpec spec = covering_phase_grid(r, po);
    const double gap = l1_distance(husimi_overlap(r, spec), husimi_smooth(wigner(r, spec), hbar));
    worst = std::max(worst, gap);
    detail += "hbar=" + num(hbar) + ":" + num(gap) + " ";
  }
  return {worst <= 1e-3, "L1 gap " + detail};
}

Outcome c4() {
  const std::vector<FieldSpec> fields = {FieldSpec::zero(), FieldSpec::epsilon_rotation(1.0),
                                         FieldSpec::epsilon_rotation(0.5), FieldSpec::builtin("sinswap")};
  const std::vector<PotentialSpec> pots = {PotentialSpec::zero(), PotentialSpec::builtin("cosine", 2)};
  const PhaseVec z0 = pv(0.7, -0.3, 0.2, 0.5);
  double drift = 0.0;
  for (const auto& f : fields) {
    for (const auto& p : pots) {
      FlowParams fp;
      fp.field = f;
      fp.potential = p;
      const double e0 = classical_energy(z0, f, p);
      for (const PhaseVec& z : sample_trajectory(z0, 5.0, fp).states) {
        drift = std::max(drift, std::abs(classical_energy(z, f, p) - e0) / std::max(1.0, std::abs(e0)));
      }
    }
  }
  double oracle_err = 0.0;
  for (double eps : {1.0, 0.5, 0.2}) {
    FlowParams fp;
    fp.field = FieldSpec::epsilon_rotation(eps);
    fp.method = FlowMethod::SplitStiff;
    oracle_err = std::max(oracle_err, oracle::linear_flow_error(pv(1, 0.2, -0.3, 0.5), 1.0, fp));
  }
  return {drift <= 1e-8 && oracle_err <= 1e-6, "energy drift " + num(drift) + ", oracle error " + num(oracle_err)};
}

Outcome c5() {
  const Grid g{2, 128, 4.0, 0.1};
  const PotentialSpec cosine = PotentialSpec::builtin("cosine", 2);
  double norm_drift = 0.0, moment_excess = -1e300;
  for (const FieldSpec& f : {FieldSpec::zero(), FieldSpec::epsilon_rotation(0.5), FieldSpec::builtin("sinswap")}) {
    DensityMixture r = toeplitz_mixture(AtomicMeasure::uniform({pv(0.5, 0, 0, 0.3), pv(-0.3, 0.2, 0.1, 0)}), g);
    const double cap = quantum_energy(r, f, cosine) + cosine.Vinf + 1e-6;
    for (int k = 0; k < 10; ++k) {
      r = propagate_mixture(r, 0.1, f, cosine, 1e-3);
      for (const auto& s : r.states) norm_drift = std::max(norm_drift, std::abs(s.norm() - 1.0));
      moment_excess = std::max(moment_excess, quantum_kinetic_magnetic(r, f) - cap);
    }
  }
  return {norm_drift <= 1e-10 && moment_excess <= 0.0,
          "norm drift " + num(norm_drift) + ", max kinetic - cap " + num(moment_excess)};
}

Outcome c6() {
  const SimConfig c = parse_config(
      "[model]\nd = 2\nhbar = 0.1\n[field]\nkind = zero\n[potential]\nname = zero\n"
      "[grid]\nn = 256\nhalfwidth = 4\n"
      "[time]\nt_final = 6.283185307179586\ncheckpoint = 0.39269908169872414\ndt_quantum = 1e-2\n"
      "[initial]\nmatched = true\nf = 1,0,0,0.5,1\n");
  const std::vector<BoundReport> reps = run_single_limit_sweep(c, {0.1});
  save_series("criterion6.csv", reps);
  const double target = 2 * 2 * 0.1;
  double worst = 0.0;
  for (double m : reps[0].measured_dist2) worst = std::max(worst, std::abs(m - target) / target);
  return {worst <= 0.05, "max relative deviation from 2 d hbar " + num(worst)};
}

Outcome c7() {
  const SimConfig c = load_config(std::string(MLSL_CONFIG_DIR) + "/single_limit.ini");
  const std::vector<BoundReport> reps = run_single_limit_sweep(c, {0.2, 0.1, 0.05});
  save_series("criterion7.csv", reps);
  double worst = 1e300;
  for (const auto& r : reps) {
    for (std::size_t i = 0; i < r.times.size(); ++i) worst = std::min(worst, r.margin[i] / r.bound[i]);
  }
  return {worst >= -0.03, "min margin/bound " + num(worst)};
}

Outcome c8() {
  const SimConfig base = load_config(std::string(MLSL_CONFIG_DIR) + "/double_limit.ini");
  std::vector<BoundReport> all;
  double worst_margin = 1e300, worst_uniform = 1e300;
  for (const PotentialSpec& pot : {PotentialSpec::zero(), PotentialSpec::builtin("cosine", 2)}) {
    std::vector<BoundReport> eps1;
    for (double eps : {1.0, 0.5, 0.2}) {
      SimConfig c = base;
      c.potential = pot;
      if (eps >= 0.5) {
        c.grid_n = 256;
        c.box_halfwidth = 4.0;
      }
      std::vector<BoundReport> reps = run_double_limit_sweep(c, {eps}, {0.1, 0.05});
      for (auto& r : reps) r.label += "_" + pot.describe();
      if (eps == 1.0) eps1 = reps;
      for (std::size_t h = 0; h < reps.size(); ++h) {
        const BoundReport& r = reps[h];
        for (std::size_t i = 0; i < r.times.size(); ++i) {
          worst_margin = std::min(worst_margin, r.margin[i] / r.bound[i]);
          worst_uniform = std::min(worst_uniform, eps1[h].bound[i] - r.measured_dist2[i]);
        }
        std::printf("  %s: measured [", r.label.c_str());
        for (double m : r.measured_dist2) std::printf(" %.4g", m);
        std::printf(" ] bound(end) %.4g\n", r.bound.back());
      }
      all.insert(all.end(), reps.begin(), reps.end());
    }
  }
  save_series("criterion8.csv", all);
  return {worst_margin >= -0.03 && worst_uniform >= 0.0,
          "min margin/bound " + num(worst_margin) + ", min (eps=1 bound - measured) " + num(worst_uniform)};
}

Outcome c9() {
  std::size_t rows = 0, lower_bad = 0, upper_bad = 0;
  double worst_gap = -1e300;
  for (const char* file : {"criterion6.csv", "criterion7.csv", "criterion8.csv"}) {
    std::ifstream is(g_data / file);
    if (!is) return {false, std::string("missing ") + file + "; run criteria 6-8 first"};
    for (std::string line; std::getline(is, line);) {
      std::stringstream ss(line);
      std::string label, field;
      std::getline(ss, label, ',');
      double v[4];
      for (double& x : v) {
        std::getline(ss, field, ',');
        x = std::stod(field);
      }
      ++rows;
      const double lower = v[1], upper = v[2], loose = v[3];
      if (lower > upper) ++lower_bad;
      if (upper > loose) ++upper_bad;
      worst_gap = std::max(worst_gap, (lower - upper) / std::max(std::abs(upper), 1e-300));
    }
  }
  return {rows > 0 && lower_bad == 0 && upper_bad == 0,
          std::to_string(rows) + " rows, lower > upper at " + std::to_string(lower_bad) + ", upper > loose bound at " +
              std::to_string(upper_bad) + ", max (lower - upper)/upper " + num(worst_gap)};
}

Outcome c10() {
  std::mt19937_64 rng(110);
  std::uniform_int_distribution<int> size(2, 64);
  double worst = 0.0;
  for (int i = 0; i < 25; ++i) {
    std::vector<PhaseVec> a, b;
    for (int k = size(rng); k > 0; --k) a.push_back(random_phase(rng, 1.0));
    for (int k = size(rng); k > 0; --k) b.push_back(random_phase(rng, 1.0));
    const AtomicMeasure A = AtomicMeasure::uniform(a), B = AtomicMeasure::uniform(b);
    const double exact = w2_exact(A, B).cost;
    const SinkhornReport s = w2_sinkhorn(A, B);
    worst = std::max(worst, std::abs(s.distance * s.distance - exact) / exact);
  }
  double brute = 0.0;
  for (int i = 0; i < 200; ++i) {
    std::vector<PhaseVec> a, b;
    for (int k = 0; k < 3; ++k) a.push_back(random_phase(rng, 1.0));
    for (int k = 0; k < 3; ++k) b.push_back(random_phase(rng, 1.0));
    brute = std::max(brute, std::abs(w2_exact(AtomicMeasure::uniform(a), AtomicMeasure::uniform(b)).cost -
                                     oracle::brute_force_assignment(a, b)));
  }
  double shift = 0.0;
  for (int i = 0; i < 10; ++i) {
    std::vector<PhaseVec> a, b;
    const PhaseVec v = random_phase(rng, 2.0);
    for (int k = 0; k < 5; ++k) {
      a.push_back(random_phase(rng, 1.0));
      b.push_back(PhaseVec(a.back().x + v.x, a.back().xi + v.xi));
    }
    shift = std::max(shift, std::abs(w2_exact(AtomicMeasure::uniform(a), AtomicMeasure::uniform(b)).distance - v.flat().norm()));
  }
  return {worst <= 0.01 && brute <= 1e-10 && shift <= 1e-10,
          "sinkhorn gap " + num(worst) + ", brute force " + num(brute) + ", translation " + num(shift)};
}

Outcome c11() {
  const SimConfig c = load_config(std::string(MLSL_CONFIG_DIR) + "/observation.ini");
  const ObservationReport r = run_observation(c);
  return {r.gc_satisfied && r.c_obs > 0.0 && r.inequality_holds,
          "gc " + std::string(r.gc_satisfied ? "yes" : "no") + ", c_geo " + num(r.c_geo) + ", C* " + num(r.cstar) +
              ", delta " + num(r.delta) + ", c_obs " + num(r.c_obs) + ", observed " + num(r.observed_integral)};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome c12() {
  const fs::path root = g_data / "determinism";
  fs::remove_all(root);
  const std::string cfg = std::string(MLSL_CONFIG_DIR) + "/determinism.ini";
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string("\"") + MLSL_CLI_PATH + "\" sweep --config \"" + cfg + "\" --seed 3 --hbar 0.2 --out \"" +
                            (root / run).string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "mlsl sweep exited nonzero"};
  }
  auto body = [](const std::string& s) { return s.substr(s.find('\n') + 1); };
  std::size_t compared = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), root / "a");
    const std::string x = slurp(e.path()), y = slurp(root / "b" / rel);
    const bool same = rel == "manifest" ? body(x) == body(y) : x == y;
    ++compared;
    if (!same) ++differing;
  }
  const bool has_series = fs::exists(root / "a" / "single_hbar0.2" / "series.csv");
  return {has_series && differing == 0,
          std::to_string(compared) + " files compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance N [DATA_DIR]\n");
    return 2;
  }
  const int n = std::atoi(argv[1]);
  g_data = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "mlsl_acceptance";
  const std::vector<std::function<Outcome()>> criteria = {c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12};
  if (n < 1 || n > static_cast<int>(criteria.size())) {
    std::fprintf(stderr, "criterion must be 1..%zu\n", criteria.size());
    return 2;
  }
  Outcome o;
  try {
    o = criteria[static_cast<std::size_t>(n - 1)]();
  } catch (const mlsl::Error& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  std::printf("criterion %d: %s %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  return o.pass ? 0 : 1;
}
