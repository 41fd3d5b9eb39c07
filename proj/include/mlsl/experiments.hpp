#pragma once

#include "mlsl/config.hpp"
#include "mlsl/semiclassics.hpp"
#include "mlsl/transforms.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mlsl {

inline constexpr const char* kVersion = "1.0.0";

struct BoundReport {
  std::string label;
  double hbar = 0.0;
  std::optional<double> eps;  // double-limit runs only
  std::vector<double> times;
  std::vector<double> measured_dist2;
  std::vector<double> bound;
  std::vector<double> margin;  // bound - measured
  // Sandwich of the pseudo-distance at each time: lower from the measured
  // distance, upper = Gronwall growth times the coherent-coupling value at
  // t = 0, loose_upper = the same growth times the looser initial estimate.
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> loose_upper;
  TheoremConstants constants;  // lambda = 1
  double dist_in2 = 0.0;
  std::uint64_t config_hash = 0;
  std::shared_ptr<const PhaseGridDensity> final_husimi;  // set when requested

  void validate() const;
};

struct ObservationReport {
  bool gc_satisfied = false;
  std::size_t lattice_points = 0;
  std::size_t gc_misses = 0;
  double c_geo = 0.0;
  double rho0 = 0.0;
  double lambda_star = 1.0;
  double cstar = 0.0;
  double delta = 0.0;
  double c_obs = 0.0;
  double observed_integral = 0.0;
  bool inequality_holds = false;
  std::vector<double> times;
  std::vector<double> observed_mass;  // trace(1_{Omega_delta} R(t)) at each node
  std::uint64_t config_hash = 0;
};

struct SweepOptions {
  int threads = 1;
  bool keep_final_husimi = false;
};

/// sqrt of the largest classical energy over the atoms (0 if all are negative).
double support_radius(const AtomicMeasure& f, const FieldSpec& field, const PotentialSpec& potential);

/// Throws SupportViolation unless every atom has energy <= rho0^2.
void check_support(const AtomicMeasure& f, const FieldSpec& field, const PotentialSpec& potential, double rho0);

/// Reporting times 0, checkpoint, 2 checkpoint, ..., t_final.
std::vector<double> report_times(double t_final, double checkpoint);

/// One report per hbar for the configured field and potential.  The bound is
/// beta(K) e^{alpha t} (dist_in^2 + d hbar/2) + d hbar/2.
std::vector<BoundReport> run_single_limit_sweep(const SimConfig& config, const std::vector<double>& hbar_list,
                                                const SweepOptions& opts = {});

/// One report per (eps, hbar) with A = x_perp / eps.  The bound is
/// e^{C t} (dist_in^2 + (1+eps^2) hbar/2) + (1+eps^2) hbar/2.
std::vector<BoundReport> run_double_limit_sweep(const SimConfig& config, const std::vector<double>& eps_list,
                                                const std::vector<double>& hbar_list, const SweepOptions& opts = {});

/// Lattice GC check on the box K, geometric constant, C*, auto delta
/// (2 C* / c_geo when unset) and the observed integral by the trapezoid rule.
/// A failed GC check is reported in the result, not thrown.
ObservationReport run_observation(const SimConfig& config, const ObserveSettings& settings, int threads = 1);
ObservationReport run_observation(const SimConfig& config, int threads = 1);

/// Writes <out_dir>/manifest and <out_dir>/<label>/series.csv per report
/// (plus husimi.mlpg when a final Husimi grid is attached) and
/// <out_dir>/observation/observation.csv for an observation report.
/// The manifest line starting with "timestamp" is the only
/// non-deterministic content.
void emit_outputs(const std::vector<BoundReport>& reports, const std::vector<ObservationReport>& observations,
                  const SimConfig& config, const std::string& out_dir);

struct NamedCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Reduced-size runs of the invariant suites of every module.
std::vector<NamedCheck> self_check(int threads = 1);

}  // namespace mlsl
