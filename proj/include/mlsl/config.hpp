#pragma once

#include "mlsl/model.hpp"
#include "mlsl/transport.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mlsl {

struct ObserveSettings {
  PhaseVec k_center;          // centre of the compact phase-space box K
  double k_halfwidth = 0.02;  // half side of K in every phase coordinate
  int lattice = 9;            // lattice points per phase axis of K
  Region omega = Region::empty();
  double horizon = 6.283185307179586;
  std::optional<double> delta;  // absent -> chosen automatically
  double dt = 1e-3;             // hitting-time / occupation sampling step
  int checkpoints = 128;        // quantum time-quadrature nodes on [0, T]
  bool use_initial_atoms = false;  // f^in from [initial] f instead of a Dirac at k_center
};

struct SimConfig {
  int d = 2;
  double hbar = 0.1;
  double lambda = 1.0;
  FieldSpec field;
  PotentialSpec potential;
  double box_halfwidth = 4.0;
  int grid_n = 128;
  double t_final = 1.0;
  double dt_classical = 1e-3;
  double dt_quantum = 1e-3;
  double checkpoint = 0.1;  // spacing of the reporting time grid
  std::uint64_t seed = 1;
  bool matched = true;      // atoms_mu copies atoms_f
  AtomicMeasure atoms_f;
  AtomicMeasure atoms_mu;
  SinkhornOptions transport;
  ObserveSettings observe;

  void validate() const;
};

/// Parses the INI-style document described in the README (sections
/// [model] [field] [potential] [grid] [time] [initial] [transport]
/// [observe]); every key is optional and falls back to the defaults above.
/// A seed override replaces [model] seed before random atoms are drawn.
SimConfig parse_config(std::string_view text, std::optional<std::uint64_t> seed = std::nullopt);
SimConfig load_config(const std::string& path, std::optional<std::uint64_t> seed = std::nullopt);

/// Canonical text rendering, stable across runs; used for the manifest echo
/// and the config hash.
std::string config_echo(const SimConfig& config);
std::uint64_t config_hash(const SimConfig& config);

/// Atoms in the "x1,x2,xi1,xi2,w; ..." list syntax.
AtomicMeasure parse_atoms(std::string_view text, int d);
std::string format_atoms(const AtomicMeasure& m);

}  // namespace mlsl
