#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "obsent/entropy.hpp"

namespace obsent {

// 1D chain of hard-core bosons: nearest hopping J, next-nearest hopping J',
// nearest-neighbor density-density interaction U, optional on-site
// potentials; open boundaries.
struct LatticeConfig {
  int sites = 0;
  std::optional<int> particle_sector;   // restrict to fixed total N
  double hop_nn = 1.0;                  // J
  double hop_nnn = 0.0;                 // J'
  double interaction_nn = 0.0;          // U
  std::vector<double> onsite_potential; // empty or one entry per site
  int cells = 1;                        // contiguous near-equal split
  std::vector<int> cell_sizes;          // explicit split (overrides `cells`)
  int site_cap = 16;
  Index dim_cap = 4096;
};

struct EnsembleSpec;

// Occupation-basis lattice model with its partition into contiguous cells.
// Local Hamiltonians hold only terms fully inside one cell; inter-cell terms
// form the boundary remainder, so H = sum_i H_i + boundary exactly.
// Eigendecompositions are computed once and shared; copies are shallow.
class LatticeModel {
 public:
  const LatticeConfig& config() const;
  Index dim() const;
  int sites() const;
  int cell_count() const;
  std::pair<int, int> cell_range(int c) const;  // [first site, last site)
  int cell_volume(int c) const;                 // site count
  const std::vector<std::uint32_t>& basis_states() const;
  Index state_index(std::uint32_t bits) const;

  const RealMatrix& hamiltonian() const;
  const RealVector& number_diagonal() const;
  const RealMatrix& local_hamiltonian(int c) const;
  const RealVector& local_number_diagonal(int c) const;
  const RealMatrix& boundary_remainder() const;

  Observable hamiltonian_observable() const;
  Observable number_observable() const;
  Observable local_hamiltonian_observable(int c) const;
  Observable local_number_observable(int c) const;

  const RealVector& eigenvalues() const;
  const RealMatrix& eigenvectors() const;
  double spectral_range() const;
  // Spectral range / 50; shell width used when a scenario leaves it unset.
  double default_shell_width() const;

  // Basis vector for an occupation pattern like "110100" (character j is
  // site j). Must match the particle sector when one is set.
  Vector occupation_state(const std::string& pattern) const;

  CoarseGraining global_number_cg() const;
  CoarseGraining local_number_cg() const;
  CoarseGraining global_energy_cg(double shell_width) const;
  CoarseGraining local_energy_cg(double shell_width) const;
  // subsystem_cg acts on cell 0's full local space; the remaining cells are
  // coarse-grained in local energy shells.
  CoarseGraining subsystem_bath_cg(const CoarseGraining& subsystem_cg,
                                   double shell_width) const;

  struct Impl;

 private:
  friend LatticeModel build_model(const LatticeConfig&);
  friend QuantumState evolve(const LatticeModel&, const QuantumState&, double);
  friend Vector evolve(const LatticeModel&, const Vector&, double);
  friend QuantumState ensemble_state(const LatticeModel&, const EnsembleSpec&);
  std::shared_ptr<Impl> impl_;
};

LatticeModel build_model(const LatticeConfig& config);

// rho(t) = exp(-iHt) rho exp(+iHt) in the cached eigenbasis.
QuantumState evolve(const LatticeModel& model, const QuantumState& state, double t);
Vector evolve(const LatticeModel& model, const Vector& psi, double t);

struct EnsembleSpec {
  enum class Kind { Microcanonical, VolumeMicrocanonical, Canonical, GrandCanonical };
  Kind kind = Kind::Canonical;
  double energy = 0.0;       // microcanonical / volume-microcanonical
  double shell_width = 0.0;  // microcanonical
  double beta = 0.0;         // canonical / grandcanonical
  double mu = 0.0;           // grandcanonical

  static EnsembleSpec microcanonical(double energy, double shell_width);
  static EnsembleSpec volume_microcanonical(double energy);
  static EnsembleSpec canonical(double beta);
  static EnsembleSpec grandcanonical(double beta, double mu);
};

QuantumState ensemble_state(const LatticeModel& model, const EnsembleSpec& spec);

// The nine physical coarse-graining entropies; ids follow the scenario file
// convention "1a".."3b", "4".
enum class ThermoEntropy {
  GlobalNumber,             // 1a
  GlobalEnergy,             // 1b
  GlobalNumberEnergy,       // 1c: equilibrium thermodynamic entropy
  LocalNumber,              // 2a
  LocalEnergy,              // 2b
  LocalNumberEnergy,        // 2c: non-equilibrium thermodynamic entropy
  LocalNumberGlobalEnergy,  // 3a
  GlobalEnergyLocalNumber,  // 3b
  SubsystemBathEnergy,      // 4
};

std::string thermo_entropy_id(ThermoEntropy e);
ThermoEntropy thermo_entropy_from_id(const std::string& id);

// Coarse-graining sequence realizing one of the nine entropies.
// shell_width < 0 selects the model default; subsystem_cg is required for
// SubsystemBathEnergy.
MeasurementSequence thermo_sequence(const LatticeModel& model, ThermoEntropy which,
                                    double shell_width = -1.0,
                                    const CoarseGraining* subsystem_cg = nullptr);

double thermo_entropy(const LatticeModel& model, const QuantumState& state,
                      ThermoEntropy which, double shell_width = -1.0,
                      const CoarseGraining* subsystem_cg = nullptr);

struct ConservedEntropyResult {
  double equilibrium = 0.0;
  std::optional<double> nonequilibrium;
  std::vector<std::string> warnings;  // observables that fail to commute with H
};

// Equilibrium entropy over the sequence of global-observable coarse-grainings
// and, when per-cell variants are supplied, the non-equilibrium entropy over
// the corresponding per-cell product coarse-grainings. shell_widths[k]
// applies to observable k (0 = exact-degeneracy grouping).
ConservedEntropyResult general_conserved_entropy(
    const LatticeModel& model, const QuantumState& state,
    const std::vector<Observable>& observables, const std::vector<double>& shell_widths,
    const std::vector<std::vector<Observable>>& local_variants = {});

struct QuenchScenario {
  LatticeConfig model;
  std::string initial_occupation;
  std::vector<double> times;  // sorted ascending, times[0] >= 0
  double shell_width = -1.0;  // < 0: model default
  std::vector<ThermoEntropy> selection;  // empty: all of 1a..3b
  std::optional<CoarseGraining> subsystem_cg;  // for entropy 4
  std::uint64_t seed = 0;
};

struct QuenchRow {
  double t;
  ThermoEntropy id;
  double value;
};

struct QuenchResult {
  std::vector<QuenchRow> rows;  // ordered by (t, id)
  double ln_dim = 0.0;
  double s_vn_initial = 0.0;
  double boundary_remainder_norm = 0.0;  // Frobenius
  double shell_width = 0.0;              // resolved value
};

QuenchResult run_quench(const QuenchScenario& scenario);

}  // namespace obsent
