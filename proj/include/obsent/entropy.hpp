#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "obsent/hilbert.hpp"

namespace obsent {

struct MacrostateRecord {
  Label multi_index;   // tuple of per-step outcome labels
  double probability;  // p_i
  double volume;       // V_i
};

// Outcome distribution of an ordered measurement sequence. Records are in
// lexicographic order of the element indices; empty multi-macrostates
// (volume below the branch floor) are dropped.
class MacrostateDistribution {
 public:
  MacrostateDistribution(Index dim, bool projective, std::vector<MacrostateRecord> records);

  Index dim() const { return dim_; }
  bool projective() const { return projective_; }
  const std::vector<MacrostateRecord>& records() const { return records_; }
  size_t size() const { return records_.size(); }

 private:
  Index dim_;
  bool projective_;
  std::vector<MacrostateRecord> records_;
};

// Ordered tuple of coarse-grainings (projective or Kraus; order matters for
// non-commuting steps). Immutable; branch bookkeeping shared between calls.
class MeasurementSequence {
 public:
  using Step = std::variant<CoarseGraining, KrausCoarseGraining>;

  explicit MeasurementSequence(std::vector<Step> steps);
  MeasurementSequence(std::initializer_list<CoarseGraining> cgs);

  Index dim() const;
  int length() const;
  const Step& step(int k) const;
  bool all_projective() const;

  struct Impl;  // internal branch bookkeeping

 private:
  std::shared_ptr<Impl> impl_;
  friend MacrostateDistribution macrostate_distribution(const QuantumState&,
                                                        const MeasurementSequence&);
  friend MacrostateDistribution macrostate_distribution(const Vector&,
                                                        const MeasurementSequence&);
};

// p_i = tr[P_in ... P_i1 rho P_i1 ... P_in], V_i = tr[P_in ... P_i1 ... P_in]
// over all multi-indices (Kraus steps use K ... K^dag in place of the
// sandwiching projectors).
MacrostateDistribution macrostate_distribution(const QuantumState& state,
                                               const MeasurementSequence& seq);
// Pure-state overload: p_i = |P_in ... P_i1 psi|^2 (projective steps only).
MacrostateDistribution macrostate_distribution(const Vector& psi,
                                               const MeasurementSequence& seq);

// -sum_i p_i ln(p_i / V_i), with 0 ln 0 = 0.
double entropy_of(const MacrostateDistribution& dist);
double observational_entropy(const QuantumState& state, const MeasurementSequence& seq);
double observational_entropy(const Vector& psi, const MeasurementSequence& seq);

struct EntropyDecomposition {
  double shannon_part;         // -sum p_i ln p_i
  double mean_boltzmann_part;  // sum p_i ln V_i
};
EntropyDecomposition entropy_decomposition(const QuantumState& state, const CoarseGraining& cg);

// rho_cg = sum_i p_i P_i / V_i.
QuantumState coarse_grained_state(const QuantumState& state, const CoarseGraining& cg);

double von_neumann_entropy(const QuantumState& state);

struct KlIdentity {
  double entropy;   // S
  double kl;        // D_KL(p_i || V_i / dim)
  double residual;  // |S - (ln dim - kl)|
};
KlIdentity kl_identity_check(const QuantumState& state, const MeasurementSequence& seq);

}  // namespace obsent
