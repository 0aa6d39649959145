#pragma once

#include <cstdint>
#include <vector>

#include "obsent/entropy.hpp"

namespace obsent {

// One coarse-graining per subsystem of a tensor-product space.
class ProductMeasurement {
 public:
  ProductMeasurement(TensorSpace space, std::vector<CoarseGraining> local_cgs);

  const TensorSpace& space() const { return space_; }
  const std::vector<CoarseGraining>& locals() const { return locals_; }
  // The induced global coarse-graining {P_l^A (x) P_m^B (x) ...}.
  CoarseGraining combined() const;

 private:
  TensorSpace space_;
  std::vector<CoarseGraining> locals_;
};

// S with the product coarse-graining; volumes factorize as V_l V_m ... V_n.
double product_observational_entropy(const QuantumState& state, const ProductMeasurement& pm);

// Total correlation I = sum p ln(p / (p^A_l p^B_m ...)) of the joint outcome
// distribution against the product of its marginals; I >= 0.
double total_correlation(const QuantumState& state, const ProductMeasurement& pm);

// Residual of S_product = sum_X S_{C_X}(rho_X) - I.
double decomposition_residual(const QuantumState& state, const ProductMeasurement& pm);

struct QceOptions {
  int restarts = 16;
  std::uint64_t seed = 0;
  double tol_obj = 1e-8;
  int max_sweeps = 200;
};

struct QceTraceEntry {
  int restart;
  int sweeps;
  double achieved_entropy;
};

// Best-found gap between product-measurement entropy and the von Neumann
// entropy. `value` is an upper bound on the true infimum gap: it is attained
// by `best_measurement`, never claimed globally optimal.
struct QceResult {
  double value = 0.0;
  ProductMeasurement best_measurement;
  std::vector<QceTraceEntry> optimizer_trace;
  double certificate_gap = 0.0;  // achieved S - S_vN (equals value)
};

// Minimizes observational entropy over rank-1 product coarse-grainings,
// parametrized by one local unitary per subsystem. Multi-start coordinate
// descent: sequential two-level rotation sweeps with a golden-section line
// search per angle. Deterministic for a fixed seed.
QceResult quantum_correlation_entropy(const QuantumState& state, const TensorSpace& space,
                                      const QceOptions& opts = {});

// Checks S_product(state, pm) >= S_vN(state) + qce.value - 1e-9.
bool correlation_bound_holds(const QuantumState& state, const ProductMeasurement& pm,
                             const QceResult& qce);

}  // namespace obsent
