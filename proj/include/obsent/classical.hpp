#pragma once

#include <functional>
#include <vector>

#include "obsent/types.hpp"

namespace obsent {

// Finite (or measure-weighted) sample space Gamma with a normalized density:
// sum_g density[g] * weight[g] = 1.
class ClassicalSpace {
 public:
  ClassicalSpace(std::vector<Label> points, std::vector<double> weights,
                 std::vector<double> density);
  // Unit-weight space over n anonymous points.
  static ClassicalSpace uniform_weights(std::vector<double> density);

  size_t size() const { return points_.size(); }
  const std::vector<Label>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& density() const { return density_; }
  double total_measure() const { return total_measure_; }

 private:
  std::vector<Label> points_;
  std::vector<double> weights_;
  std::vector<double> density_;
  double total_measure_;
};

// Partition of the point indices into disjoint labeled cells covering Gamma.
struct ClassicalCoarseGraining {
  std::vector<std::vector<int>> cells;
  std::vector<Label> labels;  // optional; defaults to cell indices
};

// Multi-coarse-graining observational entropy via the intersection partition
// (classical coarse-grainings always commute, so order never matters).
double classical_observational_entropy(const ClassicalSpace& space,
                                       const std::vector<ClassicalCoarseGraining>& cgs);

// -sum_g density[g] ln(density[g]) weight[g], with 0 ln 0 = 0.
double gibbs_entropy(const ClassicalSpace& space);

struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  int bins = 1;
};

// Rectangular phase-space grid; each cell's measure is (product of cell
// widths) / h^(3N), so a cell of measure h^(3N) has weight 1.
struct PhaseSpaceGrid {
  int particle_count = 1;
  std::vector<GridAxis> axes;
  double planck_constant = 1.0;
};

// One point per grid cell, sampled at the cell center; the sampled density
// is renormalized against the cell weights.
ClassicalSpace build_phase_space(const PhaseSpaceGrid& grid,
                                 const std::function<double(const std::vector<double>&)>& density_sampler);

}  // namespace obsent
