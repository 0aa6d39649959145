#include "obsent/classical.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace obsent {

ClassicalSpace::ClassicalSpace(std::vector<Label> points, std::vector<double> weights,
                               std::vector<double> density)
    : points_(std::move(points)), weights_(std::move(weights)), density_(std::move(density)) {
  size_t n = points_.size();
  if (n == 0) throw NotADensity("classical space has no points");
  if (weights_.empty()) weights_.assign(n, 1.0);
  if (weights_.size() != n || density_.size() != n)
    throw DimensionMismatch("points, weights, and density lengths differ");

  double norm = 0.0;
  total_measure_ = 0.0;
  for (size_t g = 0; g < n; ++g) {
    if (weights_[g] <= 0.0) throw NotADensity("measure weights must be positive");
    if (density_[g] < 0.0) throw NotADensity("density values must be nonnegative");
    norm += density_[g] * weights_[g];
    total_measure_ += weights_[g];
  }
  if (std::abs(norm - 1.0) > tol::classical_norm) {
    std::ostringstream os;
    os << "density integrates to " << norm << ", not 1";
    throw NotADensity(os.str());
  }
}

ClassicalSpace ClassicalSpace::uniform_weights(std::vector<double> density) {
  size_t n = density.size();
  std::vector<Label> pts;
  pts.reserve(n);
  for (size_t g = 0; g < n; ++g) pts.emplace_back(static_cast<std::int64_t>(g));
  return ClassicalSpace(std::move(pts), std::vector<double>(n, 1.0), std::move(density));
}

namespace {

// Cell index per point, checking disjointness and completeness.
std::vector<int> cell_assignment(const ClassicalSpace& space,
                                 const ClassicalCoarseGraining& cg) {
  std::vector<int> owner(space.size(), -1);
  for (size_t c = 0; c < cg.cells.size(); ++c)
    for (int g : cg.cells[c]) {
      if (g < 0 || static_cast<size_t>(g) >= space.size()) {
        std::ostringstream os;
        os << "cell " << c << " references unknown point " << g;
        throw PartitionMismatch(os.str());
      }
      if (owner[g] != -1) {
        std::ostringstream os;
        os << "point " << g << " belongs to cells " << owner[g] << " and " << c;
        throw PartitionMismatch(os.str());
      }
      owner[g] = static_cast<int>(c);
    }
  for (size_t g = 0; g < space.size(); ++g)
    if (owner[g] == -1) {
      std::ostringstream os;
      os << "point " << g << " is not covered by any cell";
      throw PartitionMismatch(os.str());
    }
  return owner;
}

}  // namespace

double classical_observational_entropy(const ClassicalSpace& space,
                                       const std::vector<ClassicalCoarseGraining>& cgs) {
  if (cgs.empty()) throw PartitionMismatch("at least one coarse-graining required");
  std::vector<std::vector<int>> owners;
  owners.reserve(cgs.size());
  for (const auto& cg : cgs) owners.push_back(cell_assignment(space, cg));

  // Classical joint coarse-graining: intersect all partitions.
  std::map<std::vector<int>, std::pair<double, double>> cells;  // key -> (p, V)
  std::vector<int> key(cgs.size());
  for (size_t g = 0; g < space.size(); ++g) {
    for (size_t k = 0; k < cgs.size(); ++k) key[k] = owners[k][g];
    auto& [p, v] = cells[key];
    p += space.density()[g] * space.weights()[g];
    v += space.weights()[g];
  }

  double s = 0.0;
  for (const auto& [k, pv] : cells) {
    auto [p, v] = pv;
    if (p > 0.0) s -= p * std::log(p / v);
  }
  return s;
}

double gibbs_entropy(const ClassicalSpace& space) {
  double s = 0.0;
  for (size_t g = 0; g < space.size(); ++g) {
    double rho = space.density()[g];
    if (rho > 0.0) s -= rho * std::log(rho) * space.weights()[g];
  }
  return s;
}

ClassicalSpace build_phase_space(const PhaseSpaceGrid& grid,
                                 const std::function<double(const std::vector<double>&)>& density_sampler) {
  if (grid.particle_count <= 0) throw ConfigError("particle count must be positive");
  if (grid.planck_constant <= 0.0) throw ConfigError("Planck constant must be positive");
  if (grid.axes.empty()) throw ConfigError("phase-space grid needs at least one axis");

  double cell_width_product = 1.0;
  size_t total_cells = 1;
  for (const auto& ax : grid.axes) {
    if (ax.bins < 1) throw ConfigError("axis bin count must be at least 1");
    if (!(ax.hi > ax.lo)) throw ConfigError("axis range must have positive extent");
    cell_width_product *= (ax.hi - ax.lo) / double(ax.bins);
    total_cells *= static_cast<size_t>(ax.bins);
  }
  double weight = cell_width_product / std::pow(grid.planck_constant, 3.0 * grid.particle_count);

  std::vector<Label> points;
  std::vector<double> weights(total_cells, weight);
  std::vector<double> density(total_cells, 0.0);
  points.reserve(total_cells);

  std::vector<int> idx(grid.axes.size(), 0);
  std::vector<double> center(grid.axes.size());
  double raw_mass = 0.0;
  for (size_t cell = 0; cell < total_cells; ++cell) {
    Label::Tuple tag;
    for (size_t a = 0; a < grid.axes.size(); ++a) {
      const auto& ax = grid.axes[a];
      center[a] = ax.lo + (idx[a] + 0.5) * (ax.hi - ax.lo) / double(ax.bins);
      tag.emplace_back(static_cast<std::int64_t>(idx[a]));
    }
    double value = density_sampler(center);
    if (value < 0.0) throw NotADensity("density sampler returned a negative value");
    density[cell] = value;
    raw_mass += value * weight;
    points.emplace_back(std::move(tag));

    int a = static_cast<int>(grid.axes.size()) - 1;
    while (a >= 0 && ++idx[a] == grid.axes[a].bins) idx[a--] = 0;
  }
  if (raw_mass <= 0.0) throw ZeroDensity("sampled density vanishes on the whole grid");
  for (double& d : density) d /= raw_mass;
  return ClassicalSpace(std::move(points), std::move(weights), std::move(density));
}

}  // namespace obsent
