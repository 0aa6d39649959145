#include "obsent/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace obsent {

ProductMeasurement::ProductMeasurement(TensorSpace space, std::vector<CoarseGraining> local_cgs)
    : space_(std::move(space)), locals_(std::move(local_cgs)) {
  if (locals_.size() != static_cast<size_t>(space_.subsystems()))
    throw DimensionMismatch("one coarse-graining per subsystem required");
  for (size_t k = 0; k < locals_.size(); ++k)
    if (locals_[k].dim() != space_.subsystem_dims()[k])
      throw DimensionMismatch("local coarse-graining dimension disagrees with its subsystem");
}

CoarseGraining ProductMeasurement::combined() const {
  return tensor_product_coarse_graining(locals_, space_);
}

double product_observational_entropy(const QuantumState& state, const ProductMeasurement& pm) {
  if (state.dim() != pm.space().total_dim())
    throw DimensionMismatch("state dimension does not match the tensor space");
  return observational_entropy(state, MeasurementSequence{pm.combined()});
}

namespace {

// Joint outcome probabilities of a product measurement, indexed per
// subsystem outcome (row-major over the locals' element counts).
std::vector<double> joint_probabilities(const QuantumState& state, const ProductMeasurement& pm) {
  MacrostateDistribution dist =
      macrostate_distribution(state, MeasurementSequence{pm.combined()});
  // combined() enumerates outcomes in row-major order and drops nothing:
  // every product element has positive volume.
  std::vector<double> p;
  p.reserve(dist.size());
  for (const auto& r : dist.records()) p.push_back(r.probability);
  return p;
}

std::vector<std::vector<double>> marginal_probabilities(const QuantumState& state,
                                                        const ProductMeasurement& pm) {
  std::vector<std::vector<double>> marginals;
  for (int x = 0; x < pm.space().subsystems(); ++x) {
    Matrix rx = partial_trace(state.matrix(), pm.space().subsystem_dims(), x);
    const CoarseGraining& cg = pm.locals()[x];
    Matrix w = cg.basis().adjoint() * rx * cg.basis();
    std::vector<double> m(cg.size());
    for (int l = 0; l < cg.size(); ++l) {
      Index off = cg.block_offset(l), sz = cg.block_size(l);
      m[l] = std::max(w.block(off, off, sz, sz).trace().real(), 0.0);
    }
    marginals.push_back(std::move(m));
  }
  return marginals;
}

}  // namespace

double total_correlation(const QuantumState& state, const ProductMeasurement& pm) {
  if (state.dim() != pm.space().total_dim())
    throw DimensionMismatch("state dimension does not match the tensor space");
  std::vector<double> p = joint_probabilities(state, pm);
  auto marginals = marginal_probabilities(state, pm);

  int n = pm.space().subsystems();
  std::vector<int> idx(n, 0);
  double total = 0.0;
  for (double pj : p) {
    if (pj > 0.0) {
      double prod = 1.0;
      for (int k = 0; k < n; ++k) prod *= marginals[k][idx[k]];
      total += pj * std::log(pj / prod);
    }
    int k = n - 1;
    while (k >= 0 && ++idx[k] == static_cast<int>(marginals[k].size())) idx[k--] = 0;
  }
  return total;
}

double decomposition_residual(const QuantumState& state, const ProductMeasurement& pm) {
  double s_product = product_observational_entropy(state, pm);
  double local_sum = 0.0;
  for (int x = 0; x < pm.space().subsystems(); ++x) {
    QuantumState rx = partial_trace(state, pm.space(), x);
    local_sum += observational_entropy(rx, MeasurementSequence{pm.locals()[x]});
  }
  double i = total_correlation(state, pm);
  return std::abs(s_product - (local_sum - i));
}

// ---------------------------------------------------------------------------
// Quarrelation optimizer

namespace {

Matrix random_unitary(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < d; ++i) {
    Complex rd = r(i, i);
    double mag = std::abs(rd);
    if (mag > 0) q.col(i) *= rd / mag;
  }
  return q;
}

// Shannon entropy of the diagonal of (U_A (x) U_B (x) ...)^dag rho (...):
// the objective for rank-1 product coarse-grainings (all volumes are 1).
class ProductBasisObjective {
 public:
  ProductBasisObjective(const Matrix& rho, std::vector<Index> dims)
      : rho_(rho), dims_(std::move(dims)) {}

  double operator()(const std::vector<Matrix>& unitaries) const {
    Matrix u = unitaries[0];
    for (size_t k = 1; k < unitaries.size(); ++k) {
      const Matrix& b = unitaries[k];
      Matrix next(u.rows() * b.rows(), u.cols() * b.cols());
      for (Index r = 0; r < u.rows(); ++r)
        for (Index c = 0; c < u.cols(); ++c)
          next.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = u(r, c) * b;
      u = std::move(next);
    }
    Vector diag = (u.adjoint() * rho_ * u).diagonal();
    double s = 0.0;
    for (Index i = 0; i < diag.size(); ++i) {
      double p = std::max(diag(i).real(), 0.0);
      if (p > 0.0) s -= p * std::log(p);
    }
    return s;
  }

 private:
  const Matrix& rho_;
  std::vector<Index> dims_;
};

constexpr double kGoldenRatio = 0.6180339887498949;

// Golden-section refinement inside [lo, hi] after a coarse bracketing scan.
template <typename F>
double line_search(const F& f, double lo, double hi) {
  constexpr int kScan = 9;
  double best_x = 0.0, best_f = std::numeric_limits<double>::infinity();
  double step = (hi - lo) / (kScan - 1);
  for (int i = 0; i < kScan; ++i) {
    double x = lo + i * step;
    double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  double a = best_x - step, b = best_x + step;
  double x1 = b - kGoldenRatio * (b - a);
  double x2 = a + kGoldenRatio * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 40; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGoldenRatio * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGoldenRatio * (b - a);
      f2 = f(x2);
    }
  }
  double x = (f1 < f2) ? x1 : x2;
  double v = std::min(f1, f2);
  return (v < best_f) ? x : best_x;
}

// Two-level rotation on columns (p, q): theta mixes, phi sets the relative
// phase. Column phases themselves are irrelevant to the induced projectors.
Matrix two_level_rotation(Index d, Index p, Index q, double theta, double phi) {
  Matrix g = Matrix::Identity(d, d);
  Complex e = std::polar(1.0, phi);
  g(p, p) = std::cos(theta);
  g(q, q) = std::cos(theta);
  g(p, q) = -std::conj(e) * std::sin(theta);
  g(q, p) = e * std::sin(theta);
  return g;
}

}  // namespace

QceResult quantum_correlation_entropy(const QuantumState& state, const TensorSpace& space,
                                      const QceOptions& opts) {
  if (state.dim() != space.total_dim())
    throw DimensionMismatch("state dimension does not match the tensor space");
  if (space.subsystems() < 2)
    throw ConfigError("quarrelation needs at least two subsystems");

  const double s_vn = von_neumann_entropy(state);
  ProductBasisObjective objective(state.matrix(), space.subsystem_dims());
  const auto& dims = space.subsystem_dims();
  const int n_sub = space.subsystems();

  std::mt19937_64 rng(opts.seed);
  double best_entropy = std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_unitaries;
  std::vector<QceTraceEntry> trace;

  const double half_pi = std::asin(1.0);
  for (int restart = 0; restart < std::max(opts.restarts, 1); ++restart) {
    std::vector<Matrix> u(n_sub);
    for (int k = 0; k < n_sub; ++k) u[k] = random_unitary(dims[k], rng);
    double current = objective(u);

    int sweeps = 0;
    for (; sweeps < opts.max_sweeps; ++sweeps) {
      double sweep_start = current;
      for (int k = 0; k < n_sub; ++k)
        for (Index p = 0; p < dims[k]; ++p)
          for (Index q = p + 1; q < dims[k]; ++q)
            // Two rotation planes per column pair; composed over sweeps they
            // span the full unitary group modulo column phases. The mixing
            // angle has period pi/2 up to outcome relabeling.
            for (double phi : {0.0, half_pi}) {
              auto rotate_eval = [&](double theta) {
                Matrix saved = u[k];
                u[k] = saved * two_level_rotation(dims[k], p, q, theta, phi);
                double v = objective(u);
                u[k] = std::move(saved);
                return v;
              };
              double theta = line_search(rotate_eval, -half_pi / 2, half_pi / 2);
              double value = rotate_eval(theta);
              if (value < current) {
                u[k] = u[k] * two_level_rotation(dims[k], p, q, theta, phi);
                current = value;
              }
            }
      if (sweep_start - current < opts.tol_obj) {
        ++sweeps;
        break;
      }
    }
    trace.push_back({restart, sweeps, current});
    if (current < best_entropy) {
      best_entropy = current;
      best_unitaries = u;
    }
  }

  std::vector<CoarseGraining> locals;
  for (int k = 0; k < n_sub; ++k)
    locals.push_back(CoarseGraining::from_basis(
        best_unitaries[k], std::vector<Index>(dims[k], 1), {}));

  QceResult result{best_entropy - s_vn, ProductMeasurement(space, std::move(locals)),
                   std::move(trace), best_entropy - s_vn};
  return result;
}

bool correlation_bound_holds(const QuantumState& state, const ProductMeasurement& pm,
                             const QceResult& qce) {
  double s = product_observational_entropy(state, pm);
  double s_vn = von_neumann_entropy(state);
  return s >= s_vn + qce.value - 1e-9;
}

}  // namespace obsent
