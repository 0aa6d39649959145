#include "obsent/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace obsent {

namespace detail {

double max_abs(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

void check_hermitian(const Matrix& m, double tolerance, const std::string& what) {
  if (m.rows() != m.cols())
    throw DimensionMismatch(what + " is not square");
  double dev = max_abs(m - m.adjoint());
  if (dev > tolerance) {
    std::ostringstream os;
    os << what << " deviates from Hermitian by " << dev;
    throw NonHermitian(os.str());
  }
}

bool is_unitary(const Matrix& u, double tolerance) {
  if (u.rows() != u.cols()) return false;
  Matrix g = u.adjoint() * u;
  g.diagonal().array() -= 1.0;
  return max_abs(g) <= tolerance;
}

ValueGroups group_sorted_values(const RealVector& values, double width,
                                std::optional<double> origin, double degeneracy_tol,
                                std::optional<double> range_hint) {
  Index n = values.size();
  ValueGroups out;
  if (n == 0) return out;

  if (width == 0.0) {
    double range = range_hint.value_or(values(n - 1) - values(0));
    double gap = degeneracy_tol * range;
    Index start = 0;
    for (Index i = 1; i <= n; ++i) {
      if (i == n || values(i) - values(i - 1) > gap) {
        out.sizes.push_back(i - start);
        out.labels.emplace_back(values.segment(start, i - start).mean());
        start = i;
      }
    }
    return out;
  }

  double anchor = origin.value_or(values(0));
  auto bin_of = [&](double e) {
    return static_cast<long long>(std::floor((e - anchor) / width));
  };
  Index start = 0;
  long long current = bin_of(values(0));
  for (Index i = 1; i <= n; ++i) {
    if (i == n || bin_of(values(i)) != current) {
      out.sizes.push_back(i - start);
      out.labels.emplace_back(anchor + double(current) * width);
      if (i < n) current = bin_of(values(i));
      start = i;
    }
  }
  return out;
}

}  // namespace detail

std::string Label::str() const {
  if (is_integer()) return std::to_string(integer());
  if (is_real()) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", number());
    return buf;
  }
  if (is_text()) return text();
  std::string out = "(";
  const auto& t = tuple();
  for (size_t i = 0; i < t.size(); ++i) {
    if (i) out += ",";
    out += t[i].str();
  }
  out += ")";
  return out;
}

// ---------------------------------------------------------------------------
// QuantumState

QuantumState::QuantumState(Matrix rho, bool full_check) : rho_(std::move(rho)) {
  detail::check_hermitian(rho_, tol::hermitian, "density matrix");
  double tr_dev = std::abs(rho_.trace() - Complex(1.0, 0.0));
  if (tr_dev > tol::trace_one) {
    std::ostringstream os;
    os << "trace deviates from 1 by " << tr_dev;
    throw NotAState(os.str());
  }
  if (full_check) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho_, Eigen::EigenvaluesOnly);
    double min_ev = es.eigenvalues().minCoeff();
    if (min_ev < tol::psd_floor) {
      std::ostringstream os;
      os << "smallest eigenvalue " << min_ev << " is negative";
      throw NotAState(os.str());
    }
  }
}

QuantumState::QuantumState(Matrix rho) : QuantumState(std::move(rho), true) {}

QuantumState QuantumState::trusted(Matrix rho) {
  return QuantumState(std::move(rho), false);
}

QuantumState QuantumState::pure(const Vector& psi) {
  double n2 = psi.squaredNorm();
  if (n2 <= 0.0) throw NotAState("pure state vector has zero norm");
  Vector v = psi / std::sqrt(n2);
  return QuantumState(v * v.adjoint(), false);
}

QuantumState QuantumState::maximally_mixed(Index dim) {
  if (dim <= 0) throw NotAState("dimension must be positive");
  return QuantumState(Matrix::Identity(dim, dim) / double(dim), false);
}

// ---------------------------------------------------------------------------
// Observable

Observable::Observable(Matrix a) : a_(std::move(a)) {
  detail::check_hermitian(a_, tol::hermitian, "observable");
}

// ---------------------------------------------------------------------------
// Projector

Projector::Projector(const Matrix& p) : matrix_(p) {
  detail::check_hermitian(matrix_, tol::projector, "projector");
  double idem = detail::max_abs(matrix_ * matrix_ - matrix_);
  if (idem > tol::projector) {
    std::ostringstream os;
    os << "projector fails P^2 = P by " << idem;
    throw NotAState(os.str());
  }
  double tr = matrix_.trace().real();
  double nearest = std::round(tr);
  if (std::abs(tr - nearest) > tol::volume_integer || nearest < 0)
    throw NotAState("projector trace is not a nonnegative integer");
  volume_ = tr;

  Index rank = static_cast<Index>(nearest);
  Eigen::SelfAdjointEigenSolver<Matrix> es(matrix_);
  // Eigenvalues ascending; the range corresponds to the trailing ones (= 1).
  for (Index i = 0; i < matrix_.rows(); ++i) {
    double ev = es.eigenvalues()(i);
    bool in_range = i >= matrix_.rows() - rank;
    if (std::abs(ev - (in_range ? 1.0 : 0.0)) > 1e-7)
      throw NotAState("projector spectrum is not {0, 1}");
  }
  basis_ = es.eigenvectors().rightCols(rank);
}

Projector Projector::from_basis(Matrix basis) {
  Matrix g = basis.adjoint() * basis;
  g.diagonal().array() -= 1.0;
  if (detail::max_abs(g) > 1e-9)
    throw NotAState("projector basis columns are not orthonormal");
  Matrix p = basis * basis.adjoint();
  return Projector(std::move(p), std::move(basis), double(basis.cols()));
}

// ---------------------------------------------------------------------------
// CoarseGraining

CoarseGraining CoarseGraining::from_basis(Matrix basis, std::vector<Index> block_sizes,
                                          std::vector<Label> labels) {
  Index dim = basis.rows();
  if (basis.cols() != dim)
    throw DimensionMismatch("coarse-graining basis must be square");
  Index total = std::accumulate(block_sizes.begin(), block_sizes.end(), Index(0));
  if (total != dim)
    throw DimensionMismatch("block sizes do not sum to the dimension");
  for (Index s : block_sizes)
    if (s <= 0) throw ConfigError("coarse-graining blocks must be nonempty");
  if (!detail::is_unitary(basis, 1e-9))
    throw NotAState("coarse-graining basis is not unitary");
  if (labels.empty()) {
    for (size_t k = 0; k < block_sizes.size(); ++k)
      labels.emplace_back(static_cast<std::int64_t>(k));
  }
  if (labels.size() != block_sizes.size())
    throw DimensionMismatch("one label per coarse-graining element required");

  auto impl = std::make_shared<Impl>();
  impl->basis = std::move(basis);
  impl->offsets.resize(block_sizes.size() + 1);
  impl->offsets[0] = 0;
  for (size_t k = 0; k < block_sizes.size(); ++k)
    impl->offsets[k + 1] = impl->offsets[k] + block_sizes[k];
  impl->labels = std::move(labels);
  CoarseGraining cg;
  cg.impl_ = std::move(impl);
  return cg;
}

CoarseGraining CoarseGraining::from_projectors(const std::vector<Matrix>& projectors,
                                               std::vector<Label> labels) {
  if (projectors.empty()) throw ConfigError("coarse-graining needs at least one projector");
  Index dim = projectors[0].rows();

  std::vector<Projector> elems;
  elems.reserve(projectors.size());
  for (const Matrix& p : projectors) {
    if (p.rows() != dim || p.cols() != dim)
      throw DimensionMismatch("projectors share one dimension");
    elems.emplace_back(p);
  }
  for (size_t i = 0; i < elems.size(); ++i)
    for (size_t j = i + 1; j < elems.size(); ++j) {
      double dev = detail::max_abs(elems[i].matrix() * elems[j].matrix());
      if (dev > tol::orthogonality) {
        std::ostringstream os;
        os << "projectors " << i << " and " << j << " overlap by " << dev;
        throw NotAState(os.str());
      }
    }
  Matrix sum = Matrix::Zero(dim, dim);
  for (const auto& e : elems) sum += e.matrix();
  sum.diagonal().array() -= 1.0;
  if (detail::max_abs(sum) > tol::completeness)
    throw NotAState("projectors do not sum to the identity");

  Matrix basis(dim, dim);
  std::vector<Index> sizes;
  Index off = 0;
  for (const auto& e : elems) {
    Index v = e.basis().cols();
    basis.middleCols(off, v) = e.basis();
    sizes.push_back(v);
    off += v;
  }
  // Per-projector eigenbases are orthonormal only up to the orthogonality
  // tolerance across blocks; one QR pass cleans up the drift.
  Eigen::HouseholderQR<Matrix> qr(basis);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  for (Index c = 0; c < dim; ++c) {
    Complex overlap = q.col(c).dot(basis.col(c));
    double mag = std::abs(overlap);
    if (mag > 1e-12) q.col(c) *= overlap / mag;
  }
  return from_basis(std::move(q), std::move(sizes), std::move(labels));
}

CoarseGraining CoarseGraining::trivial(Index dim) {
  return from_basis(Matrix::Identity(dim, dim), {dim}, {Label(std::int64_t{0})});
}

Index CoarseGraining::dim() const { return impl_->basis.rows(); }
int CoarseGraining::size() const { return static_cast<int>(impl_->labels.size()); }
const Label& CoarseGraining::label(int k) const { return impl_->labels[k]; }
double CoarseGraining::volume(int k) const {
  return double(impl_->offsets[k + 1] - impl_->offsets[k]);
}
Index CoarseGraining::block_offset(int k) const { return impl_->offsets[k]; }
Index CoarseGraining::block_size(int k) const {
  return impl_->offsets[k + 1] - impl_->offsets[k];
}
const Matrix& CoarseGraining::basis() const { return impl_->basis; }
CoarseGraining::ConstColBlock CoarseGraining::basis_block(int k) const {
  return impl_->basis.middleCols(impl_->offsets[k], block_size(k));
}
Projector CoarseGraining::element(int k) const {
  return Projector::from_basis(basis_block(k));
}
const std::vector<Label>& CoarseGraining::labels() const { return impl_->labels; }

// ---------------------------------------------------------------------------
// KrausCoarseGraining

KrausCoarseGraining::KrausCoarseGraining(std::vector<Matrix> elements,
                                         std::vector<Label> labels)
    : elements_(std::move(elements)), labels_(std::move(labels)) {
  if (elements_.empty()) throw ConfigError("Kraus set needs at least one element");
  Index d = elements_[0].rows();
  Matrix sum = Matrix::Zero(d, d);
  for (const Matrix& k : elements_) {
    if (k.rows() != d || k.cols() != d)
      throw DimensionMismatch("Kraus operators share one dimension");
    sum += k.adjoint() * k;
  }
  sum.diagonal().array() -= 1.0;
  if (detail::max_abs(sum) > tol::kraus_completeness)
    throw NotAState("Kraus set is not trace-preserving");
  if (labels_.empty()) {
    for (size_t k = 0; k < elements_.size(); ++k)
      labels_.emplace_back(static_cast<std::int64_t>(k));
  }
  if (labels_.size() != elements_.size())
    throw DimensionMismatch("one label per Kraus element required");
}

// ---------------------------------------------------------------------------
// TensorSpace and partial trace

TensorSpace::TensorSpace(std::vector<Index> subsystem_dims) : dims_(std::move(subsystem_dims)) {
  if (dims_.empty()) throw ConfigError("tensor space needs at least one subsystem");
  total_dim_ = 1;
  for (Index d : dims_) {
    if (d <= 0) throw ConfigError("subsystem dimensions must be positive");
    total_dim_ *= d;
  }
}

Matrix partial_trace(const Matrix& rho, const std::vector<Index>& dims, int keep) {
  int n = static_cast<int>(dims.size());
  if (keep < 0 || keep >= n) throw DimensionMismatch("subsystem index out of range");
  Index total = 1;
  for (Index d : dims) total *= d;
  if (rho.rows() != total || rho.cols() != total)
    throw DimensionMismatch("state dimension does not match the tensor space");

  // Row-major composite index: subsystem 0 is the most significant factor.
  Index dk = dims[keep];
  Index right = 1;
  for (int s = keep + 1; s < n; ++s) right *= dims[s];
  Index left = total / (dk * right);

  Matrix out = Matrix::Zero(dk, dk);
  for (Index l = 0; l < left; ++l)
    for (Index r = 0; r < right; ++r) {
      Index base = l * dk * right + r;
      for (Index a = 0; a < dk; ++a)
        for (Index b = 0; b < dk; ++b)
          out(a, b) += rho(base + a * right, base + b * right);
    }
  return out;
}

QuantumState partial_trace(const QuantumState& state, const TensorSpace& space, int keep) {
  return QuantumState::trusted(
      partial_trace(state.matrix(), space.subsystem_dims(), keep));
}

// ---------------------------------------------------------------------------
// Coarse-graining constructors

namespace {

struct SpectralData {
  RealVector eigenvalues;  // ascending
  Matrix eigenvectors;
};

SpectralData diagonalize(const Observable& obs) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(obs.matrix());
  if (es.info() != Eigen::Success)
    throw NonHermitian("eigendecomposition failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace

CoarseGraining coarse_graining_from_observable(const Observable& obs, double degeneracy_tol) {
  SpectralData sd = diagonalize(obs);
  auto groups = detail::group_sorted_values(sd.eigenvalues, 0.0, std::nullopt, degeneracy_tol);
  return CoarseGraining::from_basis(sd.eigenvectors, std::move(groups.sizes),
                                    std::move(groups.labels));
}

CoarseGraining energy_shell_coarse_graining(const Observable& obs, double shell_width,
                                            std::optional<double> origin) {
  if (shell_width < 0) throw ConfigError("shell width must be nonnegative");
  SpectralData sd = diagonalize(obs);
  auto groups =
      detail::group_sorted_values(sd.eigenvalues, shell_width, origin, tol::degeneracy);
  return CoarseGraining::from_basis(sd.eigenvectors, std::move(groups.sizes),
                                    std::move(groups.labels));
}

CoarseGraining tensor_product_coarse_graining(const std::vector<CoarseGraining>& parts,
                                              const TensorSpace& space) {
  if (parts.size() != static_cast<size_t>(space.subsystems()))
    throw DimensionMismatch("one coarse-graining per subsystem required");
  for (size_t k = 0; k < parts.size(); ++k)
    if (parts[k].dim() != space.subsystem_dims()[k])
      throw DimensionMismatch("part dimension disagrees with the tensor space");

  Index total = space.total_dim();
  Matrix basis(total, total);
  std::vector<Index> sizes;
  std::vector<Label> labels;

  int n = static_cast<int>(parts.size());
  std::vector<int> idx(n, 0);
  Index col = 0;
  while (true) {
    // Element (idx_0, ..., idx_{n-1}); columns are the Kronecker product of
    // the per-part basis blocks.
    Index block = 1;
    for (int k = 0; k < n; ++k) block *= parts[k].block_size(idx[k]);
    Matrix cols = Matrix::Ones(1, 1);
    for (int k = 0; k < n; ++k) {
      const auto sub = parts[k].basis_block(idx[k]);
      Matrix next(cols.rows() * sub.rows(), cols.cols() * sub.cols());
      for (Index r = 0; r < cols.rows(); ++r)
        for (Index c = 0; c < cols.cols(); ++c)
          next.block(r * sub.rows(), c * sub.cols(), sub.rows(), sub.cols()) =
              cols(r, c) * sub;
      cols = std::move(next);
    }
    basis.middleCols(col, block) = cols;
    col += block;
    sizes.push_back(block);
    Label::Tuple t;
    for (int k = 0; k < n; ++k) t.push_back(parts[k].label(idx[k]));
    labels.emplace_back(std::move(t));

    int k = n - 1;
    while (k >= 0 && ++idx[k] == parts[k].size()) idx[k--] = 0;
    if (k < 0) break;
  }
  return CoarseGraining::from_basis(std::move(basis), std::move(sizes), std::move(labels));
}

CoarseGraining joint_coarse_graining(const CoarseGraining& a, const CoarseGraining& b,
                                     double commute_tol) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("joint coarse-graining requires equal dimensions");
  Index dim = a.dim();

  std::vector<Matrix> a_mats(a.size()), b_mats(b.size());
  for (int i = 0; i < a.size(); ++i) a_mats[i] = a.element(i).matrix();
  for (int j = 0; j < b.size(); ++j) b_mats[j] = b.element(j).matrix();

  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j) {
      double dev = detail::max_abs(a_mats[i] * b_mats[j] - b_mats[j] * a_mats[i]);
      if (dev > commute_tol) {
        std::ostringstream os;
        os << "elements " << i << ", " << j << " fail to commute (norm " << dev
           << "); no joint coarse-graining exists";
        throw NonCommuting(os.str());
      }
    }

  Matrix basis(dim, dim);
  std::vector<Index> sizes;
  std::vector<Label> labels;
  Index col = 0;
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j) {
      // Intersection basis from the eigenvectors of B_j^dag P_i B_j with
      // eigenvalue 1.
      Matrix small = b.basis_block(j).adjoint() * (a_mats[i] * b.basis_block(j));
      Eigen::SelfAdjointEigenSolver<Matrix> es(small);
      Index rank = 0;
      for (Index r = 0; r < small.rows(); ++r)
        if (es.eigenvalues()(r) > 0.5) ++rank;
      if (rank == 0) continue;
      basis.middleCols(col, rank) =
          b.basis_block(j) * es.eigenvectors().rightCols(rank);
      col += rank;
      sizes.push_back(rank);
      labels.emplace_back(Label::Tuple{a.label(i), b.label(j)});
    }
  if (col != dim)
    throw NotAState("joint coarse-graining does not span the space");
  return CoarseGraining::from_basis(std::move(basis), std::move(sizes), std::move(labels));
}

}  // namespace obsent
