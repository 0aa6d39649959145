#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "obsent/types.hpp"

namespace obsent {

// Density operator on a finite Hilbert space. Hermitian, unit trace,
// positive semidefinite; every public constructor checks all three.
class QuantumState {
 public:
  explicit QuantumState(Matrix rho);
  static QuantumState pure(const Vector& psi);
  // Maximally mixed state I/dim.
  static QuantumState maximally_mixed(Index dim);
  // Skips the eigenvalue check; for internal paths where positivity is
  // guaranteed by construction. Hermiticity and trace are still enforced.
  static QuantumState trusted(Matrix rho);

  Index dim() const { return rho_.rows(); }
  const Matrix& matrix() const { return rho_; }

 private:
  QuantumState(Matrix rho, bool full_check);
  Matrix rho_;
};

// Hermitian observable.
class Observable {
 public:
  explicit Observable(Matrix a);
  Index dim() const { return a_.rows(); }
  const Matrix& matrix() const { return a_; }

 private:
  Matrix a_;
};

// Orthogonal projector with its subspace volume (tr P) and an orthonormal
// basis of its range.
class Projector {
 public:
  explicit Projector(const Matrix& p);
  static Projector from_basis(Matrix basis);

  Index dim() const { return matrix_.rows(); }
  double volume() const { return volume_; }
  const Matrix& matrix() const { return matrix_; }
  const Matrix& basis() const { return basis_; }

 private:
  Projector(Matrix p, Matrix basis, double volume)
      : matrix_(std::move(p)), basis_(std::move(basis)), volume_(volume) {}
  Matrix matrix_;
  Matrix basis_;
  double volume_;
};

// Complete set of mutually orthogonal projectors, stored as one unitary
// whose columns are grouped into contiguous blocks (one block per element).
// Cheap to copy; immutable after construction.
class CoarseGraining {
 public:
  CoarseGraining() = default;

  // basis: dim x dim with orthonormal columns; block_sizes sum to dim.
  static CoarseGraining from_basis(Matrix basis, std::vector<Index> block_sizes,
                                   std::vector<Label> labels);
  // Explicit projector matrices; validated against the projector,
  // orthogonality, and completeness invariants, then re-orthogonalized.
  static CoarseGraining from_projectors(const std::vector<Matrix>& projectors,
                                        std::vector<Label> labels = {});
  // The one-element coarse-graining {I}: no measurement at all.
  static CoarseGraining trivial(Index dim);

  bool valid() const { return impl_ != nullptr; }
  Index dim() const;
  int size() const;
  const Label& label(int k) const;
  double volume(int k) const;
  Index block_offset(int k) const;
  Index block_size(int k) const;
  const Matrix& basis() const;
  // View of the orthonormal basis of element k's range.
  using ConstColBlock = Eigen::Block<const Matrix, Eigen::Dynamic, Eigen::Dynamic, true>;
  ConstColBlock basis_block(int k) const;
  Projector element(int k) const;
  const std::vector<Label>& labels() const;

 private:
  struct Impl {
    Matrix basis;
    std::vector<Index> offsets;  // size() + 1 entries
    std::vector<Label> labels;
  };
  std::shared_ptr<const Impl> impl_;
};

// Trace-preserving set of Kraus operators (generalized measurement).
class KrausCoarseGraining {
 public:
  KrausCoarseGraining(std::vector<Matrix> elements, std::vector<Label> labels = {});

  Index dim() const { return elements_.empty() ? 0 : elements_[0].rows(); }
  int size() const { return static_cast<int>(elements_.size()); }
  const Matrix& element(int k) const { return elements_[k]; }
  const Label& label(int k) const { return labels_[k]; }
  const std::vector<Label>& labels() const { return labels_; }

 private:
  std::vector<Matrix> elements_;
  std::vector<Label> labels_;
};

// Tensor-product factorization H = H_A (x) ... (x) H_C.
class TensorSpace {
 public:
  explicit TensorSpace(std::vector<Index> subsystem_dims);

  Index total_dim() const { return total_dim_; }
  int subsystems() const { return static_cast<int>(dims_.size()); }
  const std::vector<Index>& subsystem_dims() const { return dims_; }

 private:
  std::vector<Index> dims_;
  Index total_dim_;
};

// Reduced state of subsystem `keep` (trace over all others).
QuantumState partial_trace(const QuantumState& state, const TensorSpace& space, int keep);
Matrix partial_trace(const Matrix& rho, const std::vector<Index>& dims, int keep);

// Spectral coarse-graining of an observable. Eigenvalues closer than
// degeneracy_tol * spectral_range are grouped; each projector is labeled by
// its group's mean eigenvalue.
CoarseGraining coarse_graining_from_observable(const Observable& obs,
                                               double degeneracy_tol = tol::degeneracy);

// Bins eigenvectors into half-open energy shells [origin + k*width,
// origin + (k+1)*width); empty shells are dropped, labels carry the shell's
// lower edge. origin defaults to the smallest eigenvalue. width = 0 falls
// back to exact-degeneracy grouping.
CoarseGraining energy_shell_coarse_graining(const Observable& obs, double shell_width,
                                            std::optional<double> origin = std::nullopt);

// {P_l^A (x) P_m^B (x) ...} with composite labels (l, m, ...).
CoarseGraining tensor_product_coarse_graining(const std::vector<CoarseGraining>& parts,
                                              const TensorSpace& space);

// Single coarse-graining {P_i Q_j} of two commuting coarse-grainings; throws
// NonCommuting if any pair of elements fails to commute within tol.
CoarseGraining joint_coarse_graining(const CoarseGraining& a, const CoarseGraining& b,
                                     double commute_tol = 1e-10);

namespace detail {
double max_abs(const Matrix& m);
void check_hermitian(const Matrix& m, double tolerance, const std::string& what);
bool is_unitary(const Matrix& u, double tolerance);

// Contiguous grouping of ascending values, either into half-open shells of
// the given width or (width == 0) by near-degeneracy relative to the range.
struct ValueGroups {
  std::vector<Index> sizes;
  std::vector<Label> labels;  // shell lower edge, or group mean when width == 0
};
ValueGroups group_sorted_values(const RealVector& values, double width,
                                std::optional<double> origin, double degeneracy_tol,
                                std::optional<double> range_hint = std::nullopt);
}  // namespace detail

}  // namespace obsent
