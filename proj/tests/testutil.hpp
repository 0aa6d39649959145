#pragma once

#include <random>

#include "obsent/entropy.hpp"

namespace obsent::testing {

inline Matrix random_unitary(Index d, std::mt19937_64& rng) {
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

inline Vector random_pure(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(d);
  for (Index i = 0; i < d; ++i) v(i) = Complex(gauss(rng), gauss(rng));
  return v / v.norm();
}

inline Matrix random_density_matrix(Index d, Index rank, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix a(d, rank);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < rank; ++j) a(i, j) = Complex(gauss(rng), gauss(rng));
  Matrix rho = a * a.adjoint();
  return rho / rho.trace().real();
}

inline QuantumState random_state(Index d, std::mt19937_64& rng) {
  Index rank = 1 + Index(rng() % std::uint64_t(d));
  return QuantumState(random_density_matrix(d, rank, rng));
}

// Random composition of d into 1..d parts.
inline std::vector<Index> random_partition(Index d, std::mt19937_64& rng) {
  Index parts = 1 + Index(rng() % std::uint64_t(d));
  std::vector<Index> sizes(parts, 1);
  for (Index extra = 0; extra < d - parts; ++extra) ++sizes[rng() % std::uint64_t(parts)];
  return sizes;
}

inline CoarseGraining random_projective_cg(Index d, std::mt19937_64& rng) {
  return CoarseGraining::from_basis(random_unitary(d, rng), random_partition(d, rng), {});
}

// Rows of a random (k*d) x d isometry, cut into k Kraus operators.
inline KrausCoarseGraining random_kraus_cg(Index d, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(k * d, d);
  for (Index i = 0; i < k * d; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(k * d, d);
  std::vector<Matrix> elements;
  for (int e = 0; e < k; ++e) elements.push_back(q.middleRows(Index(e) * d, d));
  return KrausCoarseGraining(std::move(elements));
}

// Pauli basics on a qubit.
inline CoarseGraining pauli_z_cg() {
  Matrix p0 = Matrix::Zero(2, 2), p1 = Matrix::Zero(2, 2);
  p0(0, 0) = 1.0;
  p1(1, 1) = 1.0;
  return CoarseGraining::from_projectors({p0, p1}, {Label(1), Label(-1)});
}

inline CoarseGraining pauli_x_cg() {
  Matrix plus(2, 2), minus(2, 2);
  plus << 0.5, 0.5, 0.5, 0.5;
  minus << 0.5, -0.5, -0.5, 0.5;
  return CoarseGraining::from_projectors({plus, minus}, {Label(1), Label(-1)});
}

inline QuantumState qubit_zero() {
  Vector v(2);
  v << 1.0, 0.0;
  return QuantumState::pure(v);
}

inline QuantumState bell_state() {
  Vector v(4);
  v << 1.0, 0.0, 0.0, 1.0;
  return QuantumState::pure(v / std::sqrt(2.0));
}

}  // namespace obsent::testing
