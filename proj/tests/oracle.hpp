#pragma once

#include <cmath>
#include <vector>

#include "obsent/types.hpp"

// Brute-force reference for observational entropy, independent of the
// library's branch engine: explicit repeated projection with renormalized
// branch states and separately accumulated branch probabilities, everything
// in dense matrices.

namespace obsent::testing {

struct OracleRecord {
  std::vector<int> index;
  double probability;
  double volume;
};

inline void oracle_walk(const std::vector<std::vector<Matrix>>& steps, size_t level,
                        const Matrix& branch_state, double branch_prob,
                        const Matrix& volume_op, std::vector<int>& prefix,
                        std::vector<OracleRecord>& out) {
  if (level == steps.size()) {
    double v = volume_op.trace().real();
    if (v > 1e-12) out.push_back({prefix, branch_prob, v});
    return;
  }
  for (size_t e = 0; e < steps[level].size(); ++e) {
    const Matrix& p = steps[level][e];
    Matrix projected = p * branch_state * p;
    double w = projected.trace().real();
    Matrix next_state = w > 0 ? Matrix(projected / w) : Matrix::Zero(p.rows(), p.cols());
    prefix.push_back(int(e));
    oracle_walk(steps, level + 1, next_state, branch_prob * std::max(w, 0.0),
                Matrix(p * volume_op * p), prefix, out);
    prefix.pop_back();
  }
}

inline std::vector<OracleRecord> oracle_distribution(
    const Matrix& rho, const std::vector<std::vector<Matrix>>& steps) {
  std::vector<OracleRecord> out;
  std::vector<int> prefix;
  oracle_walk(steps, 0, rho, 1.0, Matrix::Identity(rho.rows(), rho.cols()), prefix, out);
  return out;
}

inline double oracle_entropy(const Matrix& rho, const std::vector<std::vector<Matrix>>& steps) {
  double s = 0.0;
  for (const auto& r : oracle_distribution(rho, steps))
    if (r.probability > 0.0) s -= r.probability * std::log(r.probability / r.volume);
  return s;
}

// Entanglement entropy of a pure bipartite state from its Schmidt spectrum.
inline double schmidt_entropy(const Vector& psi, Index da, Index db) {
  Matrix reshaped(da, db);
  for (Index a = 0; a < da; ++a)
    for (Index b = 0; b < db; ++b) reshaped(a, b) = psi(a * db + b);
  Eigen::JacobiSVD<Matrix> svd(reshaped);
  double s = 0.0;
  for (Index i = 0; i < svd.singularValues().size(); ++i) {
    double p = svd.singularValues()(i) * svd.singularValues()(i);
    if (p > 1e-15) s -= p * std::log(p);
  }
  return s;
}

}  // namespace obsent::testing
