#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "kickwell/model.hpp"

namespace kickwell::detail {

// LAPACK dsyevd. On return `a` holds eigenvectors as columns and `w` the
// ascending eigenvalues.
void symmetric_eigen(Eigen::MatrixXd& a, Eigen::VectorXd& w);

// LAPACK zgees without sorting. On return `a` holds the upper-triangular
// factor, `z` the Schur vectors and `w` the diagonal of the factor.
void complex_schur(Eigen::MatrixXcd& a, Eigen::MatrixXcd& z, Eigen::VectorXcd& w);

// Right eigenvectors of a general complex matrix: Schur form, then ztrevc
// back-substitution through the Schur vectors. Columns of `v` are scaled to
// unit 2-norm; `a` is overwritten.
void complex_eigen(Eigen::MatrixXcd& a, Eigen::MatrixXcd& v, Eigen::VectorXcd& w);

inline int sector_size(int l_max, Parity parity) {
  return parity == Parity::even ? l_max + 1 : l_max;
}

inline int sector_momentum(int j, Parity parity) {
  return parity == Parity::even ? j : j + 1;
}

// Matrix of a reflection-symmetric Toeplitz operator, symbol(n) == symbol(-n),
// restricted to one parity sector of the momentum basis.
template <class Scalar, class Symbol>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> parity_block(Symbol symbol, int l_max,
                                                                  Parity parity) {
  const int n = sector_size(l_max, parity);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(n, n);
  const double sign = parity == Parity::even ? 1.0 : -1.0;
  for (int j = 0; j < n; ++j) {
    const int lj = sector_momentum(j, parity);
    for (int i = j; i < n; ++i) {
      const int li = sector_momentum(i, parity);
      Scalar v;
      if (li == 0 && lj == 0) {
        v = symbol(0);
      } else if (lj == 0 || li == 0) {
        v = Scalar(std::numbers::sqrt2) * symbol(li + lj);
      } else {
        v = symbol(li - lj) + Scalar(sign) * symbol(li + lj);
      }
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

}  // namespace kickwell::detail
