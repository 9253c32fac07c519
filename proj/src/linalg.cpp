#include "linalg.hpp"

#include <lapacke.h>

#include <string>

#include "kickwell/errors.hpp"

namespace kickwell::detail {

void symmetric_eigen(Eigen::MatrixXd& a, Eigen::VectorXd& w) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  w.resize(n);
  if (n == 0) return;
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, w.data());
  if (info > 0) {
    throw ConvergenceError("dsyevd failed to converge (" + std::to_string(info) +
                           " off-diagonal elements)");
  }
  if (info < 0) throw Error("dsyevd: invalid argument " + std::to_string(-info));
}

void complex_schur(Eigen::MatrixXcd& a, Eigen::MatrixXcd& z, Eigen::VectorXcd& w) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  z.resize(n, n);
  w.resize(n);
  if (n == 0) return;
  lapack_int sdim = 0;
  const lapack_int info = LAPACKE_zgees(
      LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, reinterpret_cast<lapack_complex_double*>(a.data()),
      n, &sdim, reinterpret_cast<lapack_complex_double*>(w.data()),
      reinterpret_cast<lapack_complex_double*>(z.data()), n);
  if (info > 0) {
    throw ConvergenceError("zgees failed to converge (info " + std::to_string(info) + ")");
  }
  if (info < 0) throw Error("zgees: invalid argument " + std::to_string(-info));
}

void complex_eigen(Eigen::MatrixXcd& a, Eigen::MatrixXcd& v, Eigen::VectorXcd& w) {
  complex_schur(a, v, w);
  const lapack_int n = static_cast<lapack_int>(a.rows());
  if (n == 0) return;
  lapack_int used = 0;
  const lapack_int info = LAPACKE_ztrevc(
      LAPACK_COL_MAJOR, 'R', 'B', nullptr, n, reinterpret_cast<lapack_complex_double*>(a.data()),
      n, nullptr, n, reinterpret_cast<lapack_complex_double*>(v.data()), n, n, &used);
  if (info != 0) throw Error("ztrevc: invalid argument " + std::to_string(-info));
  for (lapack_int c = 0; c < n; ++c) v.col(c).normalize();
}

}  // namespace kickwell::detail
