#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "kickwell/errors.hpp"
#include "kickwell/floquet.hpp"
#include "kickwell/model.hpp"

using namespace kickwell;
using std::numbers::pi;

namespace {

// (1/2pi) integral of exp(-i k cos(theta) / hbar) e^{-i n theta}.
Complex kick_by_quadrature(const ModelParams& p, long n) {
  using boost::math::quadrature::gauss_kronrod;
  const double kappa = p.kick() / p.hbar();
  const double nn = static_cast<double>(n);
  auto phase = [&](double t) { return -kappa * std::cos(t) - nn * t; };
  const double re = gauss_kronrod<double, 61>::integrate(
      [&](double t) { return std::cos(phase(t)); }, 0.0, 2.0 * pi, 15, 1e-14);
  const double im = gauss_kronrod<double, 61>::integrate(
      [&](double t) { return std::sin(phase(t)); }, 0.0, 2.0 * pi, 15, 1e-14);
  return Complex(re, im) / (2.0 * pi);
}

struct Built {
  UnperturbedSpectrum spec;
  FloquetMatrix u;
};

Built build(double k, double v0, int l_max, double hbar = 1.0) {
  const ModelParams p = validate_params({k, v0, 1.4, hbar});
  UnperturbedSpectrum s = solve_unperturbed(p, make_truncation(l_max));
  FloquetMatrix u = build_floquet(s, p);
  return {std::move(s), std::move(u)};
}

}  // namespace

TEST_CASE("kick coefficients match the Jacobi-Anger integral") {
  for (double k : {0.25, 4.25}) {
    for (double hbar : {1.0, 0.5}) {
      const ModelParams p = validate_params({k, 0.0, 1.4, hbar});
      for (long n : {0L, 1L, 2L, 3L, 6L, -1L, -4L}) {
        CHECK(std::abs(kick_coefficient(p, n) - kick_by_quadrature(p, n)) < 1e-12);
      }
    }
  }
}

TEST_CASE("kick matrix is Toeplitz and trivial without a kick") {
  const BasisTruncation t = make_truncation(16);
  const Eigen::MatrixXcd kick = kick_matrix(validate_params({2.0, 0.0, 1.4, 1.0}), t);
  for (int i = 0; i + 1 < t.dim(); ++i)
    for (int j = 0; j + 1 < t.dim(); ++j) CHECK(std::abs(kick(i, j) - kick(i + 1, j + 1)) < 1e-15);
  const Eigen::MatrixXcd none = kick_matrix(validate_params({0.0, 0.0, 1.4, 1.0}), t);
  CHECK((none - Eigen::MatrixXcd::Identity(t.dim(), t.dim())).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("zero kick gives the free phases and basis deltas") {
  const Built b = build(0.0, 5000.0, 64);
  const int dim = b.u.dim();
  Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) expected(n, n) = std::polar(1.0, -b.spec.energies[n]);
  CHECK((b.u.entries - expected).cwiseAbs().maxCoeff() < 1e-12);

  const FloquetDecomposition d = diagonalize_floquet(b.u);
  for (int r = 0; r < dim; ++r) {
    CHECK(d.peak_index[r] == r);
    CHECK(std::abs(std::abs(d.states(r, r)) - 1.0) < 1e-12);
    CHECK(d.quasi_energies[r] == doctest::Approx(wrap_angle(-b.spec.energies[r])).epsilon(1e-10));
  }
}

TEST_CASE("retained block is unitary and eigenpairs hold") {
  const Built b = build(1.0, 50.0, 128);
  CHECK_FALSE(b.u.flagged);
  CHECK(b.u.retained == b.u.dim() / 2);
  CHECK(b.u.unitarity_defect < kUnitarityTolerance);
  const FloquetDecomposition d = diagonalize_floquet(b.u);
  CHECK(d.converged_count() > 0);
  for (int r = 0; r < d.dim(); ++r) {
    if (!d.converged[r]) continue;
    const Eigen::VectorXcd c = d.states.row(r).transpose();
    const Complex lambda = std::polar(d.eigen_moduli[r], d.quasi_energies[r]);
    CHECK((b.u.entries * c - lambda * c).norm() < 1e-8);
    CHECK(std::abs(d.eigen_moduli[r] - 1.0) < 1e-8);
    CHECK(d.quasi_energies[r] >= 0.0);
    CHECK(d.quasi_energies[r] < 2.0 * pi);
    CHECK(d.tail_weight[r] <= kTailWeightTolerance);
  }
}

TEST_CASE("Floquet states keep their parity and stay orthonormal") {
  const Built b = build(1.5, 500.0, 128);
  const FloquetDecomposition d = diagonalize_floquet(b.u);
  std::vector<int> kept;
  for (int r = 0; r < d.dim(); ++r)
    if (d.converged[r]) kept.push_back(r);
  REQUIRE(kept.size() > 5);
  for (int r : kept) {
    double wrong = 0.0;
    for (int n = 0; n < d.dim(); ++n)
      if (b.u.basis_parities[n] != d.parities[r]) wrong += std::norm(d.states(r, n));
    CHECK(wrong < 1e-20);
  }
  // Truncation leaves U unitary only to the retained-block defect, and the
  // eigenvectors inherit that much non-orthogonality.
  for (int r : kept)
    for (int s : kept) {
      const Complex overlap = d.states.row(r).dot(d.states.row(s));
      CHECK(std::abs(overlap - (r == s ? 1.0 : 0.0)) < kUnitarityTolerance);
    }
}

TEST_CASE("flagged matrices are refused") {
  Built b = build(1.0, 50.0, 32);
  b.u.flagged = true;
  CHECK_THROWS_AS(diagonalize_floquet(b.u), UnitarityError);
}

TEST_CASE("a coarse basis for a strong kick is flagged") {
  const Built b = build(4.25, 5000.0, 100);
  CHECK(b.u.flagged);
  CHECK(b.u.unitarity_defect > kUnitarityTolerance);
}

TEST_CASE("tail window covers the top tenth") {
  CHECK(tail_start(1001) == 901);
  CHECK(tail_start(65) == 59);
}

TEST_CASE("evolution conserves norm and counts kicks") {
  const Built b = build(1.0, 50.0, 128);
  const auto path = evolve(basis_state(b.u.dim(), 0), b.u, 40);
  REQUIRE(path.size() == 41);
  CHECK(path.front().time == 0);
  CHECK(path.back().time == 40);
  for (const EvolvedState& s : path) CHECK(std::abs(s.amplitudes.norm() - 1.0) < 1e-8);
  CHECK(mean_energy(path.front(), b.spec) == doctest::Approx(b.spec.energies[0]));
  CHECK(mean_energy(path.back(), b.spec) > b.spec.energies[0]);

  EvolvedState bad = basis_state(b.u.dim(), 0);
  bad.amplitudes *= 2.0;
  CHECK_THROWS_AS(evolve(bad, b.u, 1), ParameterError);
}

TEST_CASE("zero kick leaves the energy unchanged") {
  const Built b = build(0.0, 50.0, 32);
  const auto path = evolve(basis_state(b.u.dim(), 3), b.u, 10);
  for (const EvolvedState& s : path)
    CHECK(mean_energy(s, b.spec) == doctest::Approx(b.spec.energies[3]).epsilon(1e-12));
}
