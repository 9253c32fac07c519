#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "kickwell/errors.hpp"
#include "kickwell/floquet.hpp"
#include "kickwell/tightbinding.hpp"

using namespace kickwell;
using std::numbers::pi;

namespace {

double w_by_quadrature(const ModelParams& p, int n) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(
             [&](double t) { return w_theta(p, t) * std::cos(n * t); }, 0.0, 2.0 * pi, 15,
             1e-15) /
         (2.0 * pi);
}

}  // namespace

TEST_CASE("W coefficients agree with adaptive quadrature") {
  for (auto [k, hbar] : {std::pair{0.25, 1.0}, std::pair{1.0, 0.5}, std::pair{2.5, 1.0}}) {
    const ModelParams p = validate_params({k, 0.0, 1.4, hbar});
    const WCoefficients w = w_fourier(p, 12);
    REQUIRE(w.values.size() == 13);
    for (int n = 0; n <= 12; ++n) CHECK(std::abs(w.at(n) - w_by_quadrature(p, n)) < 1e-13);
    CHECK(w.at(-3) == w.at(3));
  }
}

TEST_CASE("W is odd under a half-period shift, so even harmonics vanish") {
  const ModelParams p = validate_params({2.0, 0.0, 1.4, 1.0});
  const WCoefficients w = w_fourier(p, 20);
  for (int n = 0; n <= 20; n += 2) CHECK(std::abs(w.at(n)) < 1e-15);
  CHECK(std::abs(w.at(1)) > 0.1);
}

TEST_CASE("mapping refuses kicks that reach the tangent pole") {
  CHECK_THROWS_AS(w_fourier(validate_params({4.25, 0.0, 1.4, 1.0}), 8), DomainError);
  CHECK_THROWS_AS(w_fourier(validate_params({0.5, 0.0, 1.4, 0.15}), 8), DomainError);
  CHECK_NOTHROW(w_fourier(validate_params({3.0, 0.0, 1.4, 1.0}), 8));
  CHECK_THROWS_AS(onsite_energy(pi, 0.0), DomainError);
  CHECK(onsite_energy(1.0, 0.4) == doctest::Approx(std::tan(0.3)));
}

TEST_CASE("free-rotor hopping in the momentum basis is Toeplitz") {
  const ModelParams p = validate_params({0.25, 0.0, 1.4, 1.0});
  const int dim = 2 * 40 + 1;
  const Eigen::MatrixXd hop = hopping_matrix(Eigen::MatrixXd::Identity(dim, dim), w_fourier(p, dim));
  CHECK(toeplitz_defect(hop) < 1e-12);
  CHECK((hop - hop.transpose()).cwiseAbs().maxCoeff() < 1e-15);

  // The energy-basis hopping is the same operator rotated by the eigenvectors.
  const UnperturbedSpectrum s = solve_unperturbed(p, make_truncation(40));
  const Eigen::MatrixXd rotated = s.coefficients * hop * s.coefficients.transpose();
  CHECK((hopping_matrix(s, p) - rotated).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Floquet states satisfy the tight-binding equation") {
  const ModelParams p = validate_params({0.25, 5000.0, 1.4, 1.0});
  const UnperturbedSpectrum s = solve_unperturbed(p, make_truncation(200));
  const FloquetDecomposition d = diagonalize_floquet(build_floquet(s, p));
  const TightBindingModel tb(s, p);
  int checked = 0;
  for (int r = 0; r < d.dim() / 2; ++r) {
    if (!d.converged[r]) continue;
    // Truncation-limited: the well eigenfunctions have algebraic momentum
    // tails, so the Cayley form of the truncated W differs slightly from the
    // truncated kick. About 1e-4 at this basis size.
    const ResidualReport rep = residual(tb, d, r);
    CHECK(rep.relative < 5e-4);
    CHECK(rep.reliable);
    ++checked;
  }
  CHECK(checked > 50);

  // A wrong quasi-energy breaks the identity.
  const int r = 10;
  const ResidualReport wrong =
      residual(tb, Eigen::VectorXcd(d.states.row(r).transpose()), -d.quasi_energies[r] + 0.3);
  CHECK(wrong.relative > 1e-2);
}

TEST_CASE("momentum-space path agrees at V0 = 0") {
  const ModelParams p = validate_params({0.25, 0.0, 1.4, 1.0});
  const int l_max = 64;
  const UnperturbedSpectrum s = solve_unperturbed(p, make_truncation(l_max));
  const FloquetDecomposition d = diagonalize_floquet(build_floquet(s, p));
  for (int r = 0; r < 40; ++r) {
    const Eigen::VectorXcd momentum = s.coefficients.transpose() * d.states.row(r).transpose();
    const ResidualReport rep = anderson_residual(p, l_max, momentum, -d.quasi_energies[r]);
    CHECK(rep.relative < 1e-8);
  }
}

TEST_CASE("explicit basis constructor matches the spectrum constructor") {
  const ModelParams p = validate_params({0.5, 50.0, 1.4, 1.0});
  const UnperturbedSpectrum s = solve_unperturbed(p, make_truncation(48));
  const TightBindingModel a(s, p);
  const TightBindingModel b(s.coefficients, s.energies, p);
  CHECK((a.hopping() - b.hopping()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.scaled_energies() - b.scaled_energies()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.dim() == s.dim());
}
