#include "kickwell/tightbinding.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "kickwell/errors.hpp"
#include "linalg.hpp"

namespace kickwell {

namespace {

void require_regular(const ModelParams& p) {
  if (p.kick() / p.hbar() >= std::numbers::pi - kPoleGuard) {
    std::ostringstream os;
    os << "tight-binding mapping is singular for k/hbar_s = " << p.kick() / p.hbar()
       << " >= pi";
    throw DomainError(os.str());
  }
}

Eigen::MatrixXd toeplitz(const WCoefficients& w, int dim) {
  Eigen::MatrixXd t(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) t(i, j) = w.at(i - j);
  return t;
}

ResidualReport finish(const Eigen::VectorXcd& u, const Eigen::MatrixXd& hopping,
                      const Eigen::VectorXd& scaled_energies, double omega) {
  const int dim = static_cast<int>(u.size());
  ResidualReport rep;
  rep.reduced = u;
  rep.residual = hopping * u;
  for (int m = 0; m < dim; ++m) {
    const double arg = 0.5 * (omega - scaled_energies[m]);
    if (std::abs(std::cos(arg)) < kPoleGuard) {
      rep.residual[m] = 0.0;
      ++rep.excluded_sites;
      continue;
    }
    rep.residual[m] += std::tan(arg) * u[m];
  }
  const double unorm = u.cwiseAbs().maxCoeff();
  rep.relative = unorm > 0.0 ? rep.residual.cwiseAbs().maxCoeff() / unorm : 0.0;
  rep.excluded_fraction = static_cast<double>(rep.excluded_sites) / dim;
  rep.reliable = rep.excluded_fraction <= 0.05;
  return rep;
}

}  // namespace

double w_theta(const ModelParams& p, double theta) {
  const double arg = 0.5 * p.kick() * std::cos(theta) / p.hbar();
  if (std::abs(std::cos(arg)) < kPoleGuard) {
    throw DomainError("W(theta) evaluated within the pole guard");
  }
  return -std::tan(arg);
}

WCoefficients w_fourier(const ModelParams& p, int n_max) {
  if (n_max < 0) throw ParameterError("coefficient count must be >= 0");
  require_regular(p);
  auto on_grid = [&](int m) {
    std::vector<double> samples(m);
    for (int j = 0; j < m; ++j) samples[j] = w_theta(p, 2.0 * std::numbers::pi * j / m);
    std::vector<double> c(n_max + 1, 0.0);
    for (int n = 0; n <= n_max; ++n) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) {
        // n*j reduced mod m keeps the cosine argument small and exact
        const long nj = (static_cast<long>(n) * j) % m;
        s += samples[j] * std::cos(2.0 * std::numbers::pi * static_cast<double>(nj) / m);
      }
      c[n] = s / m;
    }
    return c;
  };
  int m = 64;
  while (m < 4 * (n_max + 1)) m *= 2;
  std::vector<double> prev = on_grid(m);
  for (int tries = 0; tries < 12; ++tries) {
    std::vector<double> next = on_grid(2 * m);
    double diff = 0.0;
    for (int n = 0; n <= n_max; ++n) diff = std::max(diff, std::abs(next[n] - prev[n]));
    m *= 2;
    if (diff < 1e-14) return {std::move(next), m};
    prev = std::move(next);
  }
  throw ConvergenceError("W(theta) quadrature did not converge");
}

double onsite_energy(double omega, double energy) {
  const double arg = 0.5 * (omega - energy);
  if (std::abs(std::cos(arg)) < kPoleGuard) {
    throw DomainError("on-site energy within the pole guard");
  }
  return std::tan(arg);
}

Eigen::MatrixXd hopping_matrix(const Eigen::MatrixXd& basis, const WCoefficients& w) {
  const int dim = static_cast<int>(basis.cols());
  if (static_cast<int>(w.values.size()) < dim) {
    throw ParameterError("need W_n up to n = dim - 1 for the hopping matrix");
  }
  return basis * toeplitz(w, dim) * basis.transpose();
}

namespace {

Eigen::MatrixXd sector_hopping(const UnperturbedSpectrum& spec, const WCoefficients& w) {
  const int dim = spec.dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
  for (const ParitySector& sec : spec.sectors) {
    const Eigen::MatrixXd block = detail::parity_block<double>(
        [&](long n) { return w.at(n); }, spec.truncation.l_max, sec.parity);
    const Eigen::MatrixXd rotated = sec.vectors.transpose() * block * sec.vectors;
    const int n = static_cast<int>(sec.global_index.size());
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) out(sec.global_index[i], sec.global_index[j]) = rotated(i, j);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd hopping_matrix(const UnperturbedSpectrum& spec, const ModelParams& p) {
  spec.require_compatible(p);
  return sector_hopping(spec, w_fourier(p, 2 * spec.truncation.l_max));
}

TightBindingModel::TightBindingModel(const UnperturbedSpectrum& spec, const ModelParams& p) {
  spec.require_compatible(p);
  coeffs_ = w_fourier(p, 2 * spec.truncation.l_max);
  hopping_ = sector_hopping(spec, coeffs_);
  scaled_energies_ = spec.energies / p.hbar();
  factor();
}

TightBindingModel::TightBindingModel(const Eigen::MatrixXd& basis,
                                     const Eigen::VectorXd& energies, const ModelParams& p) {
  if (basis.rows() != basis.cols() || basis.rows() != energies.size() || basis.cols() % 2 == 0) {
    throw ParameterError("basis must be square with odd size matching the energies");
  }
  coeffs_ = w_fourier(p, static_cast<int>(basis.cols()) - 1);
  hopping_ = hopping_matrix(basis, coeffs_);
  scaled_energies_ = energies / p.hbar();
  factor();
}

void TightBindingModel::factor() {
  const int dim = static_cast<int>(hopping_.rows());
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(dim, dim);
  a -= Complex(0.0, 1.0) * hopping_.cast<Complex>();
  lu_.compute(a);
}

Eigen::VectorXcd TightBindingModel::reduced_amplitudes(const Eigen::VectorXcd& c) const {
  if (c.size() != dim()) throw ParameterError("state dimension mismatch");
  return lu_.solve(c);
}

TightBindingSystem tight_binding_at(const TightBindingModel& tb, double quasi_energy) {
  TightBindingSystem s;
  s.quasi_energy = quasi_energy;
  const int dim = tb.dim();
  s.onsite = Eigen::VectorXd::Zero(dim);
  s.excluded.assign(dim, false);
  for (int m = 0; m < dim; ++m) {
    const double arg = 0.5 * (quasi_energy - tb.scaled_energies()[m]);
    if (std::abs(std::cos(arg)) < kPoleGuard) {
      s.excluded[m] = true;
    } else {
      s.onsite[m] = std::tan(arg);
    }
  }
  return s;
}

ResidualReport residual(const TightBindingModel& tb, const Eigen::VectorXcd& c, double omega) {
  return finish(tb.reduced_amplitudes(c), tb.hopping(), tb.scaled_energies(), omega);
}

ResidualReport residual(const TightBindingModel& tb, const FloquetDecomposition& d, int r) {
  if (r < 0 || r >= d.dim()) throw ParameterError("state index out of range");
  const Eigen::VectorXcd c = d.states.row(r).transpose();
  return residual(tb, c, -d.quasi_energies[r]);
}

ResidualReport anderson_residual(const ModelParams& p, int l_max, const Eigen::VectorXcd& c,
                                 double omega) {
  const int dim = 2 * l_max + 1;
  if (c.size() != dim) throw ParameterError("state dimension mismatch");
  const WCoefficients w = w_fourier(p, dim - 1);
  const Eigen::MatrixXd hop = toeplitz(w, dim);
  Eigen::VectorXd scaled(dim);
  for (int i = 0; i < dim; ++i) {
    const double l = i - l_max;
    scaled[i] = 0.5 * p.hbar() * l * l;
  }
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(dim, dim);
  a -= Complex(0.0, 1.0) * hop.cast<Complex>();
  const Eigen::VectorXcd u = a.partialPivLu().solve(c);
  return finish(u, hop, scaled, omega);
}

double toeplitz_defect(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  if (n < 2) return 0.0;
  return (m.topLeftCorner(n - 1, n - 1) - m.bottomRightCorner(n - 1, n - 1)).cwiseAbs().maxCoeff();
}

}  // namespace kickwell
