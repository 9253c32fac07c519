#include "kickwell/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kickwell/errors.hpp"
#include "linalg.hpp"

namespace kickwell {

Complex kick_coefficient(const ModelParams& p, long n) {
  const long m = std::labs(n);
  const double z = p.kick() / p.hbar();
  const double j = (z == 0.0) ? (m == 0 ? 1.0 : 0.0)
                              : std::cyl_bessel_j(static_cast<double>(m), z);
  // (-i)^m
  switch (m % 4) {
    case 0: return {j, 0.0};
    case 1: return {0.0, -j};
    case 2: return {-j, 0.0};
    default: return {0.0, j};
  }
}

Eigen::MatrixXcd kick_matrix(const ModelParams& p, const BasisTruncation& t) {
  const int dim = t.dim();
  std::vector<Complex> coef(dim);
  for (int m = 0; m < dim; ++m) coef[m] = kick_coefficient(p, m);
  Eigen::MatrixXcd k(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) k(i, j) = coef[std::abs(i - j)];
  return k;
}

namespace {

double defect_of_columns(const Eigen::MatrixXcd& u, int ncols) {
  if (ncols == 0) return 0.0;
  const Eigen::MatrixXcd g = u.leftCols(ncols).adjoint() * u.leftCols(ncols);
  return (g - Eigen::MatrixXcd::Identity(ncols, ncols)).cwiseAbs().maxCoeff();
}

}  // namespace

FloquetMatrix build_floquet(const UnperturbedSpectrum& spec, const ModelParams& p) {
  spec.require_compatible(p);
  const int dim = spec.dim();
  const int l_max = spec.truncation.l_max;
  FloquetMatrix out{p, Eigen::MatrixXcd::Zero(dim, dim), dim / 2, 0.0, 0.0, false, spec.parities, {}};

  for (int s = 0; s < 2; ++s) {
    const ParitySector& sec = spec.sectors[s];
    const int n = static_cast<int>(sec.energies.size());
    out.sector_states[s] = sec.global_index;

    // The kick symbol is real for even offsets and imaginary for odd ones.
    const Eigen::MatrixXd kre = detail::parity_block<double>(
        [&](long m) { return kick_coefficient(p, m).real(); }, l_max, sec.parity);
    const Eigen::MatrixXd kim = detail::parity_block<double>(
        [&](long m) { return kick_coefficient(p, m).imag(); }, l_max, sec.parity);
    const Eigen::MatrixXd& v = sec.vectors;
    const Eigen::MatrixXd bre = v.transpose() * (kre * v);
    const Eigen::MatrixXd bim = v.transpose() * (kim * v);

    Eigen::MatrixXcd block(n, n);
    for (int i = 0; i < n; ++i) {
      const Complex phase = std::polar(1.0, -sec.energies[i] / p.hbar());
      for (int j = 0; j < n; ++j) block(i, j) = phase * Complex(bre(i, j), bim(i, j));
    }

    // Sector states are in ascending energy, so retained columns form a prefix.
    int kept = 0;
    while (kept < n && sec.global_index[kept] < out.retained) ++kept;
    out.unitarity_defect = std::max(out.unitarity_defect, defect_of_columns(block, kept));
    out.full_defect = std::max(out.full_defect, defect_of_columns(block, n));

    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) out.entries(sec.global_index[i], sec.global_index[j]) = block(i, j);
  }
  out.flagged = out.unitarity_defect > kUnitarityTolerance;
  return out;
}

int FloquetDecomposition::converged_count() const {
  return static_cast<int>(std::count(converged.begin(), converged.end(), true));
}

int tail_start(int dim) { return (9 * dim) / 10 + 1; }

FloquetDecomposition diagonalize_floquet(const FloquetMatrix& u) {
  if (u.flagged) {
    throw UnitarityError("Floquet matrix unitarity defect " + std::to_string(u.unitarity_defect) +
                         " on the retained block exceeds tolerance; increase basis_l_max");
  }
  const int dim = u.dim();
  struct Raw {
    Eigen::VectorXcd state;
    Complex eigenvalue;
    Parity parity;
  };
  std::vector<Raw> raw;
  raw.reserve(dim);

  for (int s = 0; s < 2; ++s) {
    const std::vector<int>& idx = u.sector_states[s];
    const int n = static_cast<int>(idx.size());
    Eigen::MatrixXcd block(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) block(i, j) = u.entries(idx[i], idx[j]);
    Eigen::MatrixXcd z;
    Eigen::VectorXcd w;
    detail::complex_eigen(block, z, w);
    for (int c = 0; c < n; ++c) {
      Eigen::VectorXcd full = Eigen::VectorXcd::Zero(dim);
      for (int i = 0; i < n; ++i) full[idx[i]] = z(i, c);
      raw.push_back({std::move(full), w[c], s == 0 ? Parity::even : Parity::odd});
    }
  }

  const int tail_from = tail_start(dim);
  FloquetDecomposition d;
  d.basis_parities = u.basis_parities;
  std::vector<double> omega(dim);
  std::vector<int> peak(dim);
  for (int r = 0; r < dim; ++r) {
    Eigen::VectorXcd& c = raw[r].state;
    Eigen::Index at = 0;
    c.cwiseAbs2().maxCoeff(&at);
    peak[r] = static_cast<int>(at);
    const double mag = std::abs(c[at]);
    if (mag > 0.0) c *= std::conj(c[at]) / mag;
    c[at] = Complex(std::abs(c[at]), 0.0);
    omega[r] = wrap_angle(std::arg(raw[r].eigenvalue));
  }

  std::vector<int> order(dim);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (peak[a] != peak[b]) return peak[a] < peak[b];
    return omega[a] < omega[b];
  });

  d.quasi_energies.resize(dim);
  d.eigen_moduli.resize(dim);
  d.states.resize(dim, dim);
  d.tail_weight.resize(dim);
  d.parities.resize(dim);
  d.peak_index.resize(dim);
  d.converged.resize(dim);
  for (int r = 0; r < dim; ++r) {
    const Raw& src = raw[order[r]];
    d.states.row(r) = src.state.transpose();
    d.quasi_energies[r] = omega[order[r]];
    d.eigen_moduli[r] = std::abs(src.eigenvalue);
    d.parities[r] = src.parity;
    d.peak_index[r] = peak[order[r]];
    const double tail =
        tail_from < dim ? src.state.tail(dim - tail_from).squaredNorm() : 0.0;
    d.tail_weight[r] = tail;
    d.converged[r] = tail <= kTailWeightTolerance;
  }
  return d;
}

EvolvedState basis_state(int dim, int n) {
  if (n < 0 || n >= dim) throw ParameterError("basis index out of range");
  EvolvedState s{Eigen::VectorXcd::Zero(dim), 0};
  s.amplitudes[n] = 1.0;
  return s;
}

std::vector<EvolvedState> evolve(const EvolvedState& start, const FloquetMatrix& u, int steps) {
  if (steps < 0) throw ParameterError("steps must be >= 0");
  if (start.amplitudes.size() != u.dim()) throw ParameterError("state dimension mismatch");
  if (std::abs(start.amplitudes.squaredNorm() - 1.0) > 1e-10) {
    throw ParameterError("initial state is not normalised");
  }
  std::vector<EvolvedState> out;
  out.reserve(steps + 1);
  out.push_back(start);
  for (int t = 0; t < steps; ++t) {
    const EvolvedState& prev = out.back();
    out.push_back({u.entries * prev.amplitudes, prev.time + 1});
  }
  return out;
}

double mean_energy(const EvolvedState& s, const UnperturbedSpectrum& spec) {
  if (s.amplitudes.size() != spec.dim()) throw ParameterError("state dimension mismatch");
  return s.amplitudes.cwiseAbs2().dot(spec.energies);
}

}  // namespace kickwell
