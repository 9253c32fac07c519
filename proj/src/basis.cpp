#include "kickwell/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kickwell/digest.hpp"
#include "kickwell/errors.hpp"
#include "linalg.hpp"

namespace kickwell {

BasisTruncation make_truncation(int l_max) {
  if (l_max < 1) throw ParameterError("basis_l_max must be >= 1");
  return BasisTruncation{l_max};
}

void require_production_size(const BasisTruncation& t) {
  if (t.dim() < 64) {
    throw ParameterError("basis dimension " + std::to_string(t.dim()) +
                         " below the production floor of 64 (basis_l_max >= 32)");
  }
}

void UnperturbedSpectrum::require_compatible(const ModelParams& p) const {
  if (p.depth() != depth || p.barrier_over_pi() != barrier_over_pi || p.hbar() != hbar) {
    throw ParameterError("spectrum was computed for different V0, b or hbar_s");
  }
}

Eigen::MatrixXcd build_h0_matrix(const ModelParams& p, const BasisTruncation& t) {
  const int dim = t.dim();
  const double h2 = p.hbar() * p.hbar();
  Eigen::MatrixXcd h(dim, dim);
  for (int j = 0; j < dim; ++j) {
    const int lj = j - t.l_max;
    h(j, j) = Complex(0.5 * h2 * lj * lj, 0.0) + square_well_fourier(p, 0);
    for (int i = j + 1; i < dim; ++i) {
      const Complex c = square_well_fourier(p, i - j);
      h(i, j) = c;
      h(j, i) = std::conj(c);
    }
  }
  return h;
}

namespace {

ParitySector solve_sector(const ModelParams& p, int l_max, Parity parity) {
  ParitySector s;
  s.parity = parity;
  const int n = detail::sector_size(l_max, parity);
  s.momenta.resize(n);
  for (int j = 0; j < n; ++j) s.momenta[j] = detail::sector_momentum(j, parity);

  Eigen::MatrixXd h = detail::parity_block<double>(
      [&](long m) { return square_well_fourier_real(p, m); }, l_max, parity);
  const double h2 = p.hbar() * p.hbar();
  for (int j = 0; j < n; ++j) h(j, j) += 0.5 * h2 * s.momenta[j] * s.momenta[j];

  detail::symmetric_eigen(h, s.energies);
  // Largest component positive; ties go to the lowest momentum.
  for (int c = 0; c < n; ++c) {
    Eigen::Index at = 0;
    h.col(c).cwiseAbs().maxCoeff(&at);
    if (h(at, c) < 0.0) h.col(c) = -h.col(c);
  }
  s.vectors = std::move(h);
  return s;
}

}  // namespace

UnperturbedSpectrum solve_unperturbed(const ModelParams& p, const BasisTruncation& t) {
  if (t.l_max < 1) throw ParameterError("basis_l_max must be >= 1");
  return assemble_spectrum(p, t,
                           {solve_sector(p, t.l_max, Parity::even),
                            solve_sector(p, t.l_max, Parity::odd)});
}

UnperturbedSpectrum assemble_spectrum(const ModelParams& p, const BasisTruncation& t,
                                      std::array<ParitySector, 2> sectors) {
  for (int s = 0; s < 2; ++s) {
    const Parity want = s == 0 ? Parity::even : Parity::odd;
    const int n = detail::sector_size(t.l_max, want);
    const ParitySector& sec = sectors[s];
    if (sec.parity != want || static_cast<int>(sec.momenta.size()) != n ||
        sec.energies.size() != n || sec.vectors.rows() != n || sec.vectors.cols() != n) {
      throw ParameterError("parity sector does not match the truncation");
    }
  }
  UnperturbedSpectrum out;
  out.depth = p.depth();
  out.barrier_over_pi = p.barrier_over_pi();
  out.hbar = p.hbar();
  out.truncation = t;
  out.params_hash = spectrum_hash(p, t);
  out.sectors = std::move(sectors);

  struct Slot {
    double energy;
    int sector;
    int pos;
  };
  std::vector<Slot> slots;
  const int dim = t.dim();
  slots.reserve(dim);
  for (int s = 0; s < 2; ++s) {
    for (int i = 0; i < out.sectors[s].energies.size(); ++i) {
      slots.push_back({out.sectors[s].energies[i], s, i});
    }
  }
  std::stable_sort(slots.begin(), slots.end(),
                   [](const Slot& a, const Slot& b) { return a.energy < b.energy; });

  out.energies.resize(dim);
  out.coefficients = Eigen::MatrixXd::Zero(dim, dim);
  out.parities.resize(dim);
  out.sector_position.resize(dim);
  for (int s = 0; s < 2; ++s) out.sectors[s].global_index.assign(out.sectors[s].energies.size(), 0);

  const double r = 1.0 / std::numbers::sqrt2;
  for (int n = 0; n < dim; ++n) {
    const Slot& sl = slots[n];
    ParitySector& sec = out.sectors[sl.sector];
    sec.global_index[sl.pos] = n;
    out.energies[n] = sl.energy;
    out.parities[n] = sec.parity;
    out.sector_position[n] = sl.pos;
    const double sign = sec.parity == Parity::even ? 1.0 : -1.0;
    for (int j = 0; j < static_cast<int>(sec.momenta.size()); ++j) {
      const int l = sec.momenta[j];
      const double v = sec.vectors(j, sl.pos);
      if (l == 0) {
        out.coefficients(n, t.column(0)) = v;
      } else {
        out.coefficients(n, t.column(l)) = r * v;
        out.coefficients(n, t.column(-l)) = sign * r * v;
      }
    }
  }
  return out;
}

Parity classify_parity(const Eigen::Ref<const Eigen::VectorXcd>& row, const PotentialSpec& spec,
                       double tol) {
  if (!spec.symmetric_about_pi()) {
    throw DomainError("parity undefined: barrier is not centred on pi");
  }
  const Eigen::VectorXcd reflected = row.reverse();
  const double norm = row.norm();
  if (norm == 0.0) throw DomainError("parity undefined for the zero vector");
  const double odd_part = (row - reflected).norm() / (2.0 * norm);
  const double even_part = (row + reflected).norm() / (2.0 * norm);
  if (odd_part <= tol) return Parity::even;
  if (even_part <= tol) return Parity::odd;
  std::ostringstream os;
  os << "mixed parity state (even weight " << even_part << ", odd weight " << odd_part << ")";
  throw DomainError(os.str());
}

Parity classify_parity(const Eigen::Ref<const Eigen::VectorXd>& row, const PotentialSpec& spec,
                       double tol) {
  const Eigen::VectorXcd c = row.cast<Complex>();
  return classify_parity(c, spec, tol);
}

std::string spectrum_hash(const ModelParams& p, const BasisTruncation& t) {
  std::ostringstream os;
  os << "kickwell-spectrum-v1;V0=" << exact_double(p.depth())
     << ";b_over_pi=" << exact_double(p.barrier_over_pi()) << ";hbar=" << exact_double(p.hbar())
     << ";l_max=" << t.l_max;
  return sha256_hex(os.str());
}

ConvergenceReport check_convergence(const UnperturbedSpectrum& base,
                                    const UnperturbedSpectrum& doubled, double rel_tol) {
  if (doubled.dim() < base.dim()) {
    throw ParameterError("convergence reference must use a larger basis");
  }
  ConvergenceReport rep;
  rep.checked = base.dim() / 2;
  const double floor = 0.5 * base.hbar * base.hbar;
  rep.relative_change.resize(rep.checked);
  bool prefix = true;
  for (int n = 0; n < rep.checked; ++n) {
    const double ref = doubled.energies[n];
    const double rel = std::abs(base.energies[n] - ref) / std::max(std::abs(ref), floor);
    rep.relative_change[n] = rel;
    rep.max_relative_change = std::max(rep.max_relative_change, rel);
    const bool ok = rel < rel_tol;
    rep.converged_total += ok ? 1 : 0;
    prefix = prefix && ok;
    if (prefix) rep.converged_prefix = n + 1;
  }
  return rep;
}

ConvergenceReport check_convergence(const ModelParams& p, const BasisTruncation& t,
                                    double rel_tol) {
  const UnperturbedSpectrum base = solve_unperturbed(p, t);
  const UnperturbedSpectrum doubled = solve_unperturbed(p, make_truncation(2 * t.l_max));
  return check_convergence(base, doubled, rel_tol);
}

}  // namespace kickwell
