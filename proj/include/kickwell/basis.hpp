#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "kickwell/model.hpp"

namespace kickwell {

struct BasisTruncation {
  int l_max = 0;

  int dim() const { return 2 * l_max + 1; }
  // Momentum l lives at column l + l_max of a coefficient row.
  int column(int l) const { return l + l_max; }
};

// Throws ParameterError for l_max < 1.
BasisTruncation make_truncation(int l_max);

// Production runs need dim >= 64; small bases are only for tests.
void require_production_size(const BasisTruncation& t);

// H0 restricted to one reflection-parity sector. The sector basis is
// |0>, (|l> + |-l>)/sqrt2 for even and (|l> - |-l>)/sqrt2 for odd, l >= 1.
struct ParitySector {
  Parity parity = Parity::even;
  std::vector<int> momenta;      // l value of each sector basis vector
  Eigen::VectorXd energies;      // ascending
  Eigen::MatrixXd vectors;       // column i: eigenvector i over the sector basis
  std::vector<int> global_index; // position of sector state i in the merged spectrum
};

struct UnperturbedSpectrum {
  double depth = 0.0;
  double barrier_over_pi = 0.0;
  double hbar = 1.0;
  BasisTruncation truncation;
  Eigen::VectorXd energies;       // ascending over both parities
  Eigen::MatrixXd coefficients;   // row n holds a_nl, real for the pi-centred barrier
  std::vector<Parity> parities;
  std::vector<int> sector_position;  // index of state n inside its parity sector
  std::array<ParitySector, 2> sectors;
  std::string params_hash;

  int dim() const { return truncation.dim(); }
  const ParitySector& sector(Parity p) const { return sectors[p == Parity::even ? 0 : 1]; }
  // Throws ParameterError when the model disagrees with the stored V0, b or hbar.
  void require_compatible(const ModelParams& p) const;
};

// Dense H0 in the momentum basis, rows and columns ordered l = -l_max..l_max.
Eigen::MatrixXcd build_h0_matrix(const ModelParams& p, const BasisTruncation& t);

UnperturbedSpectrum solve_unperturbed(const ModelParams& p, const BasisTruncation& t);

// Builds the merged spectrum from solved parity sectors (parity, momenta,
// energies and vectors set). Used by the solver and by the spectrum cache.
UnperturbedSpectrum assemble_spectrum(const ModelParams& p, const BasisTruncation& t,
                                      std::array<ParitySector, 2> sectors);

// Reflection parity of a momentum-space row (a_l <-> a_{-l}).
// DomainError if the barrier is not centred on pi or the row mixes parities.
Parity classify_parity(const Eigen::Ref<const Eigen::VectorXcd>& row, const PotentialSpec& spec,
                       double tol = 1e-8);
Parity classify_parity(const Eigen::Ref<const Eigen::VectorXd>& row, const PotentialSpec& spec,
                       double tol = 1e-8);

std::string spectrum_hash(const ModelParams& p, const BasisTruncation& t);

struct ConvergenceReport {
  int checked = 0;          // dim/2 lowest eigenvalues compared
  int converged_prefix = 0; // leading eigenvalues all within tolerance
  int converged_total = 0;
  double max_relative_change = 0.0;
  std::vector<double> relative_change;
};

// Compares the lowest dim/2 eigenvalues against a run with l_max doubled.
// Relative change is |dE| / max(|E|, hbar^2/2).
ConvergenceReport check_convergence(const ModelParams& p, const BasisTruncation& t,
                                    double rel_tol = 1e-8);
ConvergenceReport check_convergence(const UnperturbedSpectrum& base,
                                    const UnperturbedSpectrum& doubled, double rel_tol = 1e-8);

}  // namespace kickwell
