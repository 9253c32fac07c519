#pragma once

#include <Eigen/Dense>
#include <vector>

#include "kickwell/basis.hpp"
#include "kickwell/floquet.hpp"
#include "kickwell/model.hpp"

namespace kickwell {

// Distance of a tangent argument from its pole, |cos(arg)|, below which a
// value is treated as singular.
inline constexpr double kPoleGuard = 1e-6;

// W(theta) = -tan(k cos(theta) / (2 hbar)); DomainError near a pole.
double w_theta(const ModelParams& p, double theta);

// Fourier coefficients W_n = (1/2pi) integral W(theta) e^{-i n theta}. W is
// real and even, so W_{-n} = W_n and the list stores n = 0..n_max.
struct WCoefficients {
  std::vector<double> values;
  int grid_points = 0;  // periodic trapezoid nodes used

  double at(long n) const { return values.at(static_cast<std::size_t>(n < 0 ? -n : n)); }
};

// Periodic trapezoid rule with doubling until successive grids agree.
// DomainError when k/hbar >= pi - kPoleGuard.
WCoefficients w_fourier(const ModelParams& p, int n_max);

// tan((omega - energy) / 2); DomainError near a pole.
double onsite_energy(double omega, double energy);

// Hopping matrix in an arbitrary orthonormal basis: rows of `basis` are
// momentum-space vectors over l = -l_max..l_max.
Eigen::MatrixXd hopping_matrix(const Eigen::MatrixXd& basis, const WCoefficients& w);
// Hopping matrix over the unperturbed energy basis.
Eigen::MatrixXd hopping_matrix(const UnperturbedSpectrum& spec, const ModelParams& p);

// The tight-binding equation T u + W u = 0 for a fixed model; the factor of
// (1 - i W) is computed once and shared by every state.
class TightBindingModel {
 public:
  // Energy basis of the unperturbed spectrum.
  TightBindingModel(const UnperturbedSpectrum& spec, const ModelParams& p);
  // Explicit basis (rows in momentum space) with the matching energies.
  TightBindingModel(const Eigen::MatrixXd& basis, const Eigen::VectorXd& energies,
                    const ModelParams& p);

  const Eigen::MatrixXd& hopping() const { return hopping_; }
  const WCoefficients& w_coeffs() const { return coeffs_; }
  const Eigen::VectorXd& scaled_energies() const { return scaled_energies_; }
  int dim() const { return static_cast<int>(hopping_.rows()); }

  // u = (1 - i W)^{-1} c for a Floquet state c over this model's basis.
  Eigen::VectorXcd reduced_amplitudes(const Eigen::VectorXcd& c) const;

 private:
  void factor();

  WCoefficients coeffs_;
  Eigen::MatrixXd hopping_;
  Eigen::VectorXd scaled_energies_;  // E_m / hbar
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
};

struct TightBindingSystem {
  double quasi_energy = 0.0;  // omega in the exp(-i omega) eigenvalue convention
  Eigen::VectorXd onsite;     // T_m, 0 at excluded sites
  std::vector<bool> excluded; // sites within the pole guard
};

TightBindingSystem tight_binding_at(const TightBindingModel& tb, double quasi_energy);

struct ResidualReport {
  double relative = 0.0;  // max |T u + W u| over kept sites / max |u|
  int excluded_sites = 0;
  double excluded_fraction = 0.0;
  bool reliable = true;   // false when more than 5% of sites are excluded
  Eigen::VectorXcd reduced;   // u
  Eigen::VectorXcd residual;  // T u + W u, zero at excluded sites
};

// Residual for coefficients c at quasi-energy omega (exp(-i omega) convention).
ResidualReport residual(const TightBindingModel& tb, const Eigen::VectorXcd& c, double omega);

// Residual of Floquet state r. The decomposition stores eigenvalues as
// exp(i omega_r), so the tight-binding quasi-energy is -omega_r.
ResidualReport residual(const TightBindingModel& tb, const FloquetDecomposition& d, int r);

// Kicked-rotor limit built directly in the momentum basis: Toeplitz hopping
// W_{l-l'} and on-site energies from hbar l^2 / 2. `c` is over l = -l_max..l_max.
ResidualReport anderson_residual(const ModelParams& p, int l_max, const Eigen::VectorXcd& c,
                                 double omega);

// Largest |M(i,j) - M(i+1,j+1)|.
double toeplitz_defect(const Eigen::MatrixXd& m);

}  // namespace kickwell
