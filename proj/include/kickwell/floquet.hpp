#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "kickwell/basis.hpp"
#include "kickwell/model.hpp"

namespace kickwell {

// Builds above this defect on the retained block are flagged and refused by
// diagonalize_floquet.
inline constexpr double kUnitarityTolerance = 1e-6;

// Coefficient of plane wave e^{i n theta} in exp(-i (k/hbar) cos theta).
Complex kick_coefficient(const ModelParams& p, long n);

// exp(-i (k/hbar) cos theta) in the momentum basis, ordered l = -l_max..l_max.
Eigen::MatrixXcd kick_matrix(const ModelParams& p, const BasisTruncation& t);

struct FloquetMatrix {
  ModelParams params;
  Eigen::MatrixXcd entries;          // U_nm over the unperturbed energy basis
  int retained = 0;                  // leading basis states certified by the defect check
  double unitarity_defect = 0.0;     // max |U^H U - I| over retained columns
  double full_defect = 0.0;          // same over all columns (truncation-dominated)
  bool flagged = false;
  std::vector<Parity> basis_parities;
  std::array<std::vector<int>, 2> sector_states;  // global indices, even then odd

  int dim() const { return static_cast<int>(entries.rows()); }
};

FloquetMatrix build_floquet(const UnperturbedSpectrum& spec, const ModelParams& p);

struct FloquetDecomposition {
  Eigen::VectorXd quasi_energies;   // omega_r in [0, 2pi), eigenvalue exp(i omega_r)
  Eigen::VectorXd eigen_moduli;     // |eigenvalue|
  Eigen::MatrixXcd states;          // row r holds c_rn
  std::vector<Parity> parities;
  std::vector<int> peak_index;      // n_max = argmax_n |c_rn|
  Eigen::VectorXd tail_weight;      // sum of |c_rn|^2 over the top 10% of the basis
  std::vector<bool> converged;
  std::vector<Parity> basis_parities;

  int dim() const { return static_cast<int>(states.rows()); }
  int converged_count() const;
};

// Tail weight above which a Floquet state counts as truncation-contaminated.
inline constexpr double kTailWeightTolerance = 1e-8;

// First basis index counted in the tail weight (n > 0.9 dim).
int tail_start(int dim);

// States are ordered by peak basis index, then by quasi-energy.
FloquetDecomposition diagonalize_floquet(const FloquetMatrix& u);

struct EvolvedState {
  Eigen::VectorXcd amplitudes;
  long time = 0;
};

EvolvedState basis_state(int dim, int n);

// Returns the states at times t0, t0+1, ..., t0+steps.
std::vector<EvolvedState> evolve(const EvolvedState& start, const FloquetMatrix& u, int steps);

double mean_energy(const EvolvedState& s, const UnperturbedSpectrum& spec);

}  // namespace kickwell
