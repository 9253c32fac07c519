#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kickwell/basis.hpp"
#include "kickwell/floquet.hpp"

namespace kickwell {

enum class ProfileSide { positive, negative, symmetrized };
// amplitude averages |c_v|, probability averages |c_v|^2.
enum class ProfileWeight { amplitude, probability };

const char* to_string(ProfileSide s);
const char* to_string(ProfileWeight w);

struct ProfileOptions {
  ProfileSide side = ProfileSide::symmetrized;
  ProfileWeight weight = ProfileWeight::amplitude;
  // Skip basis states whose parity differs from the Floquet state's; those
  // components vanish by symmetry and would only dilute the average.
  bool parity_masked = true;
};

struct DecayProfile {
  std::vector<int> offsets;       // v >= 0; for the negative side, density is taken at -v
  std::vector<double> density;
  std::vector<int> contributors;  // states averaged at each offset
  int count = 0;                  // states averaged overall
  ProfileSide side = ProfileSide::symmetrized;
  ProfileWeight weight = ProfileWeight::amplitude;
};

// Shifts each selected state by its peak index, v = n - n_max, and averages
// pointwise, dividing by the per-offset contributor count.
DecayProfile shift_and_average(const FloquetDecomposition& d, std::span<const int> states,
                               const ProfileOptions& opt = {});
DecayProfile shift_and_average(const FloquetDecomposition& d,
                               const std::function<bool(int)>& filter,
                               const ProfileOptions& opt = {});

enum class FitKind { exponential, powerlaw };
const char* to_string(FitKind k);

struct FitWindow {
  int lo = 1;
  int hi = 0;
};

struct FitResult {
  FitKind kind = FitKind::exponential;
  double parameter = std::numeric_limits<double>::infinity();  // l or gamma
  FitWindow window;
  double quality = 0.0;  // R^2 on the fit scale
  bool decays = false;   // false when the fitted slope is >= 0
  int points = 0;        // regression points actually used
};

struct FitOptions {
  int min_contributors = 10;
  double min_contributor_fraction = 0.1;
  // Densities at or below this count as zero; negative picks a default for
  // the profile weight (1e-13 amplitude, 1e-26 probability).
  double floor = -1.0;
  // Power-law fits regress geometric bin means; 0 regresses raw points.
  int bins_per_decade = 10;
};

// Offsets of the profile with enough contributors to enter a fit.
std::vector<int> eligible_offsets(const DecayProfile& prof, const FitOptions& opt = {});

FitResult fit_exponential(const DecayProfile& prof, FitWindow window, const FitOptions& opt = {});
FitResult fit_powerlaw(const DecayProfile& prof, FitWindow window, const FitOptions& opt = {});

// Exponential over [1, ceil(3 l)], with l from a first pass over [1, 30].
FitResult fit_exponential_auto(const DecayProfile& prof, const FitOptions& opt = {});
// Power law over the last two available decades.
FitResult fit_powerlaw_auto(const DecayProfile& prof, const FitOptions& opt = {});

struct CrossoverOptions {
  double floor = 1e-13;
  int min_segment = 5;
  double min_quality = 0.9;
};

struct Crossover {
  int breakpoint = 0;         // n_c
  int breakpoint_lo = 0;      // breakpoints whose total residual is within 10% of the best
  int breakpoint_hi = 0;
  double head_quality = 0.0;
  double tail_quality = 0.0;
  double head_length = 0.0;   // exponential decay length of the head
  double tail_exponent = 0.0; // power-law exponent of the tail
};

// Two-segment fit: exponential head from the curve maximum up to the
// breakpoint, power-law tail from the breakpoint on. Returns nothing unless
// both segments reach min_quality and each is better described by its own
// law than by the other one.
std::optional<Crossover> detect_crossover(std::span<const int> offsets,
                                          std::span<const double> values,
                                          const CrossoverOptions& opt = {});

struct MatrixDecayCurve {
  std::vector<int> offsets;   // m = 1 .. retained/2
  std::vector<double> values; // M_m
  std::vector<int> pairs;     // (n, n+m) pairs averaged
  std::optional<Crossover> crossover;
};

// M_m = mean over n of |U_{n,n+m}| inside the retained block. With
// parity_masked, only pairs of equal basis parity are averaged.
MatrixDecayCurve matrix_element_decay(const FloquetMatrix& u, bool parity_masked = true,
                                      const CrossoverOptions& opt = {});

enum class MuRegime { below, intermediate, far_above, undefined };
const char* to_string(MuRegime r);

struct MuRecord {
  int state = 0;
  int peak_index = 0;
  double e_max = 0.0;
  double mu = 0.0;  // NaN when V0 = 0
  MuRegime regime = MuRegime::undefined;
};

inline constexpr double kDefaultMuHigh = 10.0;

std::vector<MuRecord> classify_mu(const FloquetDecomposition& d, const UnperturbedSpectrum& spec,
                                  const ModelParams& p, double mu_hi = kDefaultMuHigh);

// P_r = sum_n |c_rn|^4.
std::vector<double> participation_ratio(const FloquetDecomposition& d);

struct PrStep {
  double transition_energy = 0.0;
  double mean_below = 0.0;   // mean P over mu <= 1
  double mean_above = 0.0;   // mean P over mu > 1
  double level = 0.0;        // midpoint used to locate the step
  int window = 0;
  int states = 0;
};

inline constexpr int kDefaultPrWindow = 9;

// Sorts the selected states by E_max, smooths P with a sliding mean of
// `window` states and returns where the smoothed curve last falls through
// the midpoint between the two regime means.
PrStep locate_pr_step(const std::vector<MuRecord>& records, std::span<const double> pr,
                      const std::vector<bool>& selected, int window = kDefaultPrWindow);

}  // namespace kickwell
