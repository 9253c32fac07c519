#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kickwell/floquet.hpp"
#include "kickwell/model.hpp"

namespace kickwell {

inline constexpr int kMinLevels = 50;

struct SpacingStats {
  std::vector<double> spacings;  // ascending, unit mean
  int source_count = 0;          // eigenphases used
  Parity parity_class = Parity::even;
  double raw_mean = 0.0;         // mean circular gap before normalisation
  std::string selection;         // description of the state filter
};

// Circular nearest-neighbour spacings of phases in [0, 2pi), including the
// wrap-around gap, normalised to unit mean. InsufficientDataError below
// kMinLevels phases.
SpacingStats spacings_from_phases(std::vector<double> phases, Parity parity,
                                  std::string selection = "all");

SpacingStats extract_spacings(const FloquetDecomposition& d, Parity parity,
                              const std::function<bool(int)>& filter,
                              std::string selection = "custom");

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_survival(double lambda);

// One-sample Kolmogorov-Smirnov test with Stephens' finite-n correction.
KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf);

KsResult ks_poisson(const SpacingStats& s);

// Unit-mean Brody density (1+a) b S^a exp(-b S^{1+a}), b = Gamma((2+a)/(1+a))^{1+a}.
double brody_scale(double alpha);
double brody_pdf(double s, double alpha);
double brody_cdf(double s, double alpha);

struct BrodyFit {
  double alpha = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;   // 95% Wald interval clipped to [0, 1]
  double ci_high = 1.0;
  double log_likelihood = 0.0;
  KsResult ks;           // sample against the fitted distribution
  int iterations = 0;
};

// Maximum-likelihood alpha in [0, 1]. InsufficientDataError below
// kMinLevels spacings, ConvergenceError if the optimiser stalls.
BrodyFit brody_fit(const SpacingStats& s);

struct Histogram {
  std::vector<double> edges;    // bins + 1 edges over [0, S_max]
  std::vector<double> density;  // unit area
  std::vector<int> counts;
};

Histogram spacing_histogram(const SpacingStats& s, int bins);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

// Pearson test of phases against the uniform density on [0, 2pi).
ChiSquareResult chi_square_uniform(std::span<const double> phases, int bins);

// Pearson test of a histogram against a distribution; the last bin absorbs
// the tail beyond S_max.
ChiSquareResult chi_square_against(const Histogram& h, const std::function<double(double)>& cdf);

}  // namespace kickwell
