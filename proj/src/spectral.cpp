#include "kickwell/spectral.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "kickwell/errors.hpp"

namespace kickwell {

SpacingStats spacings_from_phases(std::vector<double> phases, Parity parity,
                                  std::string selection) {
  const int n = static_cast<int>(phases.size());
  if (n < kMinLevels) {
    throw InsufficientDataError("spacing analysis needs at least " + std::to_string(kMinLevels) +
                                " levels, got " + std::to_string(n));
  }
  for (double& p : phases) p = wrap_angle(p);
  std::sort(phases.begin(), phases.end());
  SpacingStats s;
  s.source_count = n;
  s.parity_class = parity;
  s.selection = std::move(selection);
  s.spacings.resize(n);
  for (int i = 0; i + 1 < n; ++i) s.spacings[i] = phases[i + 1] - phases[i];
  s.spacings[n - 1] = phases[0] + 2.0 * std::numbers::pi - phases[n - 1];
  const double mean = std::accumulate(s.spacings.begin(), s.spacings.end(), 0.0) / n;
  if (!(mean > 0.0)) throw DomainError("all phases coincide");
  s.raw_mean = mean;
  for (double& x : s.spacings) x /= mean;
  std::sort(s.spacings.begin(), s.spacings.end());
  return s;
}

SpacingStats extract_spacings(const FloquetDecomposition& d, Parity parity,
                              const std::function<bool(int)>& filter, std::string selection) {
  std::vector<double> phases;
  for (int r = 0; r < d.dim(); ++r)
    if (d.parities[r] == parity && filter(r)) phases.push_back(d.quasi_energies[r]);
  return spacings_from_phases(std::move(phases), parity, std::move(selection));
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.0) {
    // Small-lambda form converges faster: 1 - sqrt(2pi)/lambda sum exp(-(2j-1)^2 pi^2 / (8 lambda^2))
    const double c = std::sqrt(2.0 * std::numbers::pi) / lambda;
    double s = 0.0;
    for (int j = 1; j < 50; ++j) {
      const double t = std::exp(-(2.0 * j - 1) * (2.0 * j - 1) * std::numbers::pi *
                                std::numbers::pi / (8.0 * lambda * lambda));
      s += t;
      if (t < 1e-18) break;
    }
    return std::clamp(1.0 - c * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int j = 1; j < 100; ++j) {
    const double t = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 == 1 ? 2.0 : -2.0) * t;
    if (t < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf) {
  std::vector<double> x(sample.begin(), sample.end());
  const int n = static_cast<int>(x.size());
  if (n == 0) throw InsufficientDataError("KS test on an empty sample");
  std::sort(x.begin(), x.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(static_cast<double>(n));
  return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)};
}

KsResult ks_poisson(const SpacingStats& s) {
  return ks_test(s.spacings, [](double x) { return 1.0 - std::exp(-x); });
}

double brody_scale(double alpha) {
  return std::pow(std::tgamma((2.0 + alpha) / (1.0 + alpha)), 1.0 + alpha);
}

double brody_pdf(double s, double alpha) {
  if (s < 0.0) return 0.0;
  const double b = brody_scale(alpha);
  return (1.0 + alpha) * b * std::pow(s, alpha) * std::exp(-b * std::pow(s, 1.0 + alpha));
}

double brody_cdf(double s, double alpha) {
  if (s <= 0.0) return 0.0;
  return 1.0 - std::exp(-brody_scale(alpha) * std::pow(s, 1.0 + alpha));
}

namespace {

double brody_log_likelihood(const std::vector<double>& logs, const std::vector<double>& s,
                            double alpha) {
  const double b = brody_scale(alpha);
  const double base = std::log1p(alpha) + std::log(b);
  double ll = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ll += base + alpha * logs[i] - b * std::exp((1.0 + alpha) * logs[i]);
  }
  return ll;
}

}  // namespace

BrodyFit brody_fit(const SpacingStats& st) {
  const int n = static_cast<int>(st.spacings.size());
  if (n < kMinLevels) {
    throw InsufficientDataError("Brody fit needs at least " + std::to_string(kMinLevels) +
                                " spacings, got " + std::to_string(n));
  }
  // Exact zero gaps would send log S to -inf; they carry no information
  // beyond "very small".
  std::vector<double> logs(n);
  for (int i = 0; i < n; ++i) logs[i] = std::log(std::max(st.spacings[i], 1e-12));
  auto neg = [&](double a) { return -brody_log_likelihood(logs, st.spacings, a); };

  std::uintmax_t iters = 200;
  const auto [alpha, value] = boost::math::tools::brent_find_minima(neg, 0.0, 1.0, 40, iters);
  if (iters >= 200) {
    std::ostringstream os;
    os << "Brody fit did not converge in 200 iterations; last bracket estimate alpha=" << alpha;
    throw ConvergenceError(os.str());
  }

  BrodyFit f;
  f.alpha = alpha;
  f.log_likelihood = -value;
  f.iterations = static_cast<int>(iters);
  // Observed Fisher information by central differences, shifted inward at
  // the boundary.
  const double h = 1e-4;
  const double c = std::clamp(alpha, h, 1.0 - h);
  const double curv = (neg(c + h) - 2.0 * neg(c) + neg(c - h)) / (h * h);
  f.std_error = curv > 0.0 ? 1.0 / std::sqrt(curv) : std::numeric_limits<double>::infinity();
  f.ci_low = std::max(0.0, alpha - 1.96 * f.std_error);
  f.ci_high = std::min(1.0, alpha + 1.96 * f.std_error);
  f.ks = ks_test(st.spacings, [&](double x) { return brody_cdf(x, alpha); });
  return f;
}

Histogram spacing_histogram(const SpacingStats& s, int bins) {
  if (bins < 8) throw ParameterError("histogram needs at least 8 bins");
  if (s.spacings.empty()) throw InsufficientDataError("no spacings to histogram");
  const double smax = *std::max_element(s.spacings.begin(), s.spacings.end());
  Histogram h;
  const double width = smax > 0.0 ? smax / bins : 1.0;
  h.edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i) h.edges[i] = width * i;
  h.counts.assign(bins, 0);
  for (double x : s.spacings) {
    int b = static_cast<int>(x / width);
    h.counts[std::clamp(b, 0, bins - 1)] += 1;
  }
  const double total = static_cast<double>(s.spacings.size());
  h.density.resize(bins);
  for (int i = 0; i < bins; ++i) h.density[i] = h.counts[i] / (total * width);
  return h;
}

namespace {

double chi_square_p(double stat, int dof) {
  if (dof < 1) throw InsufficientDataError("chi-square test needs at least 2 bins");
  boost::math::chi_squared_distribution<double> dist(dof);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace

ChiSquareResult chi_square_uniform(std::span<const double> phases, int bins) {
  if (bins < 2) throw ParameterError("chi-square test needs at least 2 bins");
  if (phases.empty()) throw InsufficientDataError("no phases to test");
  std::vector<int> counts(bins, 0);
  for (double p : phases) {
    const int b = static_cast<int>(wrap_angle(p) / (2.0 * std::numbers::pi) * bins);
    counts[std::clamp(b, 0, bins - 1)] += 1;
  }
  const double expected = static_cast<double>(phases.size()) / bins;
  ChiSquareResult r;
  for (int c : counts) r.statistic += (c - expected) * (c - expected) / expected;
  r.dof = bins - 1;
  r.p_value = chi_square_p(r.statistic, r.dof);
  return r;
}

ChiSquareResult chi_square_against(const Histogram& h, const std::function<double(double)>& cdf) {
  const int bins = static_cast<int>(h.counts.size());
  const double total = std::accumulate(h.counts.begin(), h.counts.end(), 0.0);
  // Adjacent bins are pooled until each group expects at least 5 counts.
  std::vector<double> obs, exp;
  double o = 0.0, e = 0.0;
  for (int i = 0; i < bins; ++i) {
    const double hi = (i == bins - 1) ? 1.0 : cdf(h.edges[i + 1]);
    o += h.counts[i];
    e += total * (hi - cdf(h.edges[i]));
    if (e >= 5.0) {
      obs.push_back(o);
      exp.push_back(e);
      o = e = 0.0;
    }
  }
  if (e > 0.0 || o > 0.0) {
    if (exp.empty()) {
      obs.push_back(o);
      exp.push_back(e);
    } else {
      obs.back() += o;
      exp.back() += e;
    }
  }
  ChiSquareResult r;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (exp[i] <= 0.0) continue;
    r.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
  }
  r.dof = static_cast<int>(obs.size()) - 1;
  r.p_value = chi_square_p(r.statistic, r.dof);
  return r;
}

}  // namespace kickwell
