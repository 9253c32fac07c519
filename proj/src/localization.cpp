#include "kickwell/localization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kickwell/errors.hpp"
#include "regression.hpp"

namespace kickwell {

const char* to_string(ProfileSide s) {
  switch (s) {
    case ProfileSide::positive: return "positive";
    case ProfileSide::negative: return "negative";
    default: return "symmetrized";
  }
}

const char* to_string(ProfileWeight w) {
  return w == ProfileWeight::amplitude ? "amplitude" : "probability";
}

const char* to_string(FitKind k) { return k == FitKind::exponential ? "exponential" : "powerlaw"; }

const char* to_string(MuRegime r) {
  switch (r) {
    case MuRegime::below: return "below";
    case MuRegime::intermediate: return "intermediate";
    case MuRegime::far_above: return "far_above";
    default: return "undefined";
  }
}

DecayProfile shift_and_average(const FloquetDecomposition& d, std::span<const int> states,
                               const ProfileOptions& opt) {
  if (states.empty()) throw InsufficientDataError("profile filter selected no states");
  if (states.size() < 10) {
    throw InsufficientDataError("profile needs at least 10 states, filter selected " +
                                std::to_string(states.size()));
  }
  const int dim = d.dim();
  // Index v + (dim - 1) covers every offset -(dim-1)..(dim-1).
  std::vector<double> sum(2 * dim - 1, 0.0);
  std::vector<int> cnt(2 * dim - 1, 0);
  for (int r : states) {
    if (r < 0 || r >= dim) throw ParameterError("state index out of range");
    const int peak = d.peak_index[r];
    for (int n = 0; n < dim; ++n) {
      if (opt.parity_masked && d.basis_parities[n] != d.parities[r]) continue;
      const double a = std::abs(d.states(r, n));
      const int slot = n - peak + dim - 1;
      sum[slot] += opt.weight == ProfileWeight::amplitude ? a : a * a;
      cnt[slot] += 1;
    }
  }

  DecayProfile prof;
  prof.count = static_cast<int>(states.size());
  prof.side = opt.side;
  prof.weight = opt.weight;
  for (int v = 0; v < dim; ++v) {
    const int pos = v + dim - 1, neg = -v + dim - 1;
    double s = 0.0;
    int c = 0;
    switch (opt.side) {
      case ProfileSide::positive: s = sum[pos]; c = cnt[pos]; break;
      case ProfileSide::negative: s = sum[neg]; c = cnt[neg]; break;
      case ProfileSide::symmetrized:
        s = sum[pos] + (v > 0 ? sum[neg] : 0.0);
        c = cnt[pos] + (v > 0 ? cnt[neg] : 0);
        break;
    }
    if (c == 0) continue;
    prof.offsets.push_back(v);
    prof.density.push_back(s / c);
    prof.contributors.push_back(c);
  }
  return prof;
}

DecayProfile shift_and_average(const FloquetDecomposition& d,
                               const std::function<bool(int)>& filter,
                               const ProfileOptions& opt) {
  std::vector<int> sel;
  for (int r = 0; r < d.dim(); ++r)
    if (filter(r)) sel.push_back(r);
  return shift_and_average(d, std::span<const int>(sel), opt);
}

namespace {

double density_floor(const DecayProfile& prof, const FitOptions& opt) {
  if (opt.floor >= 0.0) return opt.floor;
  return prof.weight == ProfileWeight::amplitude ? 1e-13 : 1e-26;
}

int contributor_threshold(const DecayProfile& prof, const FitOptions& opt) {
  const int frac = static_cast<int>(std::ceil(opt.min_contributor_fraction * prof.count));
  return std::max(opt.min_contributors, frac);
}

struct Points {
  std::vector<double> v;
  std::vector<double> logd;
};

Points window_points(const DecayProfile& prof, FitWindow w, const FitOptions& opt) {
  if (w.hi < w.lo) throw ParameterError("fit window is empty");
  const int need = contributor_threshold(prof, opt);
  const double floor = density_floor(prof, opt);
  Points pts;
  for (std::size_t i = 0; i < prof.offsets.size(); ++i) {
    const int v = prof.offsets[i];
    if (v < w.lo || v > w.hi || prof.contributors[i] < need) continue;
    if (!(prof.density[i] > floor)) {
      throw DomainError("nonpositive density at offset " + std::to_string(v) + " in fit window");
    }
    pts.v.push_back(v);
    pts.logd.push_back(std::log(prof.density[i]));
  }
  if (pts.v.size() < 3) {
    throw InsufficientDataError("fewer than 3 usable points in fit window [" +
                                std::to_string(w.lo) + ", " + std::to_string(w.hi) + "]");
  }
  return pts;
}

// Last offset of the contiguous eligible run starting at `from` whose
// density stays above the floor.
int usable_end(const DecayProfile& prof, int from, const FitOptions& opt) {
  const int need = contributor_threshold(prof, opt);
  const double floor = density_floor(prof, opt);
  int end = from - 1;
  for (std::size_t i = 0; i < prof.offsets.size(); ++i) {
    const int v = prof.offsets[i];
    if (v < from || prof.contributors[i] < need) continue;
    if (!(prof.density[i] > floor)) break;
    end = v;
  }
  return end;
}

}  // namespace

std::vector<int> eligible_offsets(const DecayProfile& prof, const FitOptions& opt) {
  const int need = contributor_threshold(prof, opt);
  std::vector<int> out;
  for (std::size_t i = 0; i < prof.offsets.size(); ++i)
    if (prof.contributors[i] >= need) out.push_back(prof.offsets[i]);
  return out;
}

FitResult fit_exponential(const DecayProfile& prof, FitWindow window, const FitOptions& opt) {
  const Points pts = window_points(prof, window, opt);
  const detail::LineFit f = detail::fit_line(pts.v, pts.logd);
  FitResult r;
  r.kind = FitKind::exponential;
  r.window = window;
  r.quality = f.r2;
  r.points = static_cast<int>(pts.v.size());
  r.decays = f.slope < 0.0;
  r.parameter = r.decays ? -1.0 / f.slope : std::numeric_limits<double>::infinity();
  return r;
}

FitResult fit_powerlaw(const DecayProfile& prof, FitWindow window, const FitOptions& opt) {
  if (window.lo < 1) throw ParameterError("power-law window must start at v >= 1");
  const Points pts = window_points(prof, window, opt);
  std::vector<double> x, y;
  if (opt.bins_per_decade <= 0) {
    for (std::size_t i = 0; i < pts.v.size(); ++i) {
      x.push_back(std::log(pts.v[i]));
      y.push_back(pts.logd[i]);
    }
  } else {
    // Geometric means of v and density inside logarithmic bins, so dense
    // large-v points do not outweigh the first decade.
    const double lo = std::log(static_cast<double>(window.lo));
    const double width = std::log(10.0) / opt.bins_per_decade;
    int current = -1;
    double sx = 0.0, sy = 0.0;
    int m = 0;
    auto flush = [&] {
      if (m > 0) {
        x.push_back(sx / m);
        y.push_back(sy / m);
      }
      sx = sy = 0.0;
      m = 0;
    };
    for (std::size_t i = 0; i < pts.v.size(); ++i) {
      const double lx = std::log(pts.v[i]);
      const int bin = static_cast<int>(std::floor((lx - lo) / width + 1e-12));
      if (bin != current) {
        flush();
        current = bin;
      }
      sx += lx;
      sy += pts.logd[i];
      ++m;
    }
    flush();
    if (x.size() < 3) throw InsufficientDataError("fewer than 3 logarithmic bins in fit window");
  }
  const detail::LineFit f = detail::fit_line(x, y);
  FitResult r;
  r.kind = FitKind::powerlaw;
  r.window = window;
  r.quality = f.r2;
  r.points = static_cast<int>(x.size());
  r.decays = f.slope < 0.0;
  r.parameter = r.decays ? -f.slope : std::numeric_limits<double>::infinity();
  return r;
}

FitResult fit_exponential_auto(const DecayProfile& prof, const FitOptions& opt) {
  const int end = usable_end(prof, 1, opt);
  const FitResult first = fit_exponential(prof, {1, std::min(30, end)}, opt);
  if (!first.decays) return first;
  int hi = std::min(end, static_cast<int>(std::ceil(3.0 * first.parameter)));
  // Very short lengths leave [1, 3l] nearly empty; widen to three usable offsets.
  int seen = 0;
  for (int v : eligible_offsets(prof, opt)) {
    if (v < 1 || v > end) continue;
    if (++seen == 3) {
      hi = std::max(hi, v);
      break;
    }
  }
  if (seen < 3) return first;
  return fit_exponential(prof, {1, hi}, opt);
}

FitResult fit_powerlaw_auto(const DecayProfile& prof, const FitOptions& opt) {
  const int end = usable_end(prof, 1, opt);
  const int lo = std::max(1, static_cast<int>(std::ceil(end / 100.0)));
  return fit_powerlaw(prof, {lo, end}, opt);
}

std::optional<Crossover> detect_crossover(std::span<const int> offsets,
                                          std::span<const double> values,
                                          const CrossoverOptions& opt) {
  if (offsets.size() != values.size()) throw ParameterError("curve length mismatch");
  if (offsets.empty() || offsets.front() < 1) return std::nullopt;
  if (static_cast<double>(offsets.back()) / offsets.front() < 100.0) return std::nullopt;

  std::vector<double> m, logm, logv;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (!(values[i] > opt.floor)) continue;
    m.push_back(offsets[i]);
    logm.push_back(std::log(static_cast<double>(offsets[i])));
    logv.push_back(std::log(values[i]));
  }
  if (m.empty()) return std::nullopt;
  // The decay starts at the maximum; anything before it is the kick's
  // Bessel plateau.
  const std::size_t peak =
      static_cast<std::size_t>(std::max_element(logv.begin(), logv.end()) - logv.begin());
  const std::size_t n = m.size() - peak;
  const std::size_t seg = static_cast<std::size_t>(std::max(opt.min_segment, 2));
  if (n < 2 * seg) return std::nullopt;
  auto sub = [](const std::vector<double>& a, std::size_t from, std::size_t len) {
    return std::span<const double>(a.data() + from, len);
  };

  std::vector<double> sse(n, std::numeric_limits<double>::infinity());
  std::size_t best = 0;
  // Breakpoint j belongs to both segments.
  for (std::size_t j = seg - 1; j + seg <= n; ++j) {
    const auto head = detail::fit_line(sub(m, peak, j + 1), sub(logv, peak, j + 1));
    const auto tail = detail::fit_line(sub(logm, peak + j, n - j), sub(logv, peak + j, n - j));
    sse[j] = head.sse + tail.sse;
    if (sse[j] < sse[best] || !std::isfinite(sse[best])) best = j;
  }
  const auto head = detail::fit_line(sub(m, peak, best + 1), sub(logv, peak, best + 1));
  const auto tail = detail::fit_line(sub(logm, peak + best, n - best), sub(logv, peak + best, n - best));
  if (head.r2 < opt.min_quality || tail.r2 < opt.min_quality) return std::nullopt;
  if (head.slope >= 0.0 || tail.slope >= 0.0) return std::nullopt;
  const auto head_as_power = detail::fit_line(sub(logm, peak, best + 1), sub(logv, peak, best + 1));
  const auto tail_as_exp = detail::fit_line(sub(m, peak + best, n - best), sub(logv, peak + best, n - best));
  if (head_as_power.r2 >= head.r2 || tail_as_exp.r2 >= tail.r2) return std::nullopt;

  Crossover c;
  c.breakpoint = static_cast<int>(m[peak + best]);
  c.head_quality = head.r2;
  c.tail_quality = tail.r2;
  c.head_length = -1.0 / head.slope;
  c.tail_exponent = -tail.slope;
  std::size_t lo = best, hi = best;
  while (lo > 0 && sse[lo - 1] <= 1.1 * sse[best]) --lo;
  while (hi + 1 < n && sse[hi + 1] <= 1.1 * sse[best]) ++hi;
  c.breakpoint_lo = static_cast<int>(m[peak + lo]);
  c.breakpoint_hi = static_cast<int>(m[peak + hi]);
  return c;
}

MatrixDecayCurve matrix_element_decay(const FloquetMatrix& u, bool parity_masked,
                                      const CrossoverOptions& opt) {
  const int nb = u.retained;
  MatrixDecayCurve curve;
  for (int mm = 1; mm <= nb / 2; ++mm) {
    double s = 0.0;
    int pairs = 0;
    for (int n = 0; n + mm < nb; ++n) {
      if (parity_masked && u.basis_parities[n] != u.basis_parities[n + mm]) continue;
      s += std::abs(u.entries(n, n + mm));
      ++pairs;
    }
    curve.offsets.push_back(mm);
    curve.values.push_back(pairs > 0 ? s / pairs : 0.0);
    curve.pairs.push_back(pairs);
  }
  curve.crossover = detect_crossover(curve.offsets, curve.values, opt);
  return curve;
}

std::vector<MuRecord> classify_mu(const FloquetDecomposition& d, const UnperturbedSpectrum& spec,
                                  const ModelParams& p, double mu_hi) {
  spec.require_compatible(p);
  if (spec.dim() != d.dim()) throw ParameterError("spectrum and decomposition sizes differ");
  if (!(mu_hi > 1.0)) throw ParameterError("mu_hi must exceed 1");
  std::vector<MuRecord> out(d.dim());
  for (int r = 0; r < d.dim(); ++r) {
    MuRecord& rec = out[r];
    rec.state = r;
    rec.peak_index = d.peak_index[r];
    rec.e_max = spec.energies[rec.peak_index];
    if (p.depth() == 0.0) {
      rec.mu = std::numeric_limits<double>::quiet_NaN();
      rec.regime = MuRegime::undefined;
      continue;
    }
    rec.mu = rec.e_max / p.depth();
    rec.regime = rec.mu <= 1.0 ? MuRegime::below
                 : rec.mu > mu_hi ? MuRegime::far_above
                                  : MuRegime::intermediate;
  }
  return out;
}

std::vector<double> participation_ratio(const FloquetDecomposition& d) {
  std::vector<double> out(d.dim());
  for (int r = 0; r < d.dim(); ++r) out[r] = d.states.row(r).cwiseAbs2().cwiseAbs2().sum();
  return out;
}

PrStep locate_pr_step(const std::vector<MuRecord>& records, std::span<const double> pr,
                      const std::vector<bool>& selected, int window) {
  if (records.size() != pr.size() || selected.size() != pr.size()) {
    throw ParameterError("record, PR and selection sizes differ");
  }
  if (window < 1) throw ParameterError("PR window must be >= 1");
  std::vector<int> idx;
  double below = 0.0, above = 0.0;
  int nb = 0, na = 0;
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (!selected[r] || records[r].regime == MuRegime::undefined) continue;
    idx.push_back(static_cast<int>(r));
    if (records[r].mu <= 1.0) {
      below += pr[r];
      ++nb;
    } else {
      above += pr[r];
      ++na;
    }
  }
  if (nb == 0 || na == 0) throw InsufficientDataError("PR step needs states on both sides of mu = 1");
  if (static_cast<int>(idx.size()) < window + 1) throw InsufficientDataError("too few states for PR window");
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return records[a].e_max < records[b].e_max; });

  PrStep step;
  step.mean_below = below / nb;
  step.mean_above = above / na;
  step.level = 0.5 * (step.mean_below + step.mean_above);
  step.window = window;
  step.states = static_cast<int>(idx.size());

  const int n = static_cast<int>(idx.size()) - window + 1;
  std::vector<double> e(n), p(n);
  for (int i = 0; i < n; ++i) {
    double se = 0.0, sp = 0.0;
    for (int j = i; j < i + window; ++j) {
      se += records[idx[j]].e_max;
      sp += pr[idx[j]];
    }
    e[i] = se / window;
    p[i] = sp / window;
  }
  for (int i = n - 2; i >= 0; --i) {
    if (p[i] >= step.level && p[i + 1] < step.level) {
      const double t = (p[i] - step.level) / (p[i] - p[i + 1]);
      step.transition_energy = e[i] + t * (e[i + 1] - e[i]);
      return step;
    }
  }
  throw DomainError("smoothed PR never crosses the midpoint level");
}

}  // namespace kickwell
