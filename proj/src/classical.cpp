#include "kickwell/classical.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "kickwell/errors.hpp"

namespace kickwell {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

ClassicalState kick_update(const ClassicalState& s, const ModelParams& prm) {
  return {s.theta, s.p + prm.kick() * std::sin(s.theta), s.kick_index + 1};
}

double classical_energy(const ClassicalState& s, const ModelParams& prm) {
  return 0.5 * s.p * s.p + eval_square_well(prm, s.theta);
}

ClassicalState free_flight(const ClassicalState& s, const ModelParams& prm, double duration,
                           long max_events) {
  if (duration < 0.0) throw ParameterError("flight duration must be >= 0");
  ClassicalState out = s;
  out.theta = wrap_angle(s.theta);
  if (prm.depth() == 0.0 || s.p == 0.0) {
    out.theta = wrap_angle(out.theta + s.p * duration);
    return out;
  }

  const PotentialSpec spec = potential_spec(prm);
  bool in_barrier = eval_square_well(prm, out.theta) > 0.0;
  const double energy = 0.5 * s.p * s.p + (in_barrier ? prm.depth() : 0.0);
  double theta = out.theta;
  double p = s.p;
  double left = duration;

  for (long events = 0;; ++events) {
    if (events >= max_events) {
      throw DomainError("free flight exceeded the edge-event limit");
    }
    if (p == 0.0) break;
    // The current region is [lo, hi) on the circle; only its own edges can
    // be hit, which keeps an edge just crossed or reflected from out of play.
    const double lo = in_barrier ? spec.barrier_start : spec.barrier_end;
    const double hi = in_barrier ? spec.barrier_end : spec.barrier_start;
    const double edge = p > 0.0 ? hi : lo;
    const double dist = p > 0.0 ? wrap_angle(hi - theta) : wrap_angle(theta - lo);
    const double speed = std::abs(p);
    const double t_edge = dist / speed;
    if (t_edge >= left) {
      theta = wrap_angle(theta + p * left);
      break;
    }
    left -= t_edge;
    theta = edge;
    const double v_next = in_barrier ? 0.0 : prm.depth();
    const double kinetic_next = energy - v_next;
    const double sign = p > 0.0 ? 1.0 : -1.0;
    if (kinetic_next >= 0.0) {
      in_barrier = !in_barrier;
      p = sign * std::sqrt(2.0 * kinetic_next);
    } else {
      const double v_here = in_barrier ? prm.depth() : 0.0;
      p = -sign * std::sqrt(2.0 * std::max(energy - v_here, 0.0));
    }
  }
  out.theta = theta;
  out.p = p;
  return out;
}

ClassicalState map_step(const ClassicalState& s, const ModelParams& prm) {
  return free_flight(kick_update(s, prm), prm);
}

ClassicalState standard_map(const ClassicalState& s, double k) {
  const double p = s.p + k * std::sin(s.theta);
  return {wrap_angle(s.theta + p), p, s.kick_index + 1};
}

std::vector<ClassicalState> random_ensemble(int count, std::uint64_t seed, double p_min,
                                            double p_max) {
  if (count < 1) throw ParameterError("ensemble must be nonempty");
  if (!(p_max >= p_min)) throw ParameterError("momentum range is empty");
  std::mt19937_64 rng(seed);
  // 53-bit uniform in [0, 1); avoids implementation-defined distributions so
  // ensembles are identical across standard libraries.
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<ClassicalState> out(count);
  for (auto& s : out) {
    s.theta = kTwoPi * unit();
    s.p = p_min + (p_max - p_min) * unit();
  }
  return out;
}

SectionCloud stroboscopic_section(const std::vector<ClassicalState>& ensemble,
                                  const ModelParams& prm, int steps) {
  if (ensemble.empty()) throw ParameterError("ensemble must be nonempty");
  if (steps < 0) throw ParameterError("steps must be >= 0");
  SectionCloud cloud;
  cloud.ensemble_size = static_cast<int>(ensemble.size());
  cloud.steps = steps;
  cloud.points.reserve(ensemble.size() * static_cast<std::size_t>(steps));
  for (int t = 0; t < cloud.ensemble_size; ++t) {
    ClassicalState s = ensemble[t];
    for (int n = 0; n < steps; ++n) {
      s = map_step(s, prm);
      cloud.points.push_back({s.theta, s.p, t, n + 1});
    }
  }
  return cloud;
}

double coverage_fraction(const SectionCloud& cloud, int theta_cells, int p_cells, double p_min,
                         double p_max) {
  if (theta_cells < 32 || p_cells < 32) throw ParameterError("coverage grid must be >= 32x32");
  if (!(p_max > p_min)) throw ParameterError("momentum window is empty");
  std::vector<char> seen(static_cast<std::size_t>(theta_cells) * p_cells, 0);
  for (const SectionPoint& pt : cloud.points) {
    if (pt.p < p_min || pt.p > p_max) continue;
    int i = static_cast<int>(wrap_angle(pt.theta) / kTwoPi * theta_cells);
    int j = static_cast<int>((pt.p - p_min) / (p_max - p_min) * p_cells);
    i = std::min(i, theta_cells - 1);
    j = std::min(j, p_cells - 1);
    seen[static_cast<std::size_t>(i) * p_cells + j] = 1;
  }
  std::size_t visited = 0;
  for (char c : seen) visited += c;
  return static_cast<double>(visited) / seen.size();
}

}  // namespace kickwell
