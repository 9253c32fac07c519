#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kickwell/classical.hpp"
#include "kickwell/errors.hpp"

using namespace kickwell;
using std::numbers::pi;

namespace {

double angle_gap(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 2.0 * pi);
  return std::min(d, 2.0 * pi - d);
}

}  // namespace

TEST_CASE("free-rotor composition is the standard map") {
  const double k = 4.25;
  const ModelParams p = validate_params({k, 0.0, 1.4, 1.0});
  const auto ens = random_ensemble(1'000'000, 11, -150.0, 150.0);
  double worst_theta = 0.0, worst_p = 0.0;
  bool counted = true;
  for (const ClassicalState& s : ens) {
    const ClassicalState a = map_step(s, p);
    const ClassicalState b = standard_map(s, k);
    worst_theta = std::max(worst_theta, angle_gap(a.theta, b.theta));
    worst_p = std::max(worst_p, std::abs(a.p - b.p));
    counted = counted && a.kick_index == b.kick_index;
  }
  CHECK(counted);
  CHECK(worst_theta < 1e-12);
  CHECK(worst_p < 1e-12);
}

TEST_CASE("free flight conserves energy across the step") {
  const ModelParams p = validate_params({0.25, 5000.0, 1.4, 1.0});
  const auto ens = random_ensemble(20000, 12, -150.0, 150.0);
  double worst = 0.0;
  for (const ClassicalState& s : ens) {
    const ClassicalState f = free_flight(s, p);
    const double e0 = classical_energy(s, p), e1 = classical_energy(f, p);
    worst = std::max(worst, std::abs(e1 - e0) / std::max(1.0, std::abs(e0)));
    CHECK(f.theta >= 0.0);
    CHECK(f.theta < 2.0 * pi);
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("flight is time-reversible") {
  const ModelParams p = validate_params({0.25, 5000.0, 1.4, 1.0});
  const auto ens = random_ensemble(2000, 13, -150.0, 150.0);
  for (const ClassicalState& s : ens) {
    const ClassicalState f = free_flight(s, p);
    ClassicalState back = f;
    back.p = -back.p;
    const ClassicalState r = free_flight(back, p);
    CHECK(angle_gap(r.theta, s.theta) < 1e-9);
    CHECK(std::abs(r.p + s.p) < 1e-9 * std::max(1.0, std::abs(s.p)));
  }
}

TEST_CASE("one period is area-preserving away from edge grazing") {
  const ModelParams p = validate_params({0.25, 5000.0, 1.4, 1.0});
  const double h = 1e-6;
  int tested = 0;
  for (const ClassicalState& s : random_ensemble(200, 14, 110.0, 150.0)) {
    auto at = [&](double dt, double dp) {
      ClassicalState q = s;
      q.theta = wrap_angle(q.theta + dt);
      q.p += dp;
      return map_step(q, p);
    };
    const ClassicalState tp = at(h, 0), tm = at(-h, 0), pp = at(0, h), pm = at(0, -h);
    auto dtheta = [](double a, double b) { return std::remainder(a - b, 2.0 * pi); };
    const double j11 = dtheta(tp.theta, tm.theta) / (2 * h), j12 = dtheta(pp.theta, pm.theta) / (2 * h);
    const double j21 = (tp.p - tm.p) / (2 * h), j22 = (pp.p - pm.p) / (2 * h);
    const double det = j11 * j22 - j12 * j21;
    // A difference stencil straddling an edge event is not a derivative.
    if (std::abs(j11) > 1e3 || std::abs(j12) > 1e3) continue;
    CHECK(det == doctest::Approx(1.0).epsilon(1e-5));
    ++tested;
  }
  CHECK(tested > 150);
}

TEST_CASE("reflection below the step and transmission above it") {
  const ModelParams p = validate_params({0.0, 5000.0, 1.4, 1.0});
  ClassicalState trapped{0.0, 10.0, 0};
  for (int i = 0; i < 200; ++i) {
    trapped = free_flight(trapped, p);
    CHECK(std::abs(std::abs(trapped.p) - 10.0) < 1e-9);
    const double x = std::remainder(trapped.theta, 2.0 * pi);
    CHECK(std::abs(x) <= 0.3 * pi + 1e-12);
  }
  // Starting inside the well, half a barrier crossing later the speed is the
  // barrier speed sqrt(p^2 - 2 V0).
  const ClassicalState fast{0.0, 200.0, 0};
  const ClassicalState over = free_flight(fast, p, (0.3 * pi + 0.7 * pi) / 200.0);
  CHECK(eval_square_well(p, over.theta) == 5000.0);
  CHECK(over.p == doctest::Approx(std::sqrt(200.0 * 200.0 - 2 * 5000.0)).epsilon(1e-12));
}

TEST_CASE("kick update and event guard") {
  const ModelParams p = validate_params({2.0, 5000.0, 1.4, 1.0});
  const ClassicalState s{pi / 2, 1.0, 7};
  const ClassicalState k = kick_update(s, p);
  CHECK(k.p == doctest::Approx(3.0));
  CHECK(k.kick_index == 8);
  CHECK(k.theta == s.theta);
  // A trapped particle at p = 90 hits a wall about 24 times per period.
  CHECK_THROWS_AS(free_flight(ClassicalState{0.0, 90.0, 0}, p, 1.0, 3), DomainError);
}

TEST_CASE("ensembles and coverage") {
  const auto a = random_ensemble(100, 42, -5.0, 5.0);
  const auto b = random_ensemble(100, 42, -5.0, 5.0);
  const auto c = random_ensemble(100, 43, -5.0, 5.0);
  bool differ = false;
  for (int i = 0; i < 100; ++i) {
    CHECK(a[i].theta == b[i].theta);
    CHECK(a[i].p == b[i].p);
    CHECK(a[i].p >= -5.0);
    CHECK(a[i].p <= 5.0);
    differ = differ || a[i].p != c[i].p;
  }
  CHECK(differ);

  SectionCloud grid;
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j)
      grid.points.push_back({2.0 * pi * (i + 0.5) / 32, -1.0 + 2.0 * (j + 0.5) / 32, 0, 0});
  CHECK(coverage_fraction(grid, 32, 32, -1.0, 1.0) == 1.0);
  CHECK(coverage_fraction(grid, 64, 64, -1.0, 1.0) == doctest::Approx(0.25));
  CHECK_THROWS_AS(coverage_fraction(grid, 16, 32, -1.0, 1.0), ParameterError);

  const ModelParams p = validate_params({0.25, 5000.0, 1.4, 1.0});
  const SectionCloud cloud = stroboscopic_section(a, p, 10);
  CHECK(cloud.points.size() == 1000);
  CHECK(cloud.ensemble_size == 100);
  CHECK(cloud.steps == 10);
}
