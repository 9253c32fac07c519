#pragma once

#include <cstdint>
#include <vector>

#include "kickwell/model.hpp"

namespace kickwell {

struct ClassicalState {
  double theta = 0.0;  // [0, 2pi)
  double p = 0.0;
  long kick_index = 0;
};

// Impulse p += k sin(theta); counts the kick.
ClassicalState kick_update(const ClassicalState& s, const ModelParams& prm);

inline constexpr long kMaxFlightEvents = 1'000'000;

// Event-driven free motion in the square well for `duration`. Speeds are
// recomputed from the conserved energy at every edge, so round-off does not
// accumulate. Kinetic energy equal to the step height transmits.
ClassicalState free_flight(const ClassicalState& s, const ModelParams& prm,
                           double duration = 1.0, long max_events = kMaxFlightEvents);

double classical_energy(const ClassicalState& s, const ModelParams& prm);

// One period: kick, then flight.
ClassicalState map_step(const ClassicalState& s, const ModelParams& prm);

// Chirikov standard map with the same ordering, for cross-checks.
ClassicalState standard_map(const ClassicalState& s, double k);

struct SectionPoint {
  double theta;
  double p;
  int trajectory;
  int step;
};

struct SectionCloud {
  std::vector<SectionPoint> points;  // trajectory-major
  int ensemble_size = 0;
  int steps = 0;
};

// Uniform initial states, theta in [0, 2pi) and p in [p_min, p_max], from a
// seeded 64-bit Mersenne Twister.
std::vector<ClassicalState> random_ensemble(int count, std::uint64_t seed, double p_min,
                                            double p_max);

SectionCloud stroboscopic_section(const std::vector<ClassicalState>& ensemble,
                                  const ModelParams& prm, int steps);

// Fraction of (theta, p) cells in [0, 2pi) x [p_min, p_max] visited at least once.
double coverage_fraction(const SectionCloud& cloud, int theta_cells, int p_cells, double p_min,
                         double p_max);

}  // namespace kickwell
