#include "kickwell/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "kickwell/errors.hpp"

namespace kickwell {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

const char* to_string(Parity p) { return p == Parity::even ? "even" : "odd"; }

double ModelParams::well_width() const { return kTwoPi - barrier_; }

double ModelParams::barrier_over_pi() const { return barrier_ / std::numbers::pi; }

ModelParams validate_params(const RawParams& raw) {
  auto fail = [](const std::string& what) { throw ParameterError(what); };
  if (!std::isfinite(raw.kick) || !std::isfinite(raw.depth) ||
      !std::isfinite(raw.barrier_over_pi) || !std::isfinite(raw.hbar)) {
    fail("parameters must be finite");
  }
  if (raw.kick < 0.0) fail("kick strength k must be >= 0");
  if (raw.depth < 0.0) fail("potential height V0 must be >= 0");
  if (raw.hbar <= 0.0) fail("hbar_s must be > 0");
  if (raw.barrier_over_pi <= 0.0 || raw.barrier_over_pi >= 2.0) {
    std::ostringstream os;
    os << "barrier width b/pi = " << raw.barrier_over_pi << " outside (0, 2)";
    fail(os.str());
  }
  return ModelParams(raw.kick, raw.depth, raw.barrier_over_pi * std::numbers::pi, raw.hbar);
}

bool PotentialSpec::symmetric_about_pi(double tol) const {
  return std::abs(center() - std::numbers::pi) <= tol;
}

PotentialSpec potential_spec(const ModelParams& p) {
  const double start = 0.5 * p.well_width();
  return {start, start + p.barrier_width()};
}

double wrap_angle(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative number can round up to exactly 2pi
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double eval_square_well(const ModelParams& p, double theta) {
  const PotentialSpec s = potential_spec(p);
  const double t = wrap_angle(theta);
  return (t >= s.barrier_start && t < s.barrier_end) ? p.depth() : 0.0;
}

Complex square_well_fourier(const ModelParams& p, long n) {
  const PotentialSpec s = potential_spec(p);
  if (n == 0) return {p.depth() * p.barrier_width() / kTwoPi, 0.0};
  const double dn = static_cast<double>(n);
  // (1/2pi) * V0 * integral_{a}^{c} e^{-i n t} dt = V0 (e^{-i n a} - e^{-i n c}) / (2 pi i n)
  const Complex ea = std::polar(1.0, -dn * s.barrier_start);
  const Complex ec = std::polar(1.0, -dn * s.barrier_end);
  return p.depth() * (ea - ec) / (Complex(0.0, kTwoPi * dn));
}

double square_well_fourier_real(const ModelParams& p, long n) {
  if (n == 0) return p.depth() * p.barrier_width() / kTwoPi;
  const double dn = static_cast<double>(n);
  const double sign = (n % 2 == 0) ? 1.0 : -1.0;
  return p.depth() * sign * std::sin(0.5 * dn * p.barrier_width()) / (std::numbers::pi * dn);
}

}  // namespace kickwell
