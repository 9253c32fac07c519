#pragma once

#include <complex>
#include <string>

namespace kickwell {

using Complex = std::complex<double>;

enum class Parity { even, odd };

const char* to_string(Parity p);

// Unvalidated user input; barrier width is given in units of pi.
struct RawParams {
  double kick = 0.0;
  double depth = 0.0;
  double barrier_over_pi = 1.4;
  double hbar = 1.0;
};

// Validated physical parameters. Construct through validate_params only.
class ModelParams {
 public:
  double kick() const { return kick_; }
  double depth() const { return depth_; }
  double hbar() const { return hbar_; }
  double barrier_width() const { return barrier_; }
  double well_width() const;
  double barrier_over_pi() const;

  friend ModelParams validate_params(const RawParams& raw);

 private:
  ModelParams(double kick, double depth, double barrier, double hbar)
      : kick_(kick), depth_(depth), barrier_(barrier), hbar_(hbar) {}

  double kick_;
  double depth_;
  double barrier_;
  double hbar_;
};

ModelParams validate_params(const RawParams& raw);

// Barrier occupies [start, end) on the circle [0, 2pi). With the well split
// evenly on both sides of the origin, the barrier is centred on pi.
struct PotentialSpec {
  double barrier_start;
  double barrier_end;

  double center() const { return 0.5 * (barrier_start + barrier_end); }
  bool symmetric_about_pi(double tol = 1e-12) const;
};

PotentialSpec potential_spec(const ModelParams& p);

// Maps any angle into [0, 2pi).
double wrap_angle(double theta);

double eval_square_well(const ModelParams& p, double theta);

// Fourier coefficient (1/2pi) * integral of V(theta) exp(-i n theta).
Complex square_well_fourier(const ModelParams& p, long n);

// Same coefficient specialised to the pi-centred barrier, where it is real
// and even in n.
double square_well_fourier_real(const ModelParams& p, long n);

}  // namespace kickwell
