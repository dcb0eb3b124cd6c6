#pragma once

#include <limits>
#include <span>
#include <string>

namespace nvrot {

struct FitOptions {
  int max_iterations = 200;
  double tolerance = 1e-12;
  // Stretched exponential only: hold the amplitude at this value when finite.
  double fixed_amplitude = std::numeric_limits<double>::quiet_NaN();
};

// S(tau) = amplitude * exp(-(tau / t2_eff)^n)
struct StretchedExpFit {
  double t2_eff = 0.0;
  double stretch_n = 1.0;
  double amplitude = 0.0;
  double residual_rms = 0.0;
  // one-sigma, from the Gauss-Newton covariance
  double t2_error = 0.0;
  double stretch_error = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string status;  // "ok" or "max_iterations"
};

// Bounded Levenberg-Marquardt on tau normalised by max(tau). Initial guess:
// amplitude = first sample (or the fixed value), t2 at the 1/e crossing of the linear
// interpolation (log-linear slope if the data never cross), n = 1.
// Throws analysis.degenerate_fit for constant input.
StretchedExpFit fit_stretched_exponential(std::span<const double> tau,
                                          std::span<const double> signal,
                                          const FitOptions& options = {});

// S(x) = offset + amplitude * exp(-x / decay) * cos(frequency * x + phase)
struct DampedSinusoidFit {
  double offset = 0.0;
  double amplitude = 0.0;
  double decay = 0.0;      // infinite when undamped
  double frequency = 0.0;  // radians of phase per unit x
  double phase = 0.0;
  double residual_rms = 0.0;
  double amplitude_error = 0.0;
  double decay_rate_error = 0.0;  // error on 1/decay
  int iterations = 0;
  bool converged = false;
  std::string status;  // "ok", "max_iterations" or "no_signal"
};

// Frequency seeded from the largest periodogram peak of the mean-removed data.
DampedSinusoidFit fit_damped_sinusoid(std::span<const double> x, std::span<const double> y,
                                      const FitOptions& options = {});

}  // namespace nvrot
