#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qdw {

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> stderrs;  // from the Gauss-Newton covariance scaled by the residual variance
  double residual_norm = 0.0;
  int iterations = 0;

  double value(std::string_view name) const;
  double stderr_of(std::string_view name) const;
};

/// y = A exp(-t / tau). Seeded by a log-linear fit of the positive samples, refined by
/// Levenberg-Marquardt. Needs >= 3 points and a decaying series; throws NumericalError otherwise.
FitResult fit_exponential(std::span<const double> t, std::span<const double> y);

/// y = A + B cos(phi + phi0) with B >= 0. The model is linear in (A, B cos phi0, -B sin phi0);
/// that quadrature solve is the seed, a Levenberg-Marquardt pass polishes it. Needs >= 4 distinct
/// phases.
FitResult fit_sinusoid(std::span<const double> phi, std::span<const double> y);

/// y = (A + B cos(omega t + phi) exp(-t / tau_r)) exp(-t / tau_p).
/// tau_p comes from an exponential fit to the full series, omega from the mean spacing of the
/// zero crossings of the detrended residual, then all six parameters are refined together.
FitResult fit_damped_oscillation(std::span<const double> t, std::span<const double> y);

}  // namespace qdw
