#include "qdw/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "qdw/errors.hpp"
#include "qdw/units.hpp"

namespace qdw {

namespace {

constexpr double kEdgeTolerance = 1e-12;

// Normalisation of a Gaussian truncated at +-3 sigma: integral of exp(-x^2 / 2 sigma^2).
double gaussian_norm(double sigma) { return sigma * std::sqrt(2.0 * kPi) * std::erf(3.0 / std::sqrt(2.0)); }

}  // namespace

double pulse_envelope(const Pulse& p, double t) {
  switch (p.shape) {
    case PulseShape::Square:
      return p.area / p.duration;
    case PulseShape::Gaussian: {
      const double sigma = p.duration / 6.0;
      const double x = t - p.center();
      return p.area * std::exp(-0.5 * x * x / (sigma * sigma)) / gaussian_norm(sigma);
    }
  }
  return 0.0;
}

double Pulse::peak_rabi() const { return pulse_envelope(*this, center()); }

void PulseSequence::validate() const {
  std::vector<std::string> errors;
  if (!(rep_period > 0.0)) errors.push_back(fmt::format("rep_period must be > 0 (got {})", rep_period));
  if (!(bin_spacing > 0.0)) errors.push_back(fmt::format("bin_spacing must be > 0 (got {})", bin_spacing));
  for (std::size_t k = 0; k < pulses.size(); ++k) {
    const Pulse& p = pulses[k];
    if (!(p.duration > 0.0)) errors.push_back(fmt::format("pulse {}: duration must be > 0 (got {})", k, p.duration));
    if (!(p.area >= 0.0) || !std::isfinite(p.area)) errors.push_back(fmt::format("pulse {}: area must be >= 0 (got {})", k, p.area));
    if (!std::isfinite(p.phase)) errors.push_back(fmt::format("pulse {}: phase must be finite", k));
    if (p.t0 < 0.0 || p.t_end() > rep_period + kEdgeTolerance) {
      errors.push_back(fmt::format("pulse {}: [{}, {}] lies outside the repetition [0, {}]", k, p.t0, p.t_end(), rep_period));
    }
    if (k > 0 && p.t0 < pulses[k - 1].t_end() - kEdgeTolerance) {
      errors.push_back(fmt::format("pulse {} overlaps or precedes pulse {}", k, k - 1));
    }
  }
  for (std::size_t k = 0; k < resets.size(); ++k) {
    const ResetPulse& r = resets[k];
    if (!(r.p_rand >= 0.0 && r.p_rand <= 1.0)) errors.push_back(fmt::format("reset {}: p_rand must lie in [0, 1] (got {})", k, r.p_rand));
    if (!(r.t0 >= 0.0 && r.t0 < rep_period)) errors.push_back(fmt::format("reset {}: t0 = {} outside [0, {})", k, r.t0, rep_period));
    if (k > 0 && r.t0 < resets[k - 1].t0) errors.push_back(fmt::format("reset {} is out of time order", k));
  }
  if (!errors.empty()) throw ValidationReport(std::move(errors));
}

double PulseSequence::max_peak_rabi() const {
  double m = 0.0;
  for (const auto& p : pulses) m = std::max(m, p.peak_rabi());
  return m;
}

std::complex<double> omega_at(const PulseSequence& seq, double t) {
  if (t < 0.0) return 0.0;
  const double local = std::fmod(t, seq.rep_period);
  for (const auto& p : seq.pulses) {
    if (local >= p.t0 && local < p.t_end()) return std::polar(pulse_envelope(p, local), p.phase);
  }
  return 0.0;
}

}  // namespace qdw
