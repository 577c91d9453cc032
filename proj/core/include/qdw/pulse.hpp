#pragma once

#include <complex>
#include <vector>

namespace qdw {

enum class PulseShape { Square, Gaussian };

/// A drive pulse on hbar -> Tbar. `area` is the time integral of the Rabi amplitude.
/// Gaussian pulses are truncated at +-3 sigma, so duration = 6 sigma.
struct Pulse {
  double t0 = 0.0;        // ns
  double duration = 0.2;  // ns
  double area = 0.0;      // rad
  double phase = 0.0;     // rad
  PulseShape shape = PulseShape::Square;

  double t_end() const { return t0 + duration; }
  double center() const { return t0 + 0.5 * duration; }
  /// Peak Rabi amplitude (rad/ns).
  double peak_rabi() const;
};

/// Instantaneous spin randomisation: with probability p_rand the ground block is
/// replaced by the maximally mixed ground state.
struct ResetPulse {
  double t0 = 0.0;
  double p_rand = 1.0;
};

inline constexpr double kDefaultRepPeriod = 12.5;  // ns
inline constexpr double kDefaultBinSpacing = 2.0;  // ns
inline constexpr double kDefaultPulseDuration = 0.2;  // ns

/// One repetition of the drive. Sequences repeat with period rep_period.
struct PulseSequence {
  std::vector<Pulse> pulses;
  std::vector<ResetPulse> resets;
  double bin_spacing = kDefaultBinSpacing;
  double rep_period = kDefaultRepPeriod;
  /// Ideal preparation of |hbar> at the start of every repetition.
  bool prepare_hbar = false;

  /// Time-ordered, non-overlapping, inside [0, rep_period]. Throws ValidationError.
  void validate() const;
  double max_peak_rabi() const;
};

/// Rabi amplitude |Omega| of a pulse at time t measured in the repetition frame.
/// No window check: callers decide whether the pulse is on.
double pulse_envelope(const Pulse& p, double t);

/// Complex Rabi amplitude Omega(t) e^{i phase} of the pulse active at t (0 between pulses).
/// t is folded into one repetition; negative t gives 0.
std::complex<double> omega_at(const PulseSequence& seq, double t);

}  // namespace qdw
