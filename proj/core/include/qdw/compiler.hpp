#pragma once

#include <span>
#include <vector>

#include "qdw/pulse.hpp"
#include "qdw/timebin.hpp"

namespace qdw {

/// Pulse areas and drive phases realising a target set of bin probabilities.
struct PulseAngles {
  std::vector<double> areas;   // theta_k in [0, pi]
  std::vector<double> phases;  // phi_k
};

struct CompileOptions {
  double bin_spacing = kDefaultBinSpacing;
  double pulse_duration = kDefaultPulseDuration;
  double first_pulse = 1.0;  // start of the first pulse inside the repetition, ns
  double rep_period = kDefaultRepPeriod;
  PulseShape shape = PulseShape::Square;
};

/// Areas for target emission probabilities p_k with no-photon probability `vacuum_prob`.
/// The remaining ground population entering pulse k is R_k = vacuum_prob + sum_{j>=k} p_j and
/// theta_k = 2 atan2(sqrt(p_k), sqrt(R_k - p_k)), i.e. 2 arcsin(sqrt(p_k / R_k)).
/// Bins after the ground state is exhausted get theta = 0.
PulseAngles compile_angles(std::span<const double> probs, std::span<const double> phases,
                           double vacuum_prob);

/// Same, with vacuum_prob = 1 - sum p_k. Throws ValidationError when sum p_k > 1, any
/// p_k < 0, or p_k > 0 after the ground state is exhausted.
PulseAngles compile_angles(std::span<const double> probs, std::span<const double> phases);

PulseSequence compile_sequence(std::span<const double> target_probs, std::span<const double> phases,
                               const CompileOptions& options = {});

/// Lossless delta-pulse prediction of the emitted photon:
///   c_k = e^{i phi_k} sin(theta_k/2) prod_{j<k} cos(theta_j/2),  vac = prod_j cos(theta_j/2)
TimeBinState sequence_amplitudes(const PulseSequence& seq);
TimeBinState sequence_amplitudes(const PulseAngles& angles);

/// Inverse of sequence_amplitudes. Requires vac real and >= 0 (to 1e-12).
PulseSequence round_trip(const TimeBinState& state, const CompileOptions& options = {});
PulseAngles angles_for_state(const TimeBinState& state);

}  // namespace qdw
