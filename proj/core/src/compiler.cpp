#include "qdw/compiler.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "qdw/errors.hpp"

namespace qdw {

namespace {

constexpr double kProbTolerance = 1e-12;

std::vector<double> resolve_phases(std::span<const double> phases, std::size_t d) {
  if (phases.empty()) return std::vector<double>(d, 0.0);
  if (phases.size() != d) {
    throw ValidationError(fmt::format("{} phases given for {} target probabilities", phases.size(), d));
  }
  return {phases.begin(), phases.end()};
}

}  // namespace

PulseAngles compile_angles(std::span<const double> probs, std::span<const double> phases,
                           double vacuum_prob) {
  if (probs.empty()) throw ValidationError("at least one target probability is required");
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (!(probs[k] >= 0.0) || !std::isfinite(probs[k])) {
      throw ValidationError(fmt::format("target_probs[{}] = {} must be >= 0", k, probs[k]));
    }
  }
  if (!(vacuum_prob >= 0.0)) throw ValidationError("vacuum probability must be >= 0");

  PulseAngles out;
  out.phases = resolve_phases(phases, probs.size());
  out.areas.resize(probs.size());
  // Ground population left after pulse k, accumulated from the end for accuracy near exhaustion.
  double remaining = vacuum_prob;
  for (std::size_t k = probs.size(); k-- > 0;) {
    out.areas[k] = 2.0 * std::atan2(std::sqrt(probs[k]), std::sqrt(remaining));
    remaining += probs[k];
  }
  return out;
}

PulseAngles compile_angles(std::span<const double> probs, std::span<const double> phases) {
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (total > 1.0 + kProbTolerance) {
    throw ValidationError(fmt::format("target probabilities sum to {} but must be <= 1", total));
  }
  double before = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (1.0 - before <= kProbTolerance && probs[k] > kProbTolerance) {
      throw ValidationError(fmt::format(
          "target_probs[{}] = {} but the ground state is exhausted by the earlier bins", k, probs[k]));
    }
    before += probs[k];
  }
  double vacuum = 1.0 - total;
  if (vacuum < kProbTolerance) vacuum = 0.0;
  return compile_angles(probs, phases, vacuum);
}

PulseSequence compile_sequence(std::span<const double> target_probs, std::span<const double> phases,
                               const CompileOptions& options) {
  const PulseAngles angles = compile_angles(target_probs, phases);
  PulseSequence seq;
  seq.bin_spacing = options.bin_spacing;
  seq.rep_period = options.rep_period;
  for (std::size_t k = 0; k < angles.areas.size(); ++k) {
    Pulse p;
    p.t0 = options.first_pulse + static_cast<double>(k) * options.bin_spacing;
    p.duration = options.pulse_duration;
    p.area = angles.areas[k];
    p.phase = angles.phases[k];
    p.shape = options.shape;
    seq.pulses.push_back(p);
  }
  if (options.pulse_duration > options.bin_spacing) {
    throw ValidationError(fmt::format("pulse duration {} exceeds the bin spacing {}",
                                      options.pulse_duration, options.bin_spacing));
  }
  seq.validate();
  return seq;
}

TimeBinState sequence_amplitudes(const PulseAngles& angles) {
  std::vector<std::complex<double>> amps(angles.areas.size());
  double survive = 1.0;
  for (std::size_t k = 0; k < amps.size(); ++k) {
    const double half = 0.5 * angles.areas[k];
    amps[k] = std::polar(survive * std::sin(half), angles.phases[k]);
    survive *= std::cos(half);
  }
  return TimeBinState(std::move(amps), survive);
}

TimeBinState sequence_amplitudes(const PulseSequence& seq) {
  PulseAngles angles;
  for (const auto& p : seq.pulses) {
    angles.areas.push_back(p.area);
    angles.phases.push_back(p.phase);
  }
  return sequence_amplitudes(angles);
}

PulseAngles angles_for_state(const TimeBinState& state) {
  const auto vac = state.vac();
  if (std::abs(vac.imag()) > kProbTolerance || vac.real() < -kProbTolerance) {
    throw ValidationError("round_trip needs a real, non-negative vacuum amplitude");
  }
  std::vector<double> probs;
  std::vector<double> phases;
  for (const auto& c : state.amps()) {
    probs.push_back(std::norm(c));
    phases.push_back(c == std::complex<double>(0.0) ? 0.0 : std::arg(c));
  }
  return compile_angles(probs, phases, std::norm(vac));
}

PulseSequence round_trip(const TimeBinState& state, const CompileOptions& options) {
  const PulseAngles angles = angles_for_state(state);
  PulseSequence seq;
  seq.bin_spacing = options.bin_spacing;
  seq.rep_period = options.rep_period;
  for (std::size_t k = 0; k < angles.areas.size(); ++k) {
    seq.pulses.push_back({options.first_pulse + static_cast<double>(k) * options.bin_spacing,
                          options.pulse_duration, angles.areas[k], angles.phases[k], options.shape});
  }
  seq.validate();
  return seq;
}

}  // namespace qdw
