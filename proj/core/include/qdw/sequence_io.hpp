#pragma once

#include <string>
#include <string_view>

#include "qdw/pulse.hpp"

namespace qdw {

/// JSON document:
///   {"rep_period_ns": f, "bin_spacing_ns": f,
///    "pulses": [{"t0": f, "dur": f, "area_rad": f, "phase_rad": f, "shape": "square"|"gaussian"}],
///    "resets": [{"t0": f, "p_rand": f}]}
/// plus the optional flag "prepare_hbar" (written only when set).
std::string sequence_to_json(const PulseSequence& seq, int indent = 2);

/// "pulses" is required; the other keys fall back to their defaults. Throws ValidationError on
/// malformed documents or invalid sequences.
PulseSequence sequence_from_json(std::string_view text);

}  // namespace qdw
