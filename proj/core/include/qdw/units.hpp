#pragma once

// Time is in ns, angular rates in rad/ns, energies in ueV.

namespace qdw {

inline constexpr double kPi = 3.14159265358979323846;

/// Reduced Planck constant in ueV*ns.
inline constexpr double kHbarMicroEvNs = 0.658212;

constexpr double microev_to_rad_per_ns(double energy_uev) { return energy_uev / kHbarMicroEvNs; }
constexpr double rad_per_ns_to_microev(double rate) { return rate * kHbarMicroEvNs; }

}  // namespace qdw
