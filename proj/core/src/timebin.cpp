#include "qdw/timebin.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qdw/errors.hpp"

namespace qdw {

TimeBinState::TimeBinState(std::vector<std::complex<double>> amps, std::complex<double> vac)
    : amps_(std::move(amps)), vac_(vac) {
  if (amps_.empty()) throw ValidationError("time-bin state needs at least one bin");
  double norm = std::norm(vac_);
  for (const auto& a : amps_) norm += std::norm(a);
  if (std::abs(norm - 1.0) > kNormTolerance) {
    throw ValidationError(fmt::format("time-bin state norm is {:.12f}, expected 1", norm));
  }
}

double TimeBinState::photon_probability() const {
  double p = 0.0;
  for (const auto& a : amps_) p += std::norm(a);
  return p;
}

TimeBinState wstate(std::size_t d) {
  if (d == 0) throw ValidationError("wstate: bin count must be >= 1");
  const double a = 1.0 / std::sqrt(static_cast<double>(d));
  return TimeBinState(std::vector<std::complex<double>>(d, a), 0.0);
}

TimeBinState single_bin_state(std::size_t d, std::size_t k) {
  if (k >= d) throw ValidationError(fmt::format("bin {} outside a {}-bin state", k, d));
  std::vector<std::complex<double>> amps(d, 0.0);
  amps[k] = 1.0;
  return TimeBinState(std::move(amps), 0.0);
}

TimeBinState vacuum_state(std::size_t d) {
  return TimeBinState(std::vector<std::complex<double>>(d, 0.0), 1.0);
}

double fidelity(const TimeBinState& a, const TimeBinState& b) {
  if (a.bins() != b.bins()) {
    throw ValidationError(fmt::format("fidelity: bin counts differ ({} vs {})", a.bins(), b.bins()));
  }
  std::complex<double> overlap = std::conj(a.vac()) * b.vac();
  for (std::size_t k = 0; k < a.bins(); ++k) overlap += std::conj(a.amp(k)) * b.amp(k);
  return std::min(1.0, std::norm(overlap));
}

}  // namespace qdw
