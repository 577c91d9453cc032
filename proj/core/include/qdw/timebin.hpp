#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qdw {

/// Single photon spread over d time bins plus a vacuum component:
///   |psi> = vac |0...0> + sum_k amps[k] |1 in bin k>
class TimeBinState {
public:
  static constexpr double kNormTolerance = 1e-9;

  /// Throws ValidationError on d == 0 or |vac|^2 + sum |amps|^2 != 1.
  TimeBinState(std::vector<std::complex<double>> amps, std::complex<double> vac);

  std::size_t bins() const noexcept { return amps_.size(); }
  std::span<const std::complex<double>> amps() const noexcept { return amps_; }
  std::complex<double> amp(std::size_t k) const { return amps_.at(k); }
  std::complex<double> vac() const noexcept { return vac_; }

  double bin_probability(std::size_t k) const { return std::norm(amps_.at(k)); }
  double photon_probability() const;

private:
  std::vector<std::complex<double>> amps_;
  std::complex<double> vac_;
};

/// Equal-amplitude W-state over d bins: every amplitude 1/sqrt(d).
TimeBinState wstate(std::size_t d);

/// Photon with certainty in bin k of d.
TimeBinState single_bin_state(std::size_t d, std::size_t k);

TimeBinState vacuum_state(std::size_t d);

/// |<a|b>|^2 including the vacuum component. Throws ValidationError on mismatched d.
double fidelity(const TimeBinState& a, const TimeBinState& b);

}  // namespace qdw
