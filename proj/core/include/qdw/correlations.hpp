#pragma once

#include <complex>
#include <vector>

#include "qdw/pulse.hpp"
#include "qdw/system.hpp"

namespace qdw {

enum class CorrelationKind { G1, G2 };

struct CorrelationOptions {
  double dt = 0.001;
  bool delta_pulses = false;
  double ground_detuning = 0.0;
};

/// Two-time correlations of the enhanced-mode field by quantum regression, sigma = |h><Tbar|:
///   G1(t, tau) = gamma_enh     tr[sigma^dag          Phi_tau(sigma rho(t))]
///   G2(t, tau) = gamma_enh^2   tr[sigma^dag sigma    Phi_tau(sigma rho(t) sigma^dag)]
/// Phi_tau propagates from t to t + tau with the drive of `seq`. taus must be sorted and >= 0.
std::vector<std::complex<double>> two_time_corr(const OperatorMatrix& rho_t,
                                                const SystemParams& params,
                                                const PulseSequence& seq, double t,
                                                const std::vector<double>& taus,
                                                CorrelationKind kind,
                                                const CorrelationOptions& options = {});

}  // namespace qdw
