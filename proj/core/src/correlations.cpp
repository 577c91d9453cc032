#include "qdw/correlations.hpp"

#include <fmt/format.h>

#include "qdw/errors.hpp"
#include "qdw/master_equation.hpp"

namespace qdw {

namespace {
constexpr int kH = idx(Level::H);
constexpr int kTBar = idx(Level::TBar);
}  // namespace

std::vector<std::complex<double>> two_time_corr(const OperatorMatrix& rho_t, const SystemParams& params,
                                                const PulseSequence& seq, double t,
                                                const std::vector<double>& taus, CorrelationKind kind,
                                                const CorrelationOptions& options) {
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (taus[k] < 0.0 || (k > 0 && taus[k] < taus[k - 1])) {
      throw ValidationError(fmt::format("two_time_corr: delays must be sorted and >= 0 (tau[{}] = {})", k, taus[k]));
    }
  }
  // sigma rho for G1, sigma rho sigma^dag for G2.
  OperatorMatrix x = OperatorMatrix::Zero();
  double prefactor = params.gamma_enh;
  if (kind == CorrelationKind::G1) {
    x.row(kH) = rho_t.row(kTBar);
  } else {
    x(kH, kH) = rho_t(kTBar, kTBar);
    prefactor *= params.gamma_enh;
  }

  std::vector<std::complex<double>> out;
  out.reserve(taus.size());
  double cur = t;
  for (double tau : taus) {
    propagate_operator(x, seq, params, options.ground_detuning, cur, t + tau, options.dt, options.delta_pulses);
    cur = t + tau;
    out.push_back(prefactor * (kind == CorrelationKind::G1 ? x(kH, kTBar) : x(kTBar, kTBar)));
  }
  return out;
}

}  // namespace qdw
