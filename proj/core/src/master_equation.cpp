#include "qdw/master_equation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "qdw/errors.hpp"
#include "qdw/liouvillian.hpp"

namespace qdw {

namespace {

constexpr double kStepBound = 0.1;

using Counters = Eigen::Vector4d;

// Per-channel diagonal of sum L^dag L, so <L^dag L> = sum_k rate(k) rho_kk.
std::array<Eigen::Vector4d, 4> channel_diagonals(const Liouvillian& L) {
  std::array<Eigen::Vector4d, 4> out;
  for (int c = 0; c < 4; ++c) out[c] = L.channel_rate_operator(static_cast<Channel>(c)).diagonal().real();
  return out;
}

Counters channel_flux(const std::array<Eigen::Vector4d, 4>& diag, const OperatorMatrix& x) {
  const Eigen::Vector4d pops = x.diagonal().real();
  Counters f;
  for (int c = 0; c < 4; ++c) f(c) = diag[c].dot(pops);
  return f;
}

struct Stepper {
  const Liouvillian& L;
  const std::array<Eigen::Vector4d, 4>& diag;

  // One RK4 step of the density matrix and the emission counters over [t, t + h].
  template <class Drive>
  void step(OperatorMatrix& x, Counters& n, double t, double h, const Drive& drive) const {
    const Complex w0 = drive(t);
    const Complex wm = drive(t + 0.5 * h);
    const Complex w1 = drive(t + h);
    const OperatorMatrix k1 = L.apply(x, w0);
    const Counters c1 = channel_flux(diag, x);
    const OperatorMatrix x2 = x + (0.5 * h) * k1;
    const OperatorMatrix k2 = L.apply(x2, wm);
    const Counters c2 = channel_flux(diag, x2);
    const OperatorMatrix x3 = x + (0.5 * h) * k2;
    const OperatorMatrix k3 = L.apply(x3, wm);
    const Counters c3 = channel_flux(diag, x3);
    const OperatorMatrix x4 = x + h * k3;
    const OperatorMatrix k4 = L.apply(x4, w1);
    const Counters c4 = channel_flux(diag, x4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    n += (h / 6.0) * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
  }
};

void apply_event(OperatorMatrix& x, const SequenceEvent& e) {
  switch (e.kind) {
    case SequenceEvent::Kind::Prepare:
      apply_prepare_hbar(x);
      break;
    case SequenceEvent::Kind::Reset:
      apply_reset(x, e.value);
      break;
    case SequenceEvent::Kind::DeltaPulse: {
      const OperatorMatrix u = delta_pulse_unitary(e.value, e.phase);
      x = u * x * u.adjoint();
      break;
    }
    case SequenceEvent::Kind::Edge:
      break;
  }
}

// Advance x from t_a to t_b in equal substeps no longer than dt, assuming no event inside.
void integrate_segment(const Stepper& st, OperatorMatrix& x, Counters& n, const PulseSequence& seq,
                       double t_a, double t_b, double dt, bool delta_pulses) {
  const double span = t_b - t_a;
  if (span <= 0.0) return;
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(span / dt - 1e-9)));
  const double h = span / static_cast<double>(steps);
  const SegmentDrive drive(seq, t_a, t_b, delta_pulses);
  for (std::size_t s = 0; s < steps; ++s) {
    st.step(x, n, t_a + static_cast<double>(s) * h, h, drive);
  }
}

using SampleSink = std::function<void(std::size_t, const OperatorMatrix&, const Counters&)>;

void run_realization(const OperatorMatrix& rho0, const PulseSequence& seq, const SystemParams& params,
                     double ground_detuning, const TimeGrid& grid, bool delta_pulses,
                     const SampleSink& sink) {
  const Liouvillian L(params, ground_detuning);
  const auto diag = channel_diagonals(L);
  const Stepper st{L, diag};
  const std::size_t steps = grid.steps();
  const double t_end = grid.time(steps);
  const auto events = collect_events(seq, grid.t_start, t_end, true, delta_pulses);

  OperatorMatrix x = rho0;
  Counters n = Counters::Zero();
  std::size_t next = 0;
  while (next < events.size() && events[next].time <= grid.t_start) apply_event(x, events[next++]);
  sink(0, x, n);

  for (std::size_t k = 0; k < steps; ++k) {
    double cur = grid.time(k);
    const double t_b = grid.time(k + 1);
    while (next < events.size() && events[next].time <= t_b) {
      const SequenceEvent& e = events[next++];
      integrate_segment(st, x, n, seq, cur, e.time, grid.dt, delta_pulses);
      cur = std::max(cur, e.time);
      apply_event(x, e);
    }
    integrate_segment(st, x, n, seq, cur, t_b, grid.dt, delta_pulses);
    sink(k + 1, x, n);
  }
}

}  // namespace

std::size_t TimeGrid::steps() const {
  return static_cast<std::size_t>(std::floor((t_end - t_start) / dt + 1e-9));
}

void TimeGrid::validate() const {
  if (!(dt > 0.0)) throw ValidationError(fmt::format("time grid dt must be > 0 (got {})", dt));
  if (!(t_end > t_start)) throw ValidationError(fmt::format("time grid needs t_end > t_start (got [{}, {}])", t_start, t_end));
  if ((t_end - t_start) / dt > kMaxSteps) {
    throw ValidationError(fmt::format("time grid has {:.3g} steps, limit is {:.0e}", (t_end - t_start) / dt, kMaxSteps));
  }
  if (steps() == 0) throw ValidationError("time grid shorter than one step");
}

void HealthLog::absorb(const StateHealth& h) {
  max_trace_error = std::max(max_trace_error, h.trace_error);
  max_hermiticity_error = std::max(max_hermiticity_error, h.hermiticity_error);
  min_eigenvalue = std::min(min_eigenvalue, h.min_eigenvalue);
}

void HealthLog::absorb(const HealthLog& other) {
  max_trace_error = std::max(max_trace_error, other.max_trace_error);
  max_hermiticity_error = std::max(max_hermiticity_error, other.max_hermiticity_error);
  min_eigenvalue = std::min(min_eigenvalue, other.min_eigenvalue);
}

void check_step_size(const SystemParams& params, const PulseSequence& seq, double dt, bool delta_pulses,
                     double max_ground_detuning) {
  const Liouvillian L(params, max_ground_detuning);
  const double rate = L.fastest_rate(delta_pulses ? 0.0 : seq.max_peak_rabi());
  if (dt * rate >= kStepBound) {
    throw ValidationError(fmt::format(
        "step dt = {} ns is too coarse: dt * fastest rate = {:.4f} must be < {} (use dt < {:.3g} ns)", dt,
        dt * rate, kStepBound, kStepBound / rate));
  }
}

EvolutionResult evolve_master(const DensityMatrix& rho0, const PulseSequence& seq, const SystemParams& params,
                              const TimeGrid& grid, const EvolveOptions& options) {
  params.validate();
  seq.validate();
  grid.validate();

  std::vector<StaticRealization> realizations;
  if (options.ground_detuning) {
    realizations.push_back({1.0, *options.ground_detuning});
  } else {
    realizations = static_realizations(params, options.quasistatic_nodes);
  }
  double max_detuning = 0.0;
  for (const auto& r : realizations) max_detuning = std::max(max_detuning, std::abs(r.ground_detuning));
  check_step_size(params, seq, grid.dt, options.delta_pulses, max_detuning);

  const std::size_t samples = grid.steps() + 1;
  const Liouvillian reference(params);
  const auto diag = channel_diagonals(reference);

  EvolutionResult out;
  out.times.resize(samples);
  out.populations.resize(samples);
  out.flux.resize(samples);
  out.emitted.resize(samples);

  auto process = [&](std::size_t k, const OperatorMatrix& x, const Counters& n) {
    out.times[k] = grid.time(k);
    const Counters f = channel_flux(diag, x);
    for (int l = 0; l < kLevels; ++l) out.populations[k][l] = x(l, l).real();
    for (int c = 0; c < 4; ++c) {
      out.flux[k][c] = f(c);
      out.emitted[k][c] = n(c);
    }
    const StateHealth h = inspect_state(x);
    out.health.absorb(h);
    if (options.check_positivity &&
        (h.min_eigenvalue < -DensityMatrix::kTolerance || h.trace_error > DensityMatrix::kTolerance)) {
      throw NumericalError(fmt::format(
          "state left the physical set at t = {:.6f} ns (min eigenvalue {:.3e}, trace error {:.3e}); "
          "reduce dt = {} ns",
          out.times[k], h.min_eigenvalue, h.trace_error, grid.dt));
    }
    if (options.store_stride > 0 && k % options.store_stride == 0) {
      out.stored_index.push_back(k);
      out.states.push_back(x);
    }
    if (k + 1 == samples) out.final_state = x;
  };

  if (realizations.size() == 1) {
    run_realization(rho0.matrix(), seq, params, realizations[0].ground_detuning, grid, options.delta_pulses,
                    process);
    return out;
  }

  // Averages over static realisations need every sample before the health checks apply.
  std::vector<OperatorMatrix> rho(samples, OperatorMatrix::Zero());
  std::vector<Counters> emitted(samples, Counters::Zero());
  for (const auto& r : realizations) {
    run_realization(rho0.matrix(), seq, params, r.ground_detuning, grid, options.delta_pulses,
                    [&](std::size_t k, const OperatorMatrix& x, const Counters& n) {
                      rho[k] += r.weight * x;
                      emitted[k] += r.weight * n;
                    });
  }
  for (std::size_t k = 0; k < samples; ++k) process(k, rho[k], emitted[k]);
  return out;
}

void propagate_operator(OperatorMatrix& x, const PulseSequence& seq, const SystemParams& params,
                        double ground_detuning, double t_a, double t_b, double dt, bool delta_pulses) {
  const Liouvillian L(params, ground_detuning);
  const auto diag = channel_diagonals(L);
  const Stepper st{L, diag};
  Counters n = Counters::Zero();
  double cur = t_a;
  for (const auto& e : collect_events(seq, t_a, t_b, false, delta_pulses)) {
    integrate_segment(st, x, n, seq, cur, e.time, dt, delta_pulses);
    cur = std::max(cur, e.time);
    apply_event(x, e);
  }
  integrate_segment(st, x, n, seq, cur, t_b, dt, delta_pulses);
}

}  // namespace qdw
