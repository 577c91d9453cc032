#include "qdw/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "qdw/correlations.hpp"
#include "qdw/errors.hpp"

namespace qdw {

namespace {

constexpr int kTBar = idx(Level::TBar);

bool detector_active(const DetectorModel& m) {
  return m.efficiency < 1.0 || m.dark_rate > 0.0 || m.jitter_sigma > 0.0;
}

DensityMatrix initial_state(Scheme scheme) {
  return scheme == Scheme::Deterministic ? DensityMatrix::pure(Level::HBar) : DensityMatrix::mixed_ground();
}

ExperimentSpec with_bins(const ExperimentSpec& spec, std::size_t d) {
  if (d == 0) throw ValidationError("bin count d must be >= 1");
  ExperimentSpec s = spec;
  if (s.target.probs.empty()) {
    s.target.bins = d;
  } else if (s.target.probs.size() != d) {
    throw ValidationError(fmt::format("target lists {} probabilities but d = {}", s.target.probs.size(), d));
  }
  if (!s.target.phases.empty() && s.target.phases.size() != d) {
    throw ValidationError(fmt::format("target lists {} phases but d = {}", s.target.phases.size(), d));
  }
  return s;
}

TrajectoryOptions trajectory_options(const SimulationOptions& sim) {
  TrajectoryOptions o;
  o.n_reps = sim.n_reps;
  o.threads = sim.threads;
  o.delta_pulses = sim.delta_pulses;
  o.dt = sim.traj_dt;
  o.reset_emission_prob = sim.reset_emission_prob;
  return o;
}

std::vector<ClickRecord> simulate_clicks(const ExperimentSpec& spec, const PulseSequence& seq, Scheme scheme) {
  auto records = sample_trajectories(initial_state(scheme), seq, spec.params, spec.n_traj, spec.seed,
                                     trajectory_options(spec.sim));
  if (detector_active(spec.analysis.detector)) records = apply_detector(records, spec.analysis.detector, spec.seed);
  return records;
}

// Enhanced intensity and regression G1 at lags 1..max_lag (in units of `lag`) on the stored
// master-equation grid of one repetition. Quasi-static mode is averaged over its quadrature.
struct RegressionSeries {
  SampledSeries flux;       // every cell
  SampledSeries intensity;  // stored samples only
  std::vector<G1Series> g1;
  HealthLog health;
};

RegressionSeries regression_series(const DensityMatrix& rho0, const PulseSequence& seq, const SystemParams& params,
                                   const SimulationOptions& sim, double lag, std::size_t max_lag) {
  if (sim.g1_stride == 0 || sim.g1_stride % 2 == 0) throw ValidationError("g1_stride must be odd");
  const double period = seq.rep_period;
  const double cells = period / sim.dt;
  if (std::abs(cells - std::round(cells)) > 1e-6) {
    throw ValidationError(fmt::format("dt {} ns must divide the repetition period {} ns", sim.dt, period));
  }
  const TimeGrid grid{0.5 * sim.dt, period - 0.5 * sim.dt, sim.dt};
  const double h = sim.dt * static_cast<double>(sim.g1_stride);

  std::vector<double> taus;
  for (std::size_t l = 1; l <= max_lag; ++l) taus.push_back(static_cast<double>(l) * lag);

  RegressionSeries out;
  out.intensity.t_start = grid.t_start;
  out.intensity.dt = h;
  out.flux.t_start = grid.t_start;
  out.flux.dt = sim.dt;
  std::size_t n = 0;
  for (const auto& real : static_realizations(params, EvolveOptions{}.quasistatic_nodes)) {
    EvolveOptions eo;
    eo.delta_pulses = sim.delta_pulses;
    eo.store_stride = sim.g1_stride;
    eo.ground_detuning = real.ground_detuning;
    const EvolutionResult res = evolve_master(rho0, seq, params, grid, eo);
    out.health.absorb(res.health);
    if (n == 0) {
      n = res.stored_index.size();
      out.intensity.values.assign(n, 0.0);
      out.flux.values.assign(res.times.size(), 0.0);
      out.g1.assign(max_lag, G1Series{});
      for (std::size_t l = 0; l < max_lag; ++l) {
        out.g1[l] = {grid.t_start, h, taus[l], std::vector<std::complex<double>>(n)};
      }
    }
    CorrelationOptions co;
    co.dt = sim.dt;
    co.delta_pulses = sim.delta_pulses;
    co.ground_detuning = real.ground_detuning;
    for (std::size_t k = 0; k < res.times.size(); ++k) out.flux.values[k] += real.weight * res.enhanced_flux(k);
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t k = res.stored_index[s];
      out.intensity.values[s] += real.weight * res.enhanced_flux(k);
      if (taus.empty() || std::abs(res.states[s](kTBar, kTBar)) == 0.0) continue;
      const auto g = two_time_corr(res.states[s], params, seq, res.times[k], taus, CorrelationKind::G1, co);
      for (std::size_t l = 0; l < max_lag; ++l) out.g1[l].values[s] += real.weight * g[l];
    }
  }
  return out;
}

std::vector<double> default_phases(const std::vector<double>& phases) {
  if (!phases.empty()) return phases;
  std::vector<double> out;
  for (int k = 0; k < 8; ++k) out.push_back(2.0 * std::numbers::pi * k / 8.0);
  return out;
}

}  // namespace

std::vector<double> TargetSpec::resolved_probs(Scheme scheme) const {
  if (!probs.empty()) return probs;
  if (bins == 0) throw ValidationError("target.bins must be >= 1");
  const double sum = scheme == Scheme::Deterministic ? 1.0 : total;
  if (!(sum > 0.0 && sum <= 1.0)) throw ValidationError(fmt::format("target.total = {} must lie in (0, 1]", sum));
  return std::vector<double>(bins, sum / static_cast<double>(bins));
}

std::vector<double> TargetSpec::resolved_phases(std::size_t d) const {
  if (phases.empty()) return std::vector<double>(d, 0.0);
  if (phases.size() != d) throw ValidationError(fmt::format("target lists {} phases for {} bins", phases.size(), d));
  return phases;
}

PulseSequence wstate_sequence(const ExperimentSpec& spec, Scheme scheme) {
  if (spec.sequence) {
    spec.sequence->validate();
    return *spec.sequence;
  }
  const auto probs = spec.target.resolved_probs(scheme);
  const auto phases = spec.target.resolved_phases(probs.size());
  PulseSequence seq = compile_sequence(probs, phases, spec.compile);
  if (scheme == Scheme::Weak) {
    seq.resets = {ResetPulse{0.0, spec.sim.reset_p_rand}};
  } else {
    seq.prepare_hbar = true;
  }
  seq.validate();
  return seq;
}

std::vector<TimeWindow> bin_windows(const PulseSequence& seq, bool delta_pulses) {
  std::vector<TimeWindow> out;
  for (const auto& p : seq.pulses) {
    const double start = delta_pulses ? p.center() : p.t0;
    out.emplace_back(start, std::min(start + seq.bin_spacing, seq.rep_period));
  }
  return out;
}

SpinPumpingResult run_spin_pumping(const ExperimentSpec& spec) {
  const SpinPumpingOptions& opt = spec.pumping;
  if (!(opt.duration > 0.0)) throw ValidationError("pumping.duration must be > 0");
  if (!(opt.omega >= 0.0)) throw ValidationError("pumping.omega must be >= 0");
  PulseSequence seq;
  seq.rep_period = opt.duration;
  seq.bin_spacing = opt.duration;
  seq.pulses = {Pulse{0.0, opt.duration, opt.omega * opt.duration, 0.0, PulseShape::Square}};

  const double dt = spec.sim.dt;
  const TimeGrid grid{0.5 * dt, opt.duration - 0.5 * dt, dt};
  const EvolutionResult res = evolve_master(DensityMatrix::mixed_ground(), seq, spec.params, grid);

  SpinPumpingResult out;
  out.health = res.health;
  out.flux.t_start = grid.t_start;
  out.flux.dt = dt;
  for (std::size_t k = 0; k < res.times.size(); ++k) out.flux.values.push_back(res.enhanced_flux(k));
  const double peak = *std::max_element(out.flux.values.begin(), out.flux.values.end());
  if (!(peak > 0.0)) throw NumericalError("spin pumping: the ENHANCED flux is identically zero (is the drive on?)");

  double start = opt.fit_start;
  if (start < 0.0 && opt.oscillatory) start = 0.0;
  if (start < 0.0) {
    // Past the rise and the fast transients: first sample after the peak below e^-2 of it.
    const auto top = std::max_element(out.flux.values.begin(), out.flux.values.end()) - out.flux.values.begin();
    start = res.times.back();
    for (auto k = static_cast<std::size_t>(top); k < res.times.size(); ++k) {
      if (out.flux.values[k] < std::exp(-2.0) * peak) {
        start = res.times[k];
        break;
      }
    }
  }
  std::vector<double> t;
  std::vector<double> y;
  for (std::size_t k = 0; k < res.times.size(); ++k) {
    if (res.times[k] < start) continue;
    t.push_back(res.times[k]);
    y.push_back(out.flux.values[k]);
  }
  if (opt.oscillatory) {
    out.fit = fit_damped_oscillation(t, y);
    out.rabi_frequency = out.fit.value("omega");
  } else {
    out.fit = fit_exponential(t, y);
  }
  out.tau_p = out.fit.value(opt.oscillatory ? "tau_p" : "tau");
  return out;
}

std::complex<double> BinCoherences::degree(std::size_t j, std::size_t k) const {
  if (j == k) return 1.0;
  const auto [a, b] = std::minmax(j, k);
  const double norm = std::sqrt(populations.at(a) * populations.at(b));
  if (!(norm > 0.0)) return 0.0;
  const std::complex<double> v = g1(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) / norm;
  return j < k ? v : std::conj(v);
}

BinCoherences bin_coherences(const DensityMatrix& rho0, const PulseSequence& seq, const SystemParams& params,
                             const SimulationOptions& sim) {
  const std::size_t d = seq.pulses.size();
  const auto windows = bin_windows(seq, sim.delta_pulses);
  const RegressionSeries series = regression_series(rho0, seq, params, sim, seq.bin_spacing, d > 0 ? d - 1 : 0);

  BinCoherences out;
  out.health = series.health;
  out.populations.assign(d, 0.0);
  out.g1 = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  // Populations come from the full flux. G1 is only known on the stored samples, so the ratio
  // G1 / I is interpolated inside each window and weighted by the full flux. A delta pulse makes
  // the flux jump by a large factor within one stored block, while the ratio stays smooth.
  const SampledSeries& flux = series.flux;
  const SampledSeries& coarse = series.intensity;
  for (std::size_t j = 0; j < d; ++j) {
    const auto [a, b] = windows[j];
    std::vector<double> ts;
    std::vector<std::vector<std::complex<double>>> ratio(d);
    for (std::size_t s = 0; s < coarse.values.size(); ++s) {
      const double t = coarse.time(s);
      if (t < a || t >= b || !(coarse.values[s] > 0.0)) continue;
      ts.push_back(t);
      for (std::size_t k = j + 1; k < d; ++k) ratio[k].push_back(series.g1[k - j - 1].values[s] / coarse.values[s]);
    }
    auto interp = [&](const std::vector<std::complex<double>>& r, double t) -> std::complex<double> {
      if (t <= ts.front()) return r.front();
      if (t >= ts.back()) return r.back();
      const auto hi = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
      const double w = (t - ts[hi - 1]) / (ts[hi] - ts[hi - 1]);
      return (1.0 - w) * r[hi - 1] + w * r[hi];
    };
    for (std::size_t c = 0; c < flux.values.size(); ++c) {
      const double t = flux.time(c);
      if (t < a || t >= b) continue;
      const double weight = flux.dt * flux.values[c];
      out.populations[j] += weight;
      if (ts.empty()) continue;
      for (std::size_t k = j + 1; k < d; ++k) {
        out.g1(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) += weight * interp(ratio[k], t);
      }
    }
  }
  return out;
}

WStateResult run_wstate(const ExperimentSpec& spec_in, Scheme scheme, std::size_t d) {
  const ExperimentSpec spec = with_bins(spec_in, d);
  WStateResult out;
  out.sequence = wstate_sequence(spec, scheme);
  const PulseSequence& seq = out.sequence;
  d = seq.pulses.size();

  out.records = simulate_clicks(spec, seq, scheme);
  out.histogram = time_resolved_histogram(out.records, Channel::Enhanced, spec.analysis.hist_bin_ns, seq.rep_period);

  const auto windows = bin_windows(seq, spec.sim.delta_pulses);
  const double trials = static_cast<double>(spec.n_traj) * static_cast<double>(spec.sim.n_reps);
  for (const auto& [a, b] : windows) {
    double count = 0.0;
    for (const auto& r : out.records) {
      for (const auto& c : r.clicks) {
        if (c.channel != Channel::Enhanced) continue;
        const double f = std::fmod(c.time_ns, seq.rep_period);
        if (f >= a && f < b) count += 1.0;
      }
    }
    const double p = count / trials;
    out.bin_probs.push_back(p);
    out.bin_prob_stderr.push_back(std::sqrt(std::max(p * (1.0 - p), 1.0 / trials) / trials));
  }

  const BinCoherences coh = bin_coherences(initial_state(scheme), seq, spec.params, spec.sim);
  out.health = coh.health;

  const auto n = static_cast<Eigen::Index>(d + 1);
  out.photon_density = Eigen::MatrixXcd::Zero(n, n);
  double photon = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    photon += out.bin_probs[j];
    for (std::size_t k = 0; k < d; ++k) {
      out.photon_density(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
          coh.degree(j, k) * std::sqrt(out.bin_probs[j] * out.bin_probs[k]);
    }
  }
  out.photon_density(n - 1, n - 1) = std::max(0.0, 1.0 - photon);

  const TimeBinState target = wstate(d);
  std::complex<double> overlap = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      overlap += std::conj(target.amp(j)) * out.photon_density(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) *
                 target.amp(k);
    }
  }
  out.fidelity = std::clamp(overlap.real(), 0.0, 1.0);
  out.heralded_fidelity = photon > 0.0 ? std::clamp(overlap.real() / photon, 0.0, 1.0) : 0.0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(out.photon_density);
  Eigen::VectorXcd v = solver.eigenvectors().col(n - 1);
  Eigen::Index ref = n - 1;
  if (std::abs(v(ref)) < 1e-6) v.cwiseAbs().maxCoeff(&ref);
  v *= std::polar(1.0, -std::arg(v(ref)));
  v /= v.norm();
  std::vector<std::complex<double>> amps(v.data(), v.data() + d);
  out.estimate = TimeBinState(std::move(amps), std::complex<double>(std::max(0.0, v(n - 1).real()), v(n - 1).imag()));
  return out;
}

HbtResult run_hbt(const ExperimentSpec& spec, Scheme scheme) {
  HbtResult out;
  out.sequence = wstate_sequence(spec, scheme);
  const double period = out.sequence.rep_period;
  const FarPeakRange far = spec.analysis.far;
  double max_tau = spec.analysis.max_tau_ns;
  if (max_tau <= 0.0) max_tau = (far.m_max + 1) * period;
  const double record = static_cast<double>(spec.sim.n_reps) * period;
  if (record <= (far.m_max + 0.5) * period) {
    throw ValidationError(fmt::format("n_reps = {} is too short for correlation peaks up to m = {}", spec.sim.n_reps,
                                      far.m_max));
  }
  out.records = simulate_clicks(spec, out.sequence, scheme);
  out.correlation = hbt_correlate(out.records, max_tau, spec.analysis.hbt_bin_ns, spec.seed);
  out.g2 = g2_zero_estimate(out.correlation, period, far);
  out.side_peaks = side_peak_profile(out.correlation, period, far.m_max);
  if (!spec.analysis.windows.empty()) {
    const auto filtered = temporal_filter(out.records, spec.analysis.windows, period);
    out.g2_filtered = g2_zero_estimate(hbt_correlate(filtered, max_tau, spec.analysis.hbt_bin_ns, spec.seed), period, far);
  }
  return out;
}

InterferenceResult run_interference(const ExperimentSpec& spec_in, Scheme scheme, std::size_t d,
                                    const std::vector<double>& phases_in) {
  const ExperimentSpec spec = with_bins(spec_in, d);
  if (d < 2) throw ValidationError("interference needs d >= 2");
  const auto phases = default_phases(phases_in);
  if (phases.size() < 4) throw ValidationError("interference needs >= 4 phases");

  InterferenceResult out;
  out.sequence = wstate_sequence(spec, scheme);
  const PulseSequence& seq = out.sequence;
  const double delay = spec.analysis.umi_delay_ns > 0.0 ? spec.analysis.umi_delay_ns : seq.bin_spacing;
  const RegressionSeries series = regression_series(initial_state(scheme), seq, spec.params, spec.sim, delay, 1);
  out.health = series.health;

  const auto windows = bin_windows(seq, spec.sim.delta_pulses);
  for (std::size_t j = 0; j + 1 < windows.size(); ++j) out.pairs.push_back(PairVisibility{j, {}, {}});
  for (double phi : phases) {
    Histogram hist = umi_intensity(series.g1[0], series.intensity, UMIConfig{delay, phi});
    for (auto& pair : out.pairs) {
      const auto& w = windows[pair.first_bin];
      pair.scan.emplace_back(phi, hist.integrate(w.first + delay, w.second + delay));
    }
    out.outputs.emplace_back(phi, std::move(hist));
  }
  for (auto& pair : out.pairs) pair.fit = visibility(pair.scan);
  return out;
}

double predicted_visibility(double t2star, double delay, CoherenceModel model) {
  if (!(t2star > 0.0) || !(delay >= 0.0)) throw ValidationError("predicted_visibility needs T2* > 0 and delay >= 0");
  const double x = delay / t2star;
  return model == CoherenceModel::Markov ? std::exp(-x) : std::exp(-x * x);
}

double estimate_t2star(double visibility, double delay, CoherenceModel model) {
  if (!(visibility > 0.0 && visibility < 1.0)) {
    throw ValidationError(fmt::format("estimate_t2star needs 0 < V < 1, got {}", visibility));
  }
  if (!(delay > 0.0)) throw ValidationError("estimate_t2star needs delay > 0");
  const double l = -std::log(visibility);
  return model == CoherenceModel::Markov ? delay / l : delay / std::sqrt(l);
}

}  // namespace qdw
