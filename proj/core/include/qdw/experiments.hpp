#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "qdw/compiler.hpp"
#include "qdw/detection.hpp"
#include "qdw/fitting.hpp"
#include "qdw/master_equation.hpp"
#include "qdw/pulse.hpp"
#include "qdw/system.hpp"
#include "qdw/timebin.hpp"
#include "qdw/trajectories.hpp"

namespace qdw {

enum class Scheme { Weak, Deterministic };

/// Target emission probabilities. Empty `probs` means `bins` equal shares of `total`.
struct TargetSpec {
  std::size_t bins = 3;
  double total = 0.3;
  std::vector<double> probs;
  std::vector<double> phases;

  std::vector<double> resolved_probs(Scheme scheme) const;
  std::vector<double> resolved_phases(std::size_t d) const;
};

struct SimulationOptions {
  bool delta_pulses = false;
  double dt = 0.002;            // master equation and regression step, ns
  double traj_dt = 0.002;       // trajectory RK4 step inside pulses, ns
  std::size_t n_reps = 12;      // repetitions per trajectory
  unsigned threads = 1;
  double reset_p_rand = 1.0;    // WEAK scheme spin randomisation at the start of a repetition
  double reset_emission_prob = 0.0;
  std::size_t g1_stride = 5;    // odd; G1 sampled every n-th master-equation cell
};

struct AnalysisOptions {
  double hist_bin_ns = 0.05;
  double hbt_bin_ns = 0.125;
  double max_tau_ns = 0.0;  // 0: (far.m_max + 1) rep periods
  FarPeakRange far;
  std::vector<TimeWindow> windows;
  std::vector<double> phases;  // interferometer phases; empty: 8 equally spaced
  double umi_delay_ns = 0.0;   // 0: bin spacing
  DetectorModel detector;
};

struct SpinPumpingOptions {
  double omega = 9.0194;  // CW Rabi frequency, rad/ns
  double duration = 3.0;  // ns
  bool oscillatory = false;
  double fit_start = -1.0;  // ns; negative: where the flux first falls below e^-2 of its peak
                            // (0 in the oscillatory fit)
};

struct ExperimentSpec {
  SystemParams params;
  std::optional<PulseSequence> sequence;  // explicit sequence; otherwise compiled from target
  TargetSpec target;
  CompileOptions compile;
  std::size_t n_traj = 10000;
  std::uint64_t seed = 0;
  SimulationOptions sim;
  AnalysisOptions analysis;
  SpinPumpingOptions pumping;
};

/// Sequence a W-state run uses: the explicit one, or the compiled target with the scheme's
/// initialisation (Weak: a reset at t = 0; Deterministic: ideal |hbar> preparation).
PulseSequence wstate_sequence(const ExperimentSpec& spec, Scheme scheme);

/// [start, start + spacing) windows of each pulse (start = pulse centre under delta pulses).
std::vector<TimeWindow> bin_windows(const PulseSequence& seq, bool delta_pulses);

// -- spin pumping ------------------------------------------------------------------------------

struct SpinPumpingResult {
  FitResult fit;
  double tau_p = 0.0;
  double rabi_frequency = 0.0;  // oscillatory fit only
  SampledSeries flux;           // ENHANCED flux
  HealthLog health;
};

/// CW drive on hbar -> Tbar from the mixed ground state; fits the ENHANCED flux with
/// A exp(-t / tau_p), or with the damped-oscillation model when pumping.oscillatory is set.
SpinPumpingResult run_spin_pumping(const ExperimentSpec& spec);

// -- bin populations and coherences from the master equation ----------------------------------

struct BinCoherences {
  std::vector<double> populations;  // integrated ENHANCED flux per bin window
  Eigen::MatrixXcd g1;              // g1(j, k) = integral over window j of G1(t, t_k - t_j), j < k
  HealthLog health;

  /// |g1(j,k)| / sqrt(P_j P_k), with the phase of g1(j, k).
  std::complex<double> degree(std::size_t j, std::size_t k) const;
};

/// One repetition of the master equation from rho0 plus regression G1 for every bin pair.
BinCoherences bin_coherences(const DensityMatrix& rho0, const PulseSequence& seq,
                             const SystemParams& params, const SimulationOptions& sim);

// -- W-state generation ------------------------------------------------------------------------

struct WStateResult {
  PulseSequence sequence;
  std::vector<ClickRecord> records;
  Histogram histogram;
  std::vector<double> bin_probs;         // per repetition
  std::vector<double> bin_prob_stderr;
  Eigen::MatrixXcd photon_density;       // (d+1)x(d+1), index d is vacuum
  TimeBinState estimate = vacuum_state(1);  // pure-state summary of photon_density
  double fidelity = 0.0;                 // <W_d| rho |W_d>
  double heralded_fidelity = 0.0;        // same, conditioned on a photon
  HealthLog health;
};

WStateResult run_wstate(const ExperimentSpec& spec, Scheme scheme, std::size_t d);

// -- HBT --------------------------------------------------------------------------------------

struct HbtResult {
  PulseSequence sequence;
  std::vector<ClickRecord> records;
  CorrelationHistogram correlation;
  G2Estimate g2;
  std::vector<PeakArea> side_peaks;
  std::optional<G2Estimate> g2_filtered;  // when analysis.windows is set
};

HbtResult run_hbt(const ExperimentSpec& spec, Scheme scheme);

// -- interference ------------------------------------------------------------------------------

struct PairVisibility {
  std::size_t first_bin = 0;  // pair (first_bin, first_bin + 1)
  std::vector<std::pair<double, double>> scan;  // (phase, overlap-bin intensity)
  VisibilityFit fit;
};

struct InterferenceResult {
  PulseSequence sequence;
  std::vector<PairVisibility> pairs;
  std::vector<std::pair<double, Histogram>> outputs;  // UMI output per phase
  HealthLog health;
};

/// Phase scan of the interferometer output for every neighbouring bin pair.
InterferenceResult run_interference(const ExperimentSpec& spec, Scheme scheme, std::size_t d,
                                    const std::vector<double>& phases);

// -- T2* ---------------------------------------------------------------------------------------

enum class CoherenceModel { Markov, Gauss };

/// Markov: V = exp(-delay / T2*). Gauss: V = exp(-(delay / T2*)^2).
double predicted_visibility(double t2star, double delay, CoherenceModel model);

/// Inverse of predicted_visibility. Throws ValidationError unless 0 < V < 1.
double estimate_t2star(double visibility, double delay, CoherenceModel model);

}  // namespace qdw
