#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qdw/master_equation.hpp"
#include "qdw/pulse.hpp"
#include "qdw/system.hpp"

namespace qdw {

struct Click {
  double time_ns;
  Channel channel;
};

/// Photon detections of one trajectory. Times strictly increase.
struct ClickRecord {
  std::uint64_t traj = 0;
  std::uint64_t seed = 0;
  double duration_ns = 0.0;  // simulated span, [0, duration)
  std::vector<Click> clicks;
};

struct TrajectoryOptions {
  std::size_t n_reps = 1;
  unsigned threads = 1;
  bool delta_pulses = false;
  double dt = 0.002;  // RK4 step while a finite pulse is on
  /// Probability that a reset event also yields an ENHANCED-wavelength photon from the
  /// non-resonantly created carriers, emitted at t0 + Exp(gamma_total).
  double reset_emission_prob = 0.0;
};

/// Seed of trajectory `index`: splitmix64 applied to master_seed + (index + 1) * golden gamma.
/// Records therefore do not depend on how trajectories are split across threads.
std::uint64_t trajectory_seed(std::uint64_t master_seed, std::uint64_t index);

/// Monte Carlo wavefunction sampling. Drift under H_eff = H - i/2 sum L^dag L (RK4 while a pulse
/// is on, exact diagonal propagation between pulses); a jump fires when the squared norm drops
/// below a uniform threshold, the channel drawn in proportion to <L^dag L>. ENHANCED and
/// DIAGONAL jumps are recorded as clicks. rho0 must be diagonal (sampled as a mixture) or pure.
/// In quasi-static mode each trajectory draws its own ground detuning.
std::vector<ClickRecord> sample_trajectories(const DensityMatrix& rho0, const PulseSequence& seq,
                                             const SystemParams& params, std::size_t n_traj,
                                             std::uint64_t master_seed,
                                             const TrajectoryOptions& options = {});

/// Ensemble-averaged density matrices of the same trajectories at the given (sorted) times.
std::vector<OperatorMatrix> ensemble_average(const DensityMatrix& rho0, const PulseSequence& seq,
                                             const SystemParams& params, std::size_t n_traj,
                                             std::uint64_t master_seed,
                                             const std::vector<double>& sample_times,
                                             const TrajectoryOptions& options = {});

/// CSV with header `traj,time_ns,channel`, rows ordered by trajectory then time.
void write_clicks_csv(std::ostream& out, const std::vector<ClickRecord>& records);

std::size_t count_clicks(const std::vector<ClickRecord>& records, Channel channel);

}  // namespace qdw
