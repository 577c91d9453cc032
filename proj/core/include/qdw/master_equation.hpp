#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "qdw/pulse.hpp"
#include "qdw/system.hpp"

namespace qdw {

struct TimeGrid {
  double t_start = 0.0;
  double t_end = 12.5;
  double dt = 0.001;

  static constexpr double kMaxSteps = 1e7;

  /// Number of steps; samples are t_start + k dt for k = 0..steps().
  std::size_t steps() const;
  double time(std::size_t k) const { return t_start + static_cast<double>(k) * dt; }
  void validate() const;
};

struct EvolveOptions {
  /// Replace finite pulses by instantaneous rotations at their centres.
  bool delta_pulses = false;
  /// Keep every n-th density matrix (0 keeps none; the final state is always kept).
  std::size_t store_stride = 0;
  /// Run a single static realisation of the ground detuning instead of averaging over the
  /// quasi-static distribution.
  std::optional<double> ground_detuning;
  /// Gauss-Hermite nodes used to average the quasi-static mode.
  int quasistatic_nodes = 32;
  bool check_positivity = true;
};

/// Worst state-health figures seen across output samples.
struct HealthLog {
  double max_trace_error = 0.0;
  double max_hermiticity_error = 0.0;
  double min_eigenvalue = 1.0;

  void absorb(const StateHealth& h);
  void absorb(const HealthLog& other);
};

struct EvolutionResult {
  std::vector<double> times;
  std::vector<std::array<double, 4>> populations;  // per Level
  std::vector<std::array<double, 4>> flux;         // rate <L^dag L> per Channel, 1/ns
  std::vector<std::array<double, 4>> emitted;      // time integral of flux from t_start
  std::vector<std::size_t> stored_index;           // sample index of each stored state
  std::vector<OperatorMatrix> states;
  OperatorMatrix final_state = OperatorMatrix::Zero();
  HealthLog health;

  double enhanced_flux(std::size_t k) const { return flux[k][static_cast<int>(Channel::Enhanced)]; }
};

/// Fixed-step RK4 integration of the Lindblad equation under the drive of `seq`.
/// Steps are split at pulse edges and instantaneous events so no step straddles a discontinuity.
/// Throws ValidationError if dt * (fastest rate) >= 0.1, NumericalError on a positivity or trace
/// breach beyond 1e-9.
EvolutionResult evolve_master(const DensityMatrix& rho0, const PulseSequence& seq,
                              const SystemParams& params, const TimeGrid& grid,
                              const EvolveOptions& options = {});

/// Propagate an arbitrary operator from t_a to t_b with the same generator and events in
/// (t_a, t_b]. `dt` bounds the substep.
void propagate_operator(OperatorMatrix& x, const PulseSequence& seq, const SystemParams& params,
                        double ground_detuning, double t_a, double t_b, double dt,
                        bool delta_pulses);

/// Step-size guard shared by the integrators.
void check_step_size(const SystemParams& params, const PulseSequence& seq, double dt,
                     bool delta_pulses, double max_ground_detuning);

/// Gauss-Hermite realisations of the quasi-static ground detuning.
struct StaticRealization {
  double weight;
  double ground_detuning;
};

/// For Markov mode a single realisation at zero detuning.
std::vector<StaticRealization> static_realizations(const SystemParams& params, int nodes);

struct QuadratureNode {
  double x;
  double weight;
};

/// n-point Gauss-Hermite rule for a standard normal variable (weights sum to 1), by Golub-Welsch.
std::vector<QuadratureNode> gauss_hermite_normal(int n);

}  // namespace qdw
