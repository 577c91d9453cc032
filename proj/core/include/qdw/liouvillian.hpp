#pragma once

#include <array>
#include <vector>

#include "qdw/pulse.hpp"
#include "qdw/system.hpp"

namespace qdw {

/// Lindblad generator specialised to the dot Hamiltonian: a diagonal part plus the
/// hbar <-> Tbar drive, and collapse operators classified as single-element or diagonal
/// so that L X L^dag costs O(1) or O(16). Works on arbitrary (non-Hermitian) X.
class Liouvillian {
public:
  explicit Liouvillian(const SystemParams& params, double ground_detuning = 0.0);

  OperatorMatrix apply(const OperatorMatrix& x, Complex omega) const;

  /// H - i/2 sum_k L_k^dag L_k at drive omega.
  OperatorMatrix effective_hamiltonian(Complex omega) const;

  /// Diagonal of the drive-free effective Hamiltonian.
  const Eigen::Vector4cd& effective_diagonal() const noexcept { return heff_diag_; }

  const std::vector<CollapseOp>& collapse() const noexcept { return collapse_; }

  /// sum of L^dag L over the operators of one channel.
  const OperatorMatrix& channel_rate_operator(Channel c) const {
    return channel_rates_[static_cast<int>(c)];
  }

  /// Fastest rate in the generator at the given peak drive (rad/ns), for step-size checks.
  double fastest_rate(double peak_rabi) const;

private:
  struct Jump {
    enum class Kind { Single, Diagonal, Dense } kind;
    int row = 0;
    int col = 0;
    double weight = 0.0;  // |c|^2 for Single
    Eigen::Vector4cd diag;
    OperatorMatrix dense;
  };

  std::vector<CollapseOp> collapse_;
  std::vector<Jump> jumps_;
  std::array<OperatorMatrix, 4> channel_rates_;
  Eigen::Vector4cd heff_diag_;
  double fastest_scale_ = 0.0;
};

/// Unitary of an instantaneous pulse with the given area and phase on hbar <-> Tbar:
/// exp(-i area/2 (e^{i phase} |Tbar><hbar| + h.c.)).
OperatorMatrix delta_pulse_unitary(double area, double phase);

/// Reset with randomisation probability p, as a linear map on any operator:
/// ground block -> (1-p) X_g + p tr(X_g) I_g / 2, ground/excited coherences scaled by (1-p).
void apply_reset(OperatorMatrix& x, double p_rand);

/// Ideal preparation of |hbar>: X -> tr(X) |hbar><hbar|.
void apply_prepare_hbar(OperatorMatrix& x);

/// Instantaneous events of a (periodic) sequence in a time window.
struct SequenceEvent {
  enum class Kind { Prepare, Reset, DeltaPulse, Edge } kind;
  double time = 0.0;
  double value = 0.0;  // p_rand for Reset, area for DeltaPulse
  double phase = 0.0;  // DeltaPulse only
};

/// Events with time in [t_a, t_b] (include_start) or (t_a, t_b], ordered by time and then
/// Prepare < Reset < DeltaPulse < Edge. With delta_pulses, each pulse becomes one DeltaPulse at
/// its centre; otherwise its start and end appear as Edge breakpoints.
std::vector<SequenceEvent> collect_events(const PulseSequence& seq, double t_a, double t_b,
                                          bool include_start, bool delta_pulses);

/// Drive inside a breakpoint-free segment; the active pulse is chosen by the segment midpoint so
/// square-pulse edges are seen from the inside.
class SegmentDrive {
public:
  SegmentDrive(const PulseSequence& seq, double t_a, double t_b, bool delta_pulses);
  bool active() const noexcept { return pulse_ != nullptr; }
  Complex operator()(double t) const;

private:
  const Pulse* pulse_ = nullptr;
  double rep_offset_ = 0.0;
};

}  // namespace qdw
