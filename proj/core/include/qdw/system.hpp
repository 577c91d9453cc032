#pragma once

#include <complex>
#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace qdw {

using Complex = std::complex<double>;

/// 4x4 operator in the level basis below.
using OperatorMatrix = Eigen::Matrix4cd;

/// Dot basis. Hole spin ground states h, hbar; trions T, Tbar.
///   index 0: |h>     (shelf; target of the enhanced decay)
///   index 1: |hbar>  (driven ground state)
///   index 2: |T>     (uncoupled unless a model extension drives it)
///   index 3: |Tbar>  (driven trion)
enum class Level : int { H = 0, HBar = 1, T = 2, TBar = 3 };

inline constexpr int kLevels = 4;

constexpr int idx(Level l) { return static_cast<int>(l); }

std::string_view level_name(Level l);

enum class DephasingMode { Markov, QuasiStatic };

/// Physical rates of the dot-cavity system. Rates are in 1/ns, detunings in rad/ns.
struct SystemParams {
  double gamma_enh = 5.0;          // Purcell-enhanced Tbar -> h
  double gamma_diag = 0.2;         // residual Tbar -> hbar
  double gamma_deph = 1.0 / 3.7;   // ground pure dephasing, 1/T2* (Markov mode)
  double sigma_quasistatic = 0.0;  // std-dev of static ground-splitting noise (QuasiStatic mode)
  DephasingMode dephasing = DephasingMode::Markov;
  double gamma_sf = 0.0;           // ground spin flip, both directions
  double delta_drive = 0.0;        // drive detuning from hbar -> Tbar
  double delta_h = 0.0;            // hole Zeeman splitting, ueV (bookkeeping only)

  double gamma_total() const { return gamma_enh + gamma_diag; }

  /// Throws ValidationError listing every violated bound.
  void validate() const;
};

/// Hermitian 4x4 density matrix with its invariants checked at construction.
class DensityMatrix {
public:
  static constexpr double kTolerance = 1e-9;

  /// Throws ValidationError if rho is not Hermitian, not unit trace or not positive (to kTolerance).
  explicit DensityMatrix(const OperatorMatrix& rho);

  static DensityMatrix pure(Level l);
  static DensityMatrix pure(const Eigen::Vector4cd& psi);
  /// Equal mixture of h and hbar.
  static DensityMatrix mixed_ground();

  const OperatorMatrix& matrix() const noexcept { return rho_; }
  double population(Level l) const { return rho_(idx(l), idx(l)).real(); }
  Complex element(Level row, Level col) const { return rho_(idx(row), idx(col)); }

private:
  OperatorMatrix rho_;
};

/// Diagnostics of a candidate density matrix; nothing thrown.
struct StateHealth {
  double trace_error = 0.0;        // |Tr rho - 1|
  double hermiticity_error = 0.0;  // max |rho - rho^dagger|
  double min_eigenvalue = 0.0;
};

StateHealth inspect_state(const OperatorMatrix& rho);

enum class Channel { Enhanced, Diagonal, Dephase, SpinFlip };

std::string_view channel_name(Channel c);
Channel channel_from_name(std::string_view name);

struct CollapseOp {
  OperatorMatrix op;
  Channel channel;
};

/// Rotating frame at the drive frequency:
///   H = delta_drive |Tbar><Tbar| + omega/2 |Tbar><hbar| + conj(omega)/2 |hbar><Tbar|
///       + ground_detuning |h><h|
/// ground_detuning carries one static realisation of the quasi-static noise.
OperatorMatrix build_hamiltonian(const SystemParams& params, Complex omega,
                                 double ground_detuning = 0.0);

/// Collapse operators with nonzero rate. DEPHASE appears only in Markov mode.
std::vector<CollapseOp> build_collapse_ops(const SystemParams& params);

/// Dense Lindblad generator: -i[H, rho] + sum_k (L rho L^dag - 1/2 {L^dag L, rho}).
/// Accepts non-Hermitian operands; used by the two-time correlators.
OperatorMatrix lindblad_rhs(const OperatorMatrix& rho, const OperatorMatrix& hamiltonian,
                            const std::vector<CollapseOp>& collapse);

/// Energy offset (ueV) of the Raman-scattered photon for a drive offset (ueV).
/// Two-photon resonance pins the emitted photon to the drive.
double raman_emission_offset(double drive_offset_uev);

}  // namespace qdw
