#include "qdw/system.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "qdw/errors.hpp"

namespace qdw {

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::string out;
  for (const auto& e : errors) {
    if (!out.empty()) out += "; ";
    out += e;
  }
  return out;
}

OperatorMatrix ket_bra(Level row, Level col) {
  OperatorMatrix m = OperatorMatrix::Zero();
  m(idx(row), idx(col)) = 1.0;
  return m;
}

}  // namespace

ValidationReport::ValidationReport(std::vector<std::string> errors)
    : ValidationError(join_errors(errors)), errors_(std::move(errors)) {}

std::string_view level_name(Level l) {
  switch (l) {
    case Level::H: return "h";
    case Level::HBar: return "hbar";
    case Level::T: return "T";
    case Level::TBar: return "Tbar";
  }
  return "?";
}

std::string_view channel_name(Channel c) {
  switch (c) {
    case Channel::Enhanced: return "ENHANCED";
    case Channel::Diagonal: return "DIAGONAL";
    case Channel::Dephase: return "DEPHASE";
    case Channel::SpinFlip: return "SPINFLIP";
  }
  return "?";
}

Channel channel_from_name(std::string_view name) {
  for (Channel c : {Channel::Enhanced, Channel::Diagonal, Channel::Dephase, Channel::SpinFlip}) {
    if (channel_name(c) == name) return c;
  }
  throw ValidationError(fmt::format("unknown channel '{}'", name));
}

void SystemParams::validate() const {
  std::vector<std::string> errors;
  auto non_negative = [&](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) errors.push_back(fmt::format("{} must be a finite value >= 0 (got {})", name, v));
  };
  non_negative(gamma_enh, "gamma_enh");
  non_negative(gamma_diag, "gamma_diag");
  non_negative(gamma_deph, "gamma_deph");
  non_negative(sigma_quasistatic, "sigma_quasistatic");
  non_negative(gamma_sf, "gamma_sf");
  if (!std::isfinite(delta_drive)) errors.push_back("delta_drive must be finite");
  if (!std::isfinite(delta_h)) errors.push_back("delta_h must be finite");
  if (!(gamma_enh + gamma_diag > 0.0)) errors.push_back("gamma_enh + gamma_diag must be > 0");
  if (dephasing == DephasingMode::Markov && sigma_quasistatic != 0.0) {
    errors.push_back("sigma_quasistatic must be 0 in markov dephasing mode");
  }
  if (dephasing == DephasingMode::QuasiStatic && gamma_deph != 0.0) {
    errors.push_back("gamma_deph must be 0 in quasistatic dephasing mode");
  }
  if (!errors.empty()) throw ValidationReport(std::move(errors));
}

StateHealth inspect_state(const OperatorMatrix& rho) {
  StateHealth h;
  h.trace_error = std::abs(rho.trace() - Complex(1.0, 0.0));
  h.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  const OperatorMatrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> solver(herm, Eigen::EigenvaluesOnly);
  h.min_eigenvalue = solver.eigenvalues().minCoeff();
  return h;
}

DensityMatrix::DensityMatrix(const OperatorMatrix& rho) : rho_(rho) {
  const StateHealth h = inspect_state(rho);
  if (h.hermiticity_error > kTolerance) {
    throw ValidationError(fmt::format("density matrix not Hermitian (max |rho - rho^dag| = {:.3e})", h.hermiticity_error));
  }
  if (h.trace_error > kTolerance) {
    throw ValidationError(fmt::format("density matrix trace differs from 1 by {:.3e}", h.trace_error));
  }
  if (h.min_eigenvalue < -kTolerance) {
    throw ValidationError(fmt::format("density matrix has eigenvalue {:.3e} < 0", h.min_eigenvalue));
  }
}

DensityMatrix DensityMatrix::pure(Level l) { return DensityMatrix(ket_bra(l, l)); }

DensityMatrix DensityMatrix::pure(const Eigen::Vector4cd& psi) {
  const double n = psi.norm();
  if (!(n > 0.0)) throw ValidationError("pure state needs a nonzero vector");
  const Eigen::Vector4cd v = psi / n;
  return DensityMatrix(v * v.adjoint());
}

DensityMatrix DensityMatrix::mixed_ground() {
  return DensityMatrix(0.5 * (ket_bra(Level::H, Level::H) + ket_bra(Level::HBar, Level::HBar)));
}

OperatorMatrix build_hamiltonian(const SystemParams& params, Complex omega, double ground_detuning) {
  OperatorMatrix h = OperatorMatrix::Zero();
  h(idx(Level::TBar), idx(Level::TBar)) = params.delta_drive;
  h(idx(Level::H), idx(Level::H)) = ground_detuning;
  h(idx(Level::TBar), idx(Level::HBar)) = 0.5 * omega;
  h(idx(Level::HBar), idx(Level::TBar)) = 0.5 * std::conj(omega);
  return h;
}

std::vector<CollapseOp> build_collapse_ops(const SystemParams& params) {
  std::vector<CollapseOp> ops;
  if (params.gamma_enh > 0.0) {
    ops.push_back({std::sqrt(params.gamma_enh) * ket_bra(Level::H, Level::TBar), Channel::Enhanced});
  }
  if (params.gamma_diag > 0.0) {
    ops.push_back({std::sqrt(params.gamma_diag) * ket_bra(Level::HBar, Level::TBar), Channel::Diagonal});
  }
  if (params.dephasing == DephasingMode::Markov && params.gamma_deph > 0.0) {
    const OperatorMatrix sz = ket_bra(Level::H, Level::H) - ket_bra(Level::HBar, Level::HBar);
    ops.push_back({std::sqrt(0.5 * params.gamma_deph) * sz, Channel::Dephase});
  }
  if (params.gamma_sf > 0.0) {
    const double a = std::sqrt(params.gamma_sf);
    ops.push_back({a * ket_bra(Level::HBar, Level::H), Channel::SpinFlip});
    ops.push_back({a * ket_bra(Level::H, Level::HBar), Channel::SpinFlip});
  }
  return ops;
}

OperatorMatrix lindblad_rhs(const OperatorMatrix& rho, const OperatorMatrix& hamiltonian,
                            const std::vector<CollapseOp>& collapse) {
  const Complex i(0.0, 1.0);
  OperatorMatrix out = -i * (hamiltonian * rho - rho * hamiltonian);
  for (const auto& c : collapse) {
    const OperatorMatrix ldl = c.op.adjoint() * c.op;
    out += c.op * rho * c.op.adjoint() - 0.5 * (ldl * rho + rho * ldl);
  }
  return out;
}

double raman_emission_offset(double drive_offset_uev) { return drive_offset_uev; }

}  // namespace qdw
