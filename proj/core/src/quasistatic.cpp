#include <cmath>

#include <Eigen/Eigenvalues>

#include "qdw/errors.hpp"
#include "qdw/master_equation.hpp"

namespace qdw {

std::vector<QuadratureNode> gauss_hermite_normal(int n) {
  if (n < 1) throw ValidationError("Gauss-Hermite rule needs at least one node");
  // Jacobi matrix of the probabilists' Hermite polynomials: b_k = sqrt(k).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  std::vector<QuadratureNode> nodes(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double v0 = solver.eigenvectors()(0, k);
    nodes[static_cast<std::size_t>(k)] = {solver.eigenvalues()(k), v0 * v0};
  }
  return nodes;
}

std::vector<StaticRealization> static_realizations(const SystemParams& params, int nodes) {
  if (params.dephasing != DephasingMode::QuasiStatic || params.sigma_quasistatic == 0.0) {
    return {{1.0, 0.0}};
  }
  std::vector<StaticRealization> out;
  for (const auto& q : gauss_hermite_normal(nodes)) {
    out.push_back({q.weight, params.sigma_quasistatic * q.x});
  }
  return out;
}

}  // namespace qdw
