#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "qdw/system.hpp"
#include "qdw/timebin.hpp"

namespace qdw::test {

inline Eigen::Vector4cd random_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Vector4cd v;
  for (int i = 0; i < 4; ++i) v(i) = {g(rng), g(rng)};
  return v.normalized();
}

// Random full-rank density matrix: a mixture of three random pure states.
inline OperatorMatrix random_rho(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  OperatorMatrix rho = OperatorMatrix::Zero();
  double total = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double w = u(rng);
    const Eigen::Vector4cd v = random_vector(rng);
    rho += w * v * v.adjoint();
    total += w;
  }
  return rho / total;
}

inline TimeBinState random_state(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> g;
  std::vector<std::complex<double>> amps(d);
  double norm = 0.0;
  for (auto& a : amps) {
    a = {g(rng), g(rng)};
    norm += std::norm(a);
  }
  const double vac = std::abs(g(rng));
  norm += vac * vac;
  for (auto& a : amps) a /= std::sqrt(norm);
  return TimeBinState(amps, vac / std::sqrt(norm));
}

inline double max_abs(const OperatorMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace qdw::test
