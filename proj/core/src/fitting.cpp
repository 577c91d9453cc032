#include "qdw/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "qdw/errors.hpp"

namespace qdw {

namespace {

using Model = std::function<double(const Eigen::VectorXd&, double)>;

struct Residual {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::span<const double> x;
  std::span<const double> y;
  Model model;
  int n_params = 0;

  int inputs() const { return n_params; }
  int values() const { return static_cast<int>(x.size()); }
  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    for (std::size_t i = 0; i < x.size(); ++i) f(static_cast<Eigen::Index>(i)) = model(p, x[i]) - y[i];
    return 0;
  }
};

double rss(const Residual& r, const Eigen::VectorXd& p) {
  Eigen::VectorXd f(r.values());
  r(p, f);
  return f.squaredNorm();
}

FitResult finish(const Residual& r, const Eigen::VectorXd& p, std::vector<std::string> names, int iterations) {
  Eigen::VectorXd f(r.values());
  r(p, f);
  Eigen::NumericalDiff<Residual, Eigen::Central> diff(r);
  Eigen::MatrixXd jac(r.values(), r.inputs());
  diff.df(p, jac);

  FitResult out;
  out.names = std::move(names);
  out.values.assign(p.data(), p.data() + p.size());
  out.residual_norm = f.norm();
  out.iterations = iterations;
  const int dof = r.values() - r.inputs();
  const double s2 = dof > 0 ? f.squaredNorm() / dof : 0.0;
  const Eigen::MatrixXd cov = (jac.transpose() * jac).completeOrthogonalDecomposition().pseudoInverse() * s2;
  for (Eigen::Index k = 0; k < p.size(); ++k) out.stderrs.push_back(std::sqrt(std::max(0.0, cov(k, k))));
  return out;
}

// Levenberg-Marquardt with a central-difference Jacobian; returns the evaluation count.
int minimise(const Residual& r, Eigen::VectorXd& p, const char* what) {
  Eigen::NumericalDiff<Residual, Eigen::Central> diff(r);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Residual, Eigen::Central>> lm(diff);
  lm.parameters.maxfev = 4000;
  lm.parameters.xtol = 1e-15;
  lm.parameters.ftol = 1e-15;
  const auto status = lm.minimize(p);
  using namespace Eigen::LevenbergMarquardtSpace;
  if (status == ImproperInputParameters || status == TooManyFunctionEvaluation || status == UserAsked) {
    throw NumericalError(fmt::format("{}: Levenberg-Marquardt did not converge (status {})", what, static_cast<int>(status)));
  }
  if (!p.allFinite()) throw NumericalError(fmt::format("{}: fit diverged", what));
  return static_cast<int>(lm.nfev);
}

void check_series(std::span<const double> t, std::span<const double> y, std::size_t min_points, const char* what) {
  if (t.size() != y.size()) throw ValidationError(fmt::format("{}: x and y lengths differ", what));
  if (t.size() < min_points) {
    throw ValidationError(fmt::format("{}: needs >= {} points, got {}", what, min_points, t.size()));
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || !std::isfinite(y[i])) throw ValidationError(fmt::format("{}: non-finite sample {}", what, i));
  }
}

double wrap_phase(double phi) { return std::remainder(phi, 2.0 * std::numbers::pi); }

}  // namespace

double FitResult::value(std::string_view name) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return values[k];
  }
  throw ValidationError(fmt::format("fit has no parameter '{}'", name));
}

double FitResult::stderr_of(std::string_view name) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return stderrs[k];
  }
  throw ValidationError(fmt::format("fit has no parameter '{}'", name));
}

FitResult fit_exponential(std::span<const double> t, std::span<const double> y) {
  check_series(t, y, 3, "fit_exponential");
  const double peak = *std::max_element(y.begin(), y.end());
  if (!(peak > 0.0)) throw NumericalError("fit_exponential: series has no positive samples");

  // Log-linear seed over samples above a small fraction of the peak.
  double s0 = 0, s1 = 0, s2 = 0, sy = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (y[i] <= 1e-6 * peak) continue;
    const double w = y[i] * y[i];  // weights the log residuals like the linear ones
    const double ly = std::log(y[i]);
    s0 += w; s1 += w * t[i]; s2 += w * t[i] * t[i]; sy += w * ly; sty += w * t[i] * ly;
  }
  const double det = s0 * s2 - s1 * s1;
  if (!(det > 0.0)) throw NumericalError("fit_exponential: fewer than two usable samples");
  const double slope = (s0 * sty - s1 * sy) / det;
  const double range = std::abs(t.back() - t.front());
  if (!(slope < -1e-9 / std::max(range, 1e-300))) {
    throw NumericalError("fit_exponential: series does not decay");
  }
  Eigen::VectorXd p(2);
  p << std::exp((sy - slope * s1) / s0), -1.0 / slope;

  Residual r{t, y, [](const Eigen::VectorXd& q, double x) { return q(0) * std::exp(-x / q(1)); }, 2};
  const int iters = minimise(r, p, "fit_exponential");
  if (!(p(1) > 0.0)) throw NumericalError("fit_exponential: fitted decay time is not positive");
  return finish(r, p, {"A", "tau"}, iters);
}

FitResult fit_sinusoid(std::span<const double> phi, std::span<const double> y) {
  check_series(phi, y, 4, "fit_sinusoid");
  std::vector<double> distinct;
  for (double p : phi) {
    const double w = std::fmod(std::fmod(p, 2.0 * std::numbers::pi) + 2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
    const bool seen = std::any_of(distinct.begin(), distinct.end(), [&](double d) {
      const double gap = std::abs(d - w);
      return std::min(gap, 2.0 * std::numbers::pi - gap) < 1e-9;
    });
    if (!seen) distinct.push_back(w);
  }
  if (distinct.size() < 4) throw ValidationError("fit_sinusoid: needs >= 4 distinct phases");

  // Quadrature seed: y = a + c cos(phi) + s sin(phi).
  const auto n = static_cast<Eigen::Index>(phi.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    design(i, 0) = 1.0;
    design(i, 1) = std::cos(phi[k]);
    design(i, 2) = std::sin(phi[k]);
    rhs(i) = y[k];
  }
  const Eigen::VectorXd q = design.colPivHouseholderQr().solve(rhs);
  Eigen::VectorXd p(3);
  p << q(0), std::hypot(q(1), q(2)), std::atan2(-q(2), q(1));

  Residual r{phi, y, [](const Eigen::VectorXd& v, double x) { return v(0) + v(1) * std::cos(x + v(2)); }, 3};
  int iters = 0;
  const double scale = std::max(std::abs(p(0)), 1e-300);
  if (p(1) > 1e-9 * scale) {
    Eigen::VectorXd polished = p;
    iters = minimise(r, polished, "fit_sinusoid");
    if (rss(r, polished) <= rss(r, p)) p = polished;
  }
  if (p(1) < 0.0) {
    p(1) = -p(1);
    p(2) += std::numbers::pi;
  }
  p(2) = wrap_phase(p(2));

  FitResult out = finish(r, p, {"A", "B", "phi0"}, iters);
  if (!(p(1) > 1e-9 * scale)) {
    // The phase is undefined for a flat scan; take B's error from the quadrature solve.
    const Eigen::VectorXd res = design * q - rhs;
    const double dof = static_cast<double>(std::max<Eigen::Index>(1, n - 3));
    const Eigen::MatrixXd cov = (design.transpose() * design).inverse() * (res.squaredNorm() / dof);
    out.stderrs[1] = std::sqrt(std::max(0.0, 0.5 * (cov(1, 1) + cov(2, 2))));
    out.stderrs[2] = std::numeric_limits<double>::infinity();
  }
  return out;
}

FitResult fit_damped_oscillation(std::span<const double> t, std::span<const double> y) {
  check_series(t, y, 8, "fit_damped_oscillation");
  const FitResult envelope = fit_exponential(t, y);
  const double tau_p = envelope.value("tau");
  const double amp = envelope.value("A");

  // Zero crossings of the detrended, envelope-corrected residual give the frequency.
  std::vector<double> resid(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) resid[i] = y[i] * std::exp(t[i] / tau_p) - amp;
  std::vector<double> crossings;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if ((resid[i - 1] < 0.0) != (resid[i] < 0.0)) {
      const double f = resid[i - 1] / (resid[i - 1] - resid[i]);
      crossings.push_back(t[i - 1] + f * (t[i] - t[i - 1]));
    }
  }
  if (crossings.size() < 3) throw NumericalError("fit_damped_oscillation: too few oscillations to seed the frequency");
  const double half_period = (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
  const double omega = std::numbers::pi / half_period;
  double b = 0.0;
  for (std::size_t i = 0; i < t.size() && t[i] - t.front() < 2.0 * half_period; ++i) b = std::max(b, std::abs(resid[i]));
  const double span = t.back() - t.front();

  Residual r{t, y,
             [](const Eigen::VectorXd& v, double x) {
               return (v(0) + v(1) * std::cos(v(2) * x + v(3)) * std::exp(-x / v(4))) * std::exp(-x / v(5));
             },
             6};
  Eigen::VectorXd best;
  double best_rss = std::numeric_limits<double>::infinity();
  int best_iters = 0;
  for (int k = 0; k < 4; ++k) {
    Eigen::VectorXd p(6);
    p << amp, b, omega, 0.5 * std::numbers::pi * k, 0.5 * span, tau_p;
    try {
      const int iters = minimise(r, p, "fit_damped_oscillation");
      const double cost = rss(r, p);
      if (cost < best_rss && p(4) > 0.0 && p(5) > 0.0) {
        best = p;
        best_rss = cost;
        best_iters = iters;
      }
    } catch (const NumericalError&) {
    }
  }
  if (best.size() == 0) throw NumericalError("fit_damped_oscillation: no starting point converged");
  if (best(1) < 0.0) {
    best(1) = -best(1);
    best(3) += std::numbers::pi;
  }
  if (best(2) < 0.0) {
    best(2) = -best(2);
    best(3) = -best(3);
  }
  best(3) = wrap_phase(best(3));
  return finish(r, best, {"A", "B", "omega", "phi", "tau_r", "tau_p"}, best_iters);
}

}  // namespace qdw
