#include <doctest.h>

#include <cmath>
#include <vector>

#include "qdw/errors.hpp"
#include "qdw/experiments.hpp"
#include "qdw/fitting.hpp"
#include "qdw/units.hpp"

using namespace qdw;

namespace {

ExperimentSpec ideal() {
  ExperimentSpec s;
  s.params.gamma_enh = 25.0;
  s.params.gamma_diag = 0.0;
  s.params.gamma_deph = 0.0;
  s.sim.delta_pulses = true;
  s.n_traj = 3000;
  s.seed = 77;
  return s;
}

}  // namespace

TEST_CASE("fit_exponential") {
  std::vector<double> t, y;
  for (int k = 0; k < 200; ++k) {
    t.push_back(0.1 * k);
    y.push_back(3.0 * std::exp(-t.back() / 6.71));
  }
  const FitResult f = fit_exponential(t, y);
  CHECK(std::abs(f.value("tau") - 6.71) < 1e-6);
  CHECK(f.value("A") == doctest::Approx(3.0).epsilon(1e-9));
  for (double e : f.stderrs) CHECK(e >= 0.0);
  CHECK_THROWS_AS(f.value("nope"), ValidationError);

  std::vector<double> flat(t.size(), 1.0);
  CHECK_THROWS_AS(fit_exponential(t, flat), NumericalError);
  CHECK_THROWS_AS(fit_exponential(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 0.5}), ValidationError);
}

TEST_CASE("fit_sinusoid") {
  std::vector<double> phi, y;
  for (int k = 0; k < 8; ++k) {
    phi.push_back(2.0 * kPi * k / 8.0);
    y.push_back(1.0 + 0.677 * std::cos(phi.back() + 0.4));
  }
  const FitResult f = fit_sinusoid(phi, y);
  CHECK(f.value("B") / f.value("A") == doctest::Approx(0.677).epsilon(1e-9));
  CHECK(f.value("phi0") == doctest::Approx(0.4).epsilon(1e-9));
  CHECK_THROWS_AS(fit_sinusoid(std::vector<double>{0.0, 1.0, 2.0}, std::vector<double>{1.0, 1.0, 1.0}), ValidationError);
}

TEST_CASE("fit_damped_oscillation") {
  std::vector<double> t, y;
  for (int k = 0; k < 600; ++k) {
    t.push_back(0.01 * k);
    y.push_back((1.0 + 0.8 * std::cos(3.2 * t.back() + 0.3) * std::exp(-t.back() / 1.5)) * std::exp(-t.back() / 6.7));
  }
  const FitResult f = fit_damped_oscillation(t, y);
  CHECK(f.value("tau_p") == doctest::Approx(6.7).epsilon(1e-4));
  CHECK(f.value("omega") == doctest::Approx(3.2).epsilon(1e-4));
  CHECK(f.value("tau_r") == doctest::Approx(1.5).epsilon(1e-4));
}

TEST_CASE("T2* from visibility") {
  CHECK(estimate_t2star(0.696, 1.34, CoherenceModel::Markov) == doctest::Approx(3.70).epsilon(2e-3));
  CHECK(estimate_t2star(std::exp(-1.0), 2.0, CoherenceModel::Markov) == doctest::Approx(2.0));
  CHECK(estimate_t2star(std::exp(-1.0), 2.0, CoherenceModel::Gauss) == doctest::Approx(2.0));
  for (CoherenceModel m : {CoherenceModel::Markov, CoherenceModel::Gauss}) {
    for (double t2 : {0.5, 3.7, 20.0}) {
      CHECK(std::abs(estimate_t2star(predicted_visibility(t2, 1.34, m), 1.34, m) - t2) < 1e-9 * t2);
    }
    CHECK_THROWS_AS(estimate_t2star(1.0, 1.0, m), ValidationError);
    CHECK_THROWS_AS(estimate_t2star(0.0, 1.0, m), ValidationError);
  }
}

TEST_CASE("TargetSpec resolution") {
  TargetSpec t;
  t.bins = 4;
  t.total = 0.3;
  CHECK(t.resolved_probs(Scheme::Weak) == std::vector<double>(4, 0.075));
  CHECK(t.resolved_probs(Scheme::Deterministic) == std::vector<double>(4, 0.25));
  CHECK(t.resolved_phases(4) == std::vector<double>(4, 0.0));
  t.probs = {0.2, 0.1};
  CHECK(t.resolved_probs(Scheme::Weak) == t.probs);
}

TEST_CASE("run_wstate, deterministic ideal source") {
  ExperimentSpec s = ideal();
  const WStateResult w3 = run_wstate(s, Scheme::Deterministic, 3);
  CHECK(w3.fidelity >= 0.99);
  CHECK(w3.histogram.total() > 0.0);
  double sum = 0.0, var = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    sum += w3.bin_probs[k];
    var += w3.bin_prob_stderr[k] * w3.bin_prob_stderr[k];
  }
  CHECK(std::abs(sum - 1.0) <= 3.0 * std::sqrt(var) + 1e-12);

  const WStateResult one = run_wstate(s, Scheme::Deterministic, 1);
  CHECK(one.fidelity >= 0.99);
  CHECK(one.bin_probs.size() == 1);
}

TEST_CASE("run_wstate, weak four-bin source") {
  ExperimentSpec s = ideal();
  s.target.total = 0.3;
  s.n_traj = 20000;
  const WStateResult r = run_wstate(s, Scheme::Weak, 4);
  // The reset leaves the spin in hbar half of the time; only that half is driven.
  double sum = 0.0, var = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(std::abs(r.bin_probs[k] - 0.5 * 0.075) < 3.0 * r.bin_prob_stderr[k]);
    sum += r.bin_probs[k];
    var += r.bin_prob_stderr[k] * r.bin_prob_stderr[k];
  }
  CHECK(std::abs(sum - 0.5 * 0.3) < 3.0 * std::sqrt(var));
  CHECK(std::norm(r.estimate.vac()) > 0.5);
  CHECK(r.photon_density.rows() == 5);
}

TEST_CASE("deterministic fidelity does not increase with decoherence") {
  auto fid = [](double deph, double sf, double diag) {
    ExperimentSpec s = ideal();
    s.params.gamma_deph = deph;
    s.params.gamma_sf = sf;
    s.params.gamma_diag = diag;
    s.n_traj = 4000;
    return run_wstate(s, Scheme::Deterministic, 3).fidelity;
  };
  const double base = fid(0.0, 0.0, 0.0);
  SUBCASE("dephasing") {
    const double a = fid(0.2, 0.0, 0.0), b = fid(1.0, 0.0, 0.0);
    CHECK(base >= a);
    CHECK(a >= b);
  }
  SUBCASE("spin flips") {
    const double a = fid(0.0, 0.05, 0.0), b = fid(0.0, 0.5, 0.0);
    CHECK(base >= a);
    CHECK(a >= b);
  }
  SUBCASE("diagonal decay") {
    const double a = fid(0.0, 0.0, 2.0), b = fid(0.0, 0.0, 10.0);
    CHECK(base >= a);
    CHECK(a >= b);
  }
}

TEST_CASE("run_interference") {
  ExperimentSpec s = ideal();
  s.compile.bin_spacing = 1.34;
  const auto clean = run_interference(s, Scheme::Deterministic, 3, {});
  REQUIRE(clean.pairs.size() == 2);
  for (const auto& p : clean.pairs) CHECK(std::abs(p.fit.V - 1.0) < 1e-3);

  s.params.gamma_deph = 1.0 / 3.7;
  const auto once = run_interference(s, Scheme::Deterministic, 3, {});
  s.params.gamma_deph = 2.0 / 3.7;
  const auto twice = run_interference(s, Scheme::Deterministic, 3, {});
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(once.pairs[k].fit.V == doctest::Approx(std::exp(-1.34 / 3.7)).epsilon(0.02));
    CHECK(twice.pairs[k].fit.V < once.pairs[k].fit.V);
  }
  CHECK_THROWS_AS(run_interference(s, Scheme::Deterministic, 3, {0.0, 1.0, 2.0}), ValidationError);
}
