#include <doctest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "helpers.hpp"
#include "qdw/compiler.hpp"
#include "qdw/errors.hpp"
#include "qdw/pulse.hpp"
#include "qdw/sequence_io.hpp"
#include "qdw/units.hpp"

using namespace qdw;

namespace {

// Midpoint rule over [a, b] with n cells.
double integrate_abs_omega(const PulseSequence& seq, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::abs(omega_at(seq, a + (i + 0.5) * h)) * h;
  return s;
}

std::vector<double> equal_probs(std::size_t d, double total) { return std::vector<double>(d, total / d); }

}  // namespace

TEST_CASE("omega_at") {
  PulseSequence seq;
  seq.pulses.push_back(Pulse{1.0, 0.1, kPi, 0.5, PulseShape::Square});
  seq.pulses.push_back(Pulse{3.0, 0.6, kPi, 0.0, PulseShape::Gaussian});
  CHECK(std::abs(omega_at(seq, 0.5)) == 0.0);
  CHECK(std::abs(omega_at(seq, 2.0)) == 0.0);
  CHECK(std::abs(omega_at(seq, -1.0)) == 0.0);
  CHECK(std::abs(omega_at(seq, 1.05)) == doctest::Approx(10.0 * kPi));
  CHECK(std::arg(omega_at(seq, 1.05)) == doctest::Approx(0.5));
  CHECK(std::abs(omega_at(seq, 1.05 + seq.rep_period)) == doctest::Approx(10.0 * kPi));
  CHECK(std::abs(integrate_abs_omega(seq, 1.0, 1.1, 1000) - kPi) < 1e-6);
  CHECK(std::abs(integrate_abs_omega(seq, 3.0, 3.6, 20000) - kPi) < 1e-6);
}

TEST_CASE("compile_sequence examples") {
  const auto w3 = compile_sequence(equal_probs(3, 1.0), std::vector<double>(3, 0.0));
  REQUIRE(w3.pulses.size() == 3);
  CHECK(w3.pulses[0].area == doctest::Approx(2.0 * std::asin(1.0 / std::sqrt(3.0))).epsilon(1e-14));
  CHECK(w3.pulses[0].area == doctest::Approx(1.23096).epsilon(1e-5));
  CHECK(w3.pulses[1].area == doctest::Approx(kPi / 2).epsilon(1e-14));
  CHECK(w3.pulses[2].area == doctest::Approx(kPi).epsilon(1e-14));

  const auto one = compile_sequence(std::vector<double>{1.0}, std::vector<double>{0.0});
  CHECK(one.pulses[0].area == doctest::Approx(kPi));

  // Sigma = 0.3: each pulse excites p_k / R_k of what is left.
  const auto weak = compile_sequence(equal_probs(3, 0.3), std::vector<double>(3, 0.0));
  const double q[] = {0.1, 0.1 / 0.9, 0.1 / 0.8};
  for (int k = 0; k < 3; ++k) {
    const double s = std::sin(weak.pulses[static_cast<std::size_t>(k)].area / 2);
    CHECK(s * s == doctest::Approx(q[k]).epsilon(1e-12));
  }
  CHECK(q[1] == doctest::Approx(0.1111).epsilon(1e-3));
  CHECK(q[2] == doctest::Approx(0.125));
}

TEST_CASE("compile_sequence errors") {
  CHECK_THROWS_AS(compile_angles(std::vector<double>{0.6, 0.6}, std::vector<double>{0, 0}), ValidationError);
  CHECK_THROWS_AS(compile_angles(std::vector<double>{-0.1, 0.2}, std::vector<double>{0, 0}), ValidationError);
  CHECK_THROWS_AS(compile_angles(std::vector<double>{1.0, 0.1}, std::vector<double>{0, 0}), ValidationError);
  const auto trailing = compile_angles(std::vector<double>{1.0, 0.0}, std::vector<double>{0, 0});
  CHECK(trailing.areas[1] == 0.0);
}

TEST_CASE("compiler invariants") {
  for (std::size_t d = 1; d <= 6; ++d) {
    const auto a = compile_angles(equal_probs(d, 1.0), std::vector<double>(d, 0.0));
    for (std::size_t k = 0; k < d; ++k) {
      CHECK(a.areas[k] == doctest::Approx(2.0 * std::asin(1.0 / std::sqrt(double(d - k)))).epsilon(1e-13));
    }
    CHECK(a.areas.back() == doctest::Approx(kPi));
  }
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(4);
    double s = 0.0;
    for (auto& x : p) s += (x = u(rng));
    const double total = u(rng);
    for (auto& x : p) x *= total / s;
    const auto a = compile_angles(p, std::vector<double>(4, 0.0));
    for (double th : a.areas) {
      CHECK(th >= 0.0);
      CHECK(th <= kPi);
    }
    const TimeBinState st = sequence_amplitudes(a);
    double norm = std::norm(st.vac());
    for (std::size_t k = 0; k < 4; ++k) {
      norm += st.bin_probability(k);
      CHECK(st.bin_probability(k) == doctest::Approx(p[k]).epsilon(1e-12));
    }
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));

    // Raising one target (others fixed, still feasible) raises its area.
    auto bumped = p;
    bumped[1] += 0.5 * (1.0 - total);
    if (1.0 - total > 1e-3) CHECK(compile_angles(bumped, std::vector<double>(4, 0.0)).areas[1] > a.areas[1]);
  }
}

TEST_CASE("sequence_amplitudes") {
  const auto w3 = sequence_amplitudes(compile_sequence(equal_probs(3, 1.0), std::vector<double>(3, 0.0)));
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(w3.amp(k) - 1.0 / std::sqrt(3.0)) < 1e-12);
  CHECK(std::abs(w3.vac()) < 1e-12);

  const auto pi = sequence_amplitudes(PulseAngles{{kPi}, {0.0}});
  CHECK(std::abs(pi.amp(0) - 1.0) < 1e-12);

  const auto two = sequence_amplitudes(PulseAngles{{kPi / 2, kPi}, {0.0, kPi / 2}});
  CHECK(std::abs(two.amp(0) - 1.0 / std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(two.amp(1) - std::complex<double>(0.0, 1.0 / std::sqrt(2.0))) < 1e-12);
  CHECK(std::abs(two.vac()) < 1e-12);
}

TEST_CASE("round_trip") {
  const auto seq = round_trip(wstate(3));
  CHECK(seq.pulses[0].area == doctest::Approx(1.23096).epsilon(1e-5));
  CHECK(seq.pulses[1].area == doctest::Approx(kPi / 2));
  CHECK(seq.pulses[2].area == doctest::Approx(kPi));

  const auto first = angles_for_state(single_bin_state(3, 0));
  CHECK(first.areas[0] == doctest::Approx(kPi));
  CHECK(first.areas[1] == 0.0);
  CHECK(first.areas[2] == 0.0);

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const TimeBinState s = qdw::test::random_state(rng, 4);
    const TimeBinState back = sequence_amplitudes(round_trip(s));
    double err = std::abs(back.vac() - s.vac());
    for (std::size_t k = 0; k < 4; ++k) err = std::max(err, std::abs(back.amp(k) - s.amp(k)));
    CHECK(err < 1e-9);
  }
  CHECK_THROWS_AS(round_trip(TimeBinState({0.6}, std::complex<double>(0.0, 0.8))), ValidationError);
}

TEST_CASE("PulseSequence validation") {
  PulseSequence seq;
  seq.pulses.push_back(Pulse{1.0, 0.5, 1.0});
  seq.pulses.push_back(Pulse{1.2, 0.5, 1.0});
  CHECK_THROWS_AS(seq.validate(), ValidationError);  // overlap
  seq.pulses[1].t0 = 12.4;
  CHECK_THROWS_AS(seq.validate(), ValidationError);  // past the period
  seq.pulses[1].t0 = 2.0;
  seq.pulses[1].duration = 0.0;
  CHECK_THROWS_AS(seq.validate(), ValidationError);
  seq.pulses[1].duration = 0.5;
  CHECK_NOTHROW(seq.validate());
  seq.resets.push_back(ResetPulse{0.0, 1.5});
  CHECK_THROWS_AS(seq.validate(), ValidationError);
}

TEST_CASE("sequence JSON") {
  PulseSequence seq = compile_sequence(equal_probs(2, 0.4), std::vector<double>{0.0, 1.0});
  seq.pulses[1].shape = PulseShape::Gaussian;
  seq.resets.push_back(ResetPulse{0.0, 0.5});
  const std::string text = sequence_to_json(seq);
  const auto doc = nlohmann::json::parse(text);
  for (const char* key : {"rep_period_ns", "bin_spacing_ns", "pulses", "resets"}) CHECK(doc.contains(key));
  for (const char* key : {"t0", "dur", "area_rad", "phase_rad", "shape"}) CHECK(doc["pulses"][0].contains(key));
  CHECK(doc["pulses"][1]["shape"] == "gaussian");
  CHECK(doc["resets"][0]["p_rand"] == 0.5);
  CHECK_FALSE(doc.contains("prepare_hbar"));

  const PulseSequence back = sequence_from_json(text);
  REQUIRE(back.pulses.size() == 2);
  CHECK(back.pulses[0].area == seq.pulses[0].area);
  CHECK(back.pulses[1].phase == seq.pulses[1].phase);
  CHECK(back.pulses[1].shape == PulseShape::Gaussian);
  CHECK(back.resets[0].p_rand == 0.5);
  CHECK(sequence_to_json(back) == text);

  CHECK_THROWS_AS(sequence_from_json("{"), ValidationError);
  CHECK_THROWS_AS(sequence_from_json(R"({"rep_period_ns": 12.5})"), ValidationError);
}
