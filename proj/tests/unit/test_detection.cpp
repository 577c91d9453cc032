#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "qdw/detection.hpp"
#include "qdw/errors.hpp"
#include "qdw/experiments.hpp"
#include "qdw/units.hpp"

using namespace qdw;

namespace {

ClickRecord record(std::uint64_t traj, double duration, std::vector<double> times) {
  ClickRecord r{traj, 0, duration, {}};
  for (double t : times) r.clicks.push_back({t, Channel::Enhanced});
  return r;
}

std::vector<ClickRecord> poisson_records(std::size_t n, double rate, double duration, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap(rate);
  std::vector<ClickRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> times;
    for (double t = gap(rng); t < duration; t += gap(rng)) times.push_back(t);
    out.push_back(record(i, duration, times));
  }
  return out;
}

// Two adjacent unit-intensity bins [0, 1) and [1, 2) on a 0.1 ns cell-centred grid, with
// G1(t, 1) equal to `coherence` inside the first bin.
struct TwoBins {
  SampledSeries intensity{0.05, 0.1, std::vector<double>(40, 0.0)};
  G1Series g1{0.05, 0.1, 1.0, std::vector<std::complex<double>>(40, 0.0)};
  explicit TwoBins(std::complex<double> coherence) {
    for (std::size_t k = 0; k < 20; ++k) intensity.values[k] = 1.0;
    for (std::size_t k = 0; k < 10; ++k) g1.values[k] = coherence;
  }
};

}  // namespace

TEST_CASE("time_resolved_histogram") {
  const Histogram h = time_resolved_histogram({record(0, 25.0, {14.5})}, Channel::Enhanced, 0.5, 12.5);
  CHECK(h.total() == 1.0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h.values[i] > 0.0) {
      CHECK(h.bin_start(i) <= 2.0);
      CHECK(h.bin_end(i) > 2.0);
    }
  }
  const Histogram empty = time_resolved_histogram({}, Channel::Enhanced, 0.5, 12.5);
  CHECK(empty.size() == 25);
  CHECK(empty.total() == 0.0);
  CHECK_THROWS_AS(time_resolved_histogram({}, Channel::Enhanced, 0.0, 12.5), ValidationError);
  for (std::size_t i = 0; i + 1 < h.edges.size(); ++i) CHECK(h.edges[i] < h.edges[i + 1]);
}

TEST_CASE("temporal_filter") {
  const std::vector<ClickRecord> recs{record(0, 25.0, {0.5, 3.0, 13.0, 20.0})};
  const auto all = temporal_filter(recs, {{0.0, 12.5}}, 12.5);
  CHECK(all[0].clicks.size() == 4);
  CHECK(temporal_filter(recs, {}, 12.5)[0].clicks.empty());
  const auto some = temporal_filter(recs, {{0.0, 1.0}, {2.0, 4.0}}, 12.5);
  REQUIRE(some[0].clicks.size() == 3);
  CHECK(some[0].clicks[0].time_ns == 0.5);
  CHECK(some[0].clicks[1].time_ns == 3.0);
  CHECK(some[0].clicks[2].time_ns == 13.0);
  CHECK_THROWS_AS(temporal_filter(recs, {{0.0, 2.0}, {1.0, 3.0}}, 12.5), ValidationError);
}

TEST_CASE("hbt_correlate") {
  SUBCASE("one click per record never correlates") {
    std::vector<ClickRecord> recs;
    for (std::uint64_t i = 0; i < 100; ++i) recs.push_back(record(i, 150.0, {1.0 + 0.1 * double(i)}));
    const auto corr = hbt_correlate(recs, 100.0, 0.5);
    for (double c : corr.counts) CHECK(c == 0.0);
  }
  SUBCASE("Poisson stream is flat, g2 = 1") {
    const auto recs = poisson_records(4000, 0.1, 150.0, 8);
    const auto corr = hbt_correlate(recs, 140.0, 0.125, 3);
    for (std::size_t i = 0; i < corr.counts.size(); ++i) {
      CHECK(corr.counts[i] == corr.counts[corr.counts.size() - 1 - i]);
      CHECK(corr.counts[i] >= 0.0);
    }
    CHECK(corr.edges.front() == -corr.edges.back());
    const G2Estimate g = g2_zero_estimate(corr, 12.5);
    CHECK(std::abs(g.value - 1.0) < 3.0 * g.stderr_value);
    CHECK(g.stderr_value > 0.0);
    CHECK(g.stderr_value < 0.1);
  }
  SUBCASE("at most one click per repetition gives g2 = 0 exactly") {
    std::mt19937_64 rng(2);
    std::bernoulli_distribution emit(0.3);
    std::vector<ClickRecord> recs;
    for (std::uint64_t i = 0; i < 2000; ++i) {
      std::vector<double> times;
      for (int r = 0; r < 12; ++r) {
        if (emit(rng)) times.push_back(12.5 * r + 1.2);
      }
      recs.push_back(record(i, 150.0, times));
    }
    const auto corr = hbt_correlate(recs, 137.5, 0.125, 1);
    CHECK(g2_zero(corr, 12.5) == 0.0);
    CHECK_THROWS_AS(g2_zero(hbt_correlate(recs, 50.0, 0.125), 12.5), ValidationError);
    const auto peaks = side_peak_profile(corr, 12.5, 10);
    // Independent emissions: every side peak is the same within counting noise.
    for (int m = 1; m <= 10; ++m) {
      const double a = peaks[static_cast<std::size_t>(m)].area;
      const double ref = peaks[5].area;
      const double sigma = a * std::sqrt(2.0 / peaks[static_cast<std::size_t>(m)].counts + 2.0 / peaks[5].counts);
      CHECK(std::abs(a - ref) < 3.0 * sigma);
    }
  }
}

TEST_CASE("side peaks with a memoryless reset are flat") {
  ExperimentSpec s;
  s.params.gamma_enh = 25.0;
  s.params.gamma_diag = 0.0;
  s.sim.delta_pulses = true;
  s.sim.reset_p_rand = 1.0;
  s.n_traj = 20000;
  s.seed = 5;
  const HbtResult r = run_hbt(s, Scheme::Weak);
  double far = 0.0, far_counts = 0.0;
  for (int m = 5; m <= 10; ++m) {
    far += r.side_peaks[static_cast<std::size_t>(m)].area / 6.0;
    far_counts += r.side_peaks[static_cast<std::size_t>(m)].counts;
  }
  for (int m = 1; m <= 4; ++m) {
    const auto& p = r.side_peaks[static_cast<std::size_t>(m)];
    const double sigma = p.area * std::sqrt(2.0 / p.counts + 2.0 / far_counts);
    CHECK(std::abs(p.area - far) < 3.0 * sigma);
  }
  CHECK(r.g2.value < 0.05);
}

TEST_CASE("filtering out reset-era photons lowers g2") {
  ExperimentSpec s;
  s.params.gamma_enh = 25.0;
  s.params.gamma_diag = 0.0;
  s.sim.delta_pulses = true;
  s.sim.reset_emission_prob = 0.05;
  s.analysis.windows = {{1.1, 7.1}};
  s.n_traj = 20000;
  s.seed = 12;
  const HbtResult r = run_hbt(s, Scheme::Weak);
  REQUIRE(r.g2_filtered.has_value());
  CHECK(r.g2_filtered->value < r.g2.value - 3.0 * r.g2.stderr_value);
}

TEST_CASE("umi_intensity") {
  const TwoBins coherent(1.0);
  auto overlap = [](const Histogram& h) { return h.integrate(1.0, 2.0); };
  const Histogram zero = umi_intensity(coherent.g1, coherent.intensity, UMIConfig{1.0, 0.0});
  const Histogram pi = umi_intensity(coherent.g1, coherent.intensity, UMIConfig{1.0, kPi});
  const TwoBins incoherent(0.0);
  const double plain = overlap(umi_intensity(incoherent.g1, incoherent.intensity, UMIConfig{1.0, 0.0}));
  CHECK(plain == doctest::Approx(0.5));
  CHECK(overlap(zero) == doctest::Approx(2.0 * plain));
  CHECK(std::abs(overlap(pi)) < 1e-9);
  CHECK(zero.integrate(0.0, 1.0) == doctest::Approx(pi.integrate(0.0, 1.0)));
  CHECK(zero.integrate(2.0, 3.0) == doctest::Approx(pi.integrate(2.0, 3.0)));
  CHECK(zero.integrate(0.0, 1.0) == doctest::Approx(0.25));

  for (double phase : {0.0, 0.4, 1.3, 2.9}) {
    const Histogram h = umi_intensity(incoherent.g1, incoherent.intensity, UMIConfig{1.0, phase});
    CHECK(h.integrate(-1.0, 10.0) == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(umi_intensity(coherent.g1, coherent.intensity, UMIConfig{1.05, 0.0}), ValidationError);
}

TEST_CASE("visibility") {
  std::vector<std::pair<double, double>> scan;
  for (int k = 0; k < 8; ++k) {
    const double phi = 2.0 * kPi * k / 8.0;
    scan.emplace_back(phi, 1.0 + 0.656 * std::cos(phi));
  }
  const VisibilityFit v = visibility(scan);
  CHECK(v.V == doctest::Approx(0.656).epsilon(1e-9));
  CHECK(std::abs(v.phi0) < 1e-9);

  for (auto& p : scan) p.second = 2.0;
  CHECK(std::abs(visibility(scan).V) < 1e-9);

  for (auto& p : scan) p.second = -1.0;
  CHECK_THROWS_AS(visibility(scan), NumericalError);
  CHECK_THROWS_AS(visibility({{0.0, 1.0}, {1.0, 1.2}, {2.0, 1.1}}), ValidationError);

  const auto doc = nlohmann::json::parse(visibility_json(v));
  for (const char* key : {"A", "B", "phi0_rad", "V", "stderr_V"}) CHECK(doc.contains(key));
}

TEST_CASE("apply_detector") {
  const auto recs = poisson_records(500, 0.2, 100.0, 4);
  std::size_t n = 0;
  for (const auto& r : recs) n += r.clicks.size();

  DetectorModel lossy;
  lossy.efficiency = 0.5;
  std::size_t kept = 0;
  for (const auto& r : apply_detector(recs, lossy, 1)) kept += r.clicks.size();
  CHECK(std::abs(double(kept) - 0.5 * n) < 3.0 * std::sqrt(0.25 * n));

  DetectorModel dark;
  dark.efficiency = 0.0;
  dark.dark_rate = 0.01;
  std::size_t darks = 0;
  for (const auto& r : apply_detector(recs, dark, 1)) darks += r.clicks.size();
  CHECK(std::abs(double(darks) - 500.0) < 3.0 * std::sqrt(500.0));

  DetectorModel jitter;
  jitter.jitter_sigma = 0.05;
  for (const auto& r : apply_detector(recs, jitter, 1)) {
    for (std::size_t i = 1; i < r.clicks.size(); ++i) CHECK(r.clicks[i].time_ns > r.clicks[i - 1].time_ns);
  }
}

TEST_CASE("CSV formats") {
  Histogram h;
  h.edges = {0.0, 0.5, 1.0};
  h.values = {2.0, 3.0};
  std::ostringstream a;
  write_histogram_csv(a, h);
  CHECK(a.str().rfind("bin_start_ns,bin_end_ns,value\n", 0) == 0);
  const auto corr = hbt_correlate({record(0, 10.0, {1.0, 2.0})}, 5.0, 1.0);
  std::ostringstream b;
  write_correlation_csv(b, corr);
  CHECK(b.str().rfind("bin_start_ns,bin_end_ns,value\n", 0) == 0);
}
