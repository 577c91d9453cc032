#include "qdw/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "qdw/errors.hpp"

namespace qdw {

namespace {

double fold(double t, double period) {
  const double f = std::fmod(t, period);
  return f < 0.0 ? f + period : f;
}

std::vector<double> uniform_edges(double start, double end, double width) {
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((end - start) / width - 1e-9)));
  std::vector<double> edges(n + 1);
  for (std::size_t k = 0; k < n; ++k) edges[k] = start + static_cast<double>(k) * width;
  edges[n] = end;
  return edges;
}

void enforce_strict_order(std::vector<Click>& clicks) {
  std::stable_sort(clicks.begin(), clicks.end(), [](const Click& a, const Click& b) { return a.time_ns < b.time_ns; });
  for (std::size_t k = 1; k < clicks.size(); ++k) {
    if (clicks[k].time_ns <= clicks[k - 1].time_ns) {
      clicks[k].time_ns = std::nextafter(clicks[k - 1].time_ns, std::numeric_limits<double>::infinity());
    }
  }
}

// Record overlap sum_i max(0, D_i - |tau|) from sorted durations and suffix sums.
class ExposureTable {
public:
  explicit ExposureTable(std::vector<double> durations) : sorted_(std::move(durations)) {
    std::sort(sorted_.begin(), sorted_.end());
    suffix_.assign(sorted_.size() + 1, 0.0);
    for (std::size_t i = sorted_.size(); i-- > 0;) suffix_[i] = suffix_[i + 1] + sorted_[i];
  }
  double operator()(double tau) const {
    const double a = std::abs(tau);
    const auto first = static_cast<std::size_t>(std::upper_bound(sorted_.begin(), sorted_.end(), a) - sorted_.begin());
    return suffix_[first] - a * static_cast<double>(sorted_.size() - first);
  }

private:
  std::vector<double> sorted_;
  std::vector<double> suffix_;
};

// Cluster counts with every bin divided by the overlap at its own delay, times the cluster width.
double normalised_cluster(const CorrelationHistogram& corr, const ExposureTable& exposure, double centre,
                          double half) {
  double s = 0.0;
  for (std::size_t i = 0; i < corr.counts.size(); ++i) {
    const double c = 0.5 * (corr.edges[i] + corr.edges[i + 1]);
    if (std::abs(c - centre) >= half || corr.counts[i] == 0.0) continue;
    const double e = exposure(c);
    if (e > 0.0) s += corr.counts[i] / e;
  }
  return s;
}

double cluster_area(const CorrelationHistogram& corr, const ExposureTable& exposure, int m, double rep_period) {
  const double half = 0.5 * rep_period;
  if (m == 0) return normalised_cluster(corr, exposure, 0.0, half);
  const double centre = m * rep_period;
  return 0.5 * (normalised_cluster(corr, exposure, centre, half) + normalised_cluster(corr, exposure, -centre, half));
}

void require_span(const CorrelationHistogram& corr, double rep_period, int m_max) {
  if (!(rep_period > 0.0)) throw ValidationError("rep_period must be > 0");
  if (corr.edges.size() < 2) throw ValidationError("empty correlation histogram");
  const double need = (m_max + 0.5) * rep_period;
  if (corr.max_tau() < need - 1e-9) {
    throw ValidationError(fmt::format("correlation range {} ns is too short, peaks up to m = {} need {} ns",
                                      corr.max_tau(), m_max, need));
  }
}

}  // namespace

double Histogram::total() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

double Histogram::integrate(double a, double b, bool weighted) const {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double c = 0.5 * (edges[i] + edges[i + 1]);
    if (c >= a && c < b) s += weighted ? values[i] * (edges[i + 1] - edges[i]) : values[i];
  }
  return s;
}

double CorrelationHistogram::exposure(double tau) const {
  double s = 0.0;
  for (double d : durations) s += std::max(0.0, d - std::abs(tau));
  return s;
}

double CorrelationHistogram::cluster_counts(double centre, double half_width) const {
  double s = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double c = 0.5 * (edges[i] + edges[i + 1]);
    if (std::abs(c - centre) < half_width) s += counts[i];
  }
  return s;
}

Histogram time_resolved_histogram(const std::vector<ClickRecord>& records, Channel channel, double bin_width,
                                  double sync_period) {
  if (!(bin_width > 0.0)) throw ValidationError("histogram bin_width must be > 0");
  if (!(sync_period > 0.0)) throw ValidationError("histogram sync_period must be > 0");
  Histogram h;
  h.edges = uniform_edges(0.0, sync_period, bin_width);
  h.values.assign(h.edges.size() - 1, 0.0);
  for (const auto& r : records) {
    for (const auto& c : r.clicks) {
      if (c.channel != channel) continue;
      const double f = fold(c.time_ns, sync_period);
      auto k = static_cast<std::size_t>(f / bin_width);
      k = std::min(k, h.values.size() - 1);
      h.values[k] += 1.0;
    }
  }
  return h;
}

std::vector<ClickRecord> temporal_filter(const std::vector<ClickRecord>& records,
                                         const std::vector<TimeWindow>& windows, double sync_period) {
  if (!(sync_period > 0.0)) throw ValidationError("temporal_filter: sync_period must be > 0");
  std::vector<TimeWindow> sorted = windows;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (!(sorted[k].second > sorted[k].first)) {
      throw ValidationError(fmt::format("temporal_filter: window [{}, {}) is empty", sorted[k].first, sorted[k].second));
    }
    if (k > 0 && sorted[k].first < sorted[k - 1].second) {
      throw ValidationError("temporal_filter: windows overlap");
    }
  }
  std::vector<ClickRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    ClickRecord kept{r.traj, r.seed, r.duration_ns, {}};
    for (const auto& c : r.clicks) {
      const double f = fold(c.time_ns, sync_period);
      const bool inside = std::any_of(sorted.begin(), sorted.end(),
                                      [&](const TimeWindow& w) { return f >= w.first && f < w.second; });
      if (inside) kept.clicks.push_back(c);
    }
    out.push_back(std::move(kept));
  }
  return out;
}

CorrelationHistogram hbt_correlate(const std::vector<ClickRecord>& records, double max_tau, double bin_width,
                                   std::uint64_t seed, Channel channel) {
  if (!(bin_width > 0.0)) throw ValidationError("hbt_correlate: bin_width must be > 0");
  if (!(max_tau > 0.0)) throw ValidationError("hbt_correlate: max_tau must be > 0");
  const auto half = static_cast<std::size_t>(std::max(1.0, std::round(max_tau / bin_width)));
  const double reach = static_cast<double>(half) * bin_width;

  CorrelationHistogram corr;
  corr.edges.resize(2 * half + 1);
  for (std::size_t k = 0; k <= 2 * half; ++k) {
    corr.edges[k] = (static_cast<double>(k) - static_cast<double>(half)) * bin_width;
  }
  corr.counts.assign(2 * half, 0.0);
  corr.durations.reserve(records.size());

  std::vector<std::pair<double, bool>> tags;
  for (const auto& r : records) {
    corr.durations.push_back(r.duration_ns);
    std::mt19937_64 rng(trajectory_seed(seed ^ 0x8cb92ba72f3d8dd7ULL, r.traj));
    std::bernoulli_distribution coin(0.5);
    tags.clear();
    for (const auto& c : r.clicks) {
      if (c.channel == channel) tags.emplace_back(c.time_ns, coin(rng));
    }
    for (std::size_t i = 0; i < tags.size(); ++i) {
      for (std::size_t j = i + 1; j < tags.size(); ++j) {
        const double tau = tags[j].first - tags[i].first;
        if (tau > reach) break;
        if (tags[i].second == tags[j].second) continue;
        const auto k = std::min(static_cast<std::size_t>(tau / bin_width), half - 1);
        corr.counts[half + k] += 1.0;
        corr.counts[half - 1 - k] += 1.0;
      }
    }
  }
  return corr;
}

double g2_zero(const CorrelationHistogram& corr, double rep_period, FarPeakRange far) {
  return g2_zero_estimate(corr, rep_period, far).value;
}

G2Estimate g2_zero_estimate(const CorrelationHistogram& corr, double rep_period, FarPeakRange far) {
  if (far.m_min < 1 || far.m_max < far.m_min) throw ValidationError("far peak range must satisfy 1 <= m_min <= m_max");
  require_span(corr, rep_period, far.m_max);
  const ExposureTable exposure(corr.durations);
  double far_area = 0.0;
  double far_counts = 0.0;
  for (int m = far.m_min; m <= far.m_max; ++m) {
    far_area += cluster_area(corr, exposure, m, rep_period);
    far_counts += corr.cluster_counts(m * rep_period, 0.5 * rep_period) +
                  corr.cluster_counts(-m * rep_period, 0.5 * rep_period);
  }
  far_area /= static_cast<double>(far.m_max - far.m_min + 1);
  if (!(far_area > 0.0)) throw NumericalError("g2_zero: no coincidences in the normalising peaks");
  const double central_counts = corr.cluster_counts(0.0, 0.5 * rep_period);
  G2Estimate est;
  est.value = cluster_area(corr, exposure, 0, rep_period) / far_area;
  // Each pair is histogrammed twice, so the count variance is twice the count.
  const double per_count = 1.0 / exposure(0.0) / far_area;
  const double central_var = 2.0 * std::max(central_counts, 1.0) * per_count * per_count;
  est.stderr_value = std::sqrt(central_var + est.value * est.value * 2.0 / far_counts);
  return est;
}

std::vector<PeakArea> side_peak_profile(const CorrelationHistogram& corr, double rep_period, int m_max) {
  if (m_max < 0) throw ValidationError("side_peak_profile: m_max must be >= 0");
  require_span(corr, rep_period, m_max);
  const ExposureTable exposure(corr.durations);
  std::vector<PeakArea> out;
  for (int m = 0; m <= m_max; ++m) {
    PeakArea p;
    p.m = m;
    p.area = cluster_area(corr, exposure, m, rep_period);
    p.counts = m == 0 ? corr.cluster_counts(0.0, 0.5 * rep_period)
                      : corr.cluster_counts(m * rep_period, 0.5 * rep_period) +
                            corr.cluster_counts(-m * rep_period, 0.5 * rep_period);
    out.push_back(p);
  }
  return out;
}

Histogram umi_intensity(const G1Series& g1, const SampledSeries& intensity, const UMIConfig& cfg) {
  if (!(cfg.delay > 0.0)) throw ValidationError("UMI delay must be > 0");
  if (!(intensity.dt > 0.0) || intensity.values.empty()) throw ValidationError("UMI intensity series is empty");
  const double dt = intensity.dt;
  if (std::abs(g1.dt - dt) > 1e-12 * dt || std::abs(g1.t_start - intensity.t_start) > 1e-12 * std::max(1.0, dt) ||
      g1.values.size() != intensity.values.size()) {
    throw ValidationError("UMI: G1 and intensity series must share one time grid");
  }
  const double steps = cfg.delay / dt;
  const auto shift = static_cast<std::size_t>(std::llround(steps));
  if (shift == 0 || std::abs(steps - static_cast<double>(shift)) > 1e-6 ||
      std::abs(g1.tau - cfg.delay) > 1e-9 * std::max(1.0, cfg.delay)) {
    throw ValidationError(fmt::format("UMI delay {} ns is not on the G1 delay grid (tau {} ns, dt {} ns)", cfg.delay,
                                      g1.tau, dt));
  }
  const std::size_t n = intensity.values.size();
  const Complex rot = std::polar(1.0, cfg.phase);
  double peak = 0.0;
  for (double v : intensity.values) peak = std::max(peak, std::abs(v));

  Histogram h;
  h.edges.resize(n + shift + 1);
  for (std::size_t k = 0; k <= n + shift; ++k) h.edges[k] = intensity.t_start + (static_cast<double>(k) - 0.5) * dt;
  h.values.assign(n + shift, 0.0);
  for (std::size_t k = 0; k < n + shift; ++k) {
    double v = 0.0;
    if (k < n) v += 0.25 * intensity.values[k];
    if (k >= shift) {
      const std::size_t j = k - shift;
      v += 0.25 * intensity.values[j] + 0.5 * (rot * g1.values[j]).real();
    }
    if (v < 0.0) {
      if (v < -1e-9 * std::max(peak, 1e-300)) {
        throw NumericalError(fmt::format("UMI intensity {} at t = {} ns is negative beyond tolerance", v,
                                         intensity.t_start + static_cast<double>(k) * dt));
      }
      v = 0.0;
    }
    h.values[k] = v;
  }
  return h;
}

VisibilityFit visibility(const std::vector<std::pair<double, double>>& phase_scan) {
  std::vector<double> phi;
  std::vector<double> y;
  for (const auto& [p, v] : phase_scan) {
    phi.push_back(p);
    y.push_back(v);
  }
  VisibilityFit out;
  out.fit = fit_sinusoid(phi, y);
  out.A = out.fit.value("A");
  out.B = out.fit.value("B");
  out.phi0 = out.fit.value("phi0");
  if (!(out.A > 0.0)) throw NumericalError(fmt::format("visibility: fitted offset A = {} is not positive", out.A));
  out.V = out.B / out.A;
  const double ea = out.fit.stderr_of("A") / out.A;
  const double eb = out.B > 0.0 ? out.fit.stderr_of("B") / out.B : 0.0;
  out.stderr_V = out.B > 0.0 ? out.V * std::hypot(ea, eb) : out.fit.stderr_of("B") / out.A;
  return out;
}

std::vector<ClickRecord> apply_detector(const std::vector<ClickRecord>& records, const DetectorModel& model,
                                        std::uint64_t seed) {
  if (!(model.efficiency >= 0.0 && model.efficiency <= 1.0)) throw ValidationError("detector efficiency must lie in [0, 1]");
  if (!(model.dark_rate >= 0.0)) throw ValidationError("detector dark_rate must be >= 0");
  if (!(model.jitter_sigma >= 0.0)) throw ValidationError("detector jitter_sigma must be >= 0");
  std::vector<ClickRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    std::mt19937_64 rng(trajectory_seed(seed ^ 0xd1b54a32d192ed03ULL, r.traj));
    std::bernoulli_distribution keep(model.efficiency);
    std::normal_distribution<double> jitter(0.0, model.jitter_sigma > 0.0 ? model.jitter_sigma : 1.0);
    ClickRecord o{r.traj, r.seed, r.duration_ns, {}};
    for (const auto& c : r.clicks) {
      if (model.efficiency < 1.0 && !keep(rng)) continue;
      Click d = c;
      if (model.jitter_sigma > 0.0) d.time_ns = std::clamp(d.time_ns + jitter(rng), 0.0, std::nextafter(r.duration_ns, 0.0));
      o.clicks.push_back(d);
    }
    if (model.dark_rate > 0.0) {
      std::poisson_distribution<int> n_dark(model.dark_rate * r.duration_ns);
      std::uniform_real_distribution<double> when(0.0, r.duration_ns);
      for (int k = n_dark(rng); k > 0; --k) o.clicks.push_back({when(rng), Channel::Enhanced});
    }
    enforce_strict_order(o.clicks);
    out.push_back(std::move(o));
  }
  return out;
}

void write_histogram_csv(std::ostream& out, const Histogram& hist) {
  out << "bin_start_ns,bin_end_ns,value\n";
  for (std::size_t i = 0; i < hist.size(); ++i) out << fmt::format("{},{},{}\n", hist.edges[i], hist.edges[i + 1], hist.values[i]);
}

void write_correlation_csv(std::ostream& out, const CorrelationHistogram& corr) {
  out << "bin_start_ns,bin_end_ns,value\n";
  for (std::size_t i = 0; i < corr.counts.size(); ++i) {
    out << fmt::format("{},{},{}\n", corr.edges[i], corr.edges[i + 1], corr.counts[i]);
  }
}

std::string visibility_json(const VisibilityFit& fit) {
  nlohmann::ordered_json j;
  j["A"] = fit.A;
  j["B"] = fit.B;
  j["phi0_rad"] = fit.phi0;
  j["V"] = fit.V;
  j["stderr_V"] = fit.stderr_V;
  return j.dump(2);
}

}  // namespace qdw
