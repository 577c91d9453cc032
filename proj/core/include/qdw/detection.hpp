#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "qdw/fitting.hpp"
#include "qdw/pulse.hpp"
#include "qdw/system.hpp"
#include "qdw/trajectories.hpp"

namespace qdw {

struct Histogram {
  std::vector<double> edges;   // strictly increasing, size = values.size() + 1
  std::vector<double> values;  // counts or a density

  std::size_t size() const noexcept { return values.size(); }
  double bin_start(std::size_t i) const { return edges[i]; }
  double bin_end(std::size_t i) const { return edges[i + 1]; }
  double total() const;
  /// Sum of value * width over bins whose centre lies in [a, b). For count histograms pass
  /// weighted = false to sum plain counts.
  double integrate(double a, double b, bool weighted = true) const;
};

/// Coincidence histogram over signed delay. Symmetric bins; `durations` are the record lengths,
/// used to correct for the finite overlap of each record with itself at large |tau|.
struct CorrelationHistogram {
  std::vector<double> edges;
  std::vector<double> counts;
  std::vector<double> durations;

  double max_tau() const { return edges.back(); }
  double bin_width() const { return edges[1] - edges[0]; }
  /// Total record overlap at delay tau: sum_i max(0, D_i - |tau|).
  double exposure(double tau) const;
  /// Raw counts in the cluster |tau - centre| < half_width (bin centres).
  double cluster_counts(double centre, double half_width) const;
};

Histogram time_resolved_histogram(const std::vector<ClickRecord>& records, Channel channel,
                                  double bin_width, double sync_period);

using TimeWindow = std::pair<double, double>;

/// Keeps clicks whose folded time t mod sync_period lies in one of the [start, end) windows.
std::vector<ClickRecord> temporal_filter(const std::vector<ClickRecord>& records,
                                         const std::vector<TimeWindow>& windows,
                                         double sync_period);

/// HBT coincidences of `channel` clicks within each record. Every click is routed to detector A
/// or B by a fair coin (seeded per record from `seed`); each A/B pair is histogrammed at both
/// +tau and -tau, so the histogram is exactly symmetric and same-detector pairs never count.
CorrelationHistogram hbt_correlate(const std::vector<ClickRecord>& records, double max_tau,
                                   double bin_width, std::uint64_t seed = 0,
                                   Channel channel = Channel::Enhanced);

struct FarPeakRange {
  int m_min = 5;
  int m_max = 10;
};

struct G2Estimate {
  double value = 0.0;
  double stderr_value = 0.0;  // Poisson
};

/// Area of the |tau| < T/2 cluster over the mean of the far clusters |tau - m T| < T/2,
/// m in [m_min, m_max] on both sides. Every bin is divided by the record overlap at its delay.
double g2_zero(const CorrelationHistogram& corr, double rep_period, FarPeakRange far = {});
G2Estimate g2_zero_estimate(const CorrelationHistogram& corr, double rep_period,
                            FarPeakRange far = {});

struct PeakArea {
  int m = 0;
  double area = 0.0;    // mean of the +m and -m clusters, per unit overlap
  double counts = 0.0;  // raw counts of both clusters
};

/// Cluster areas for m = 0..m_max, same normalisation as g2_zero.
std::vector<PeakArea> side_peak_profile(const CorrelationHistogram& corr, double rep_period,
                                        int m_max);

/// Unbalanced Michelson interferometer, 50:50 split. The long arm lags by `delay`.
struct UMIConfig {
  double delay = kDefaultBinSpacing;
  double phase = 0.0;
};

/// Uniformly sampled real series.
struct SampledSeries {
  double t_start = 0.0;
  double dt = 0.0;
  std::vector<double> values;
  double time(std::size_t k) const { return t_start + static_cast<double>(k) * dt; }
};

/// G1(t_start + k dt, tau) for one delay tau.
struct G1Series {
  double t_start = 0.0;
  double dt = 0.0;
  double tau = 0.0;
  std::vector<std::complex<double>> values;
};

/// Output of one interferometer port, summed over both arms, on the sample grid:
///   I_out(t) = I(t)/4 + I(t - delay)/4 + Re[e^{i phase} G1(t - delay, delay)]/2
/// Bin k spans [t_k - dt/2, t_k + dt/2) with density I_out(t_k). Requires delay to be a
/// multiple of dt matching g1.tau and the two series to share their grid.
Histogram umi_intensity(const G1Series& g1, const SampledSeries& intensity, const UMIConfig& cfg);

struct VisibilityFit {
  double A = 0.0;
  double B = 0.0;
  double phi0 = 0.0;
  double V = 0.0;
  double stderr_V = 0.0;
  FitResult fit;
};

/// Fits I(phi) = A + B cos(phi + phi0), V = B / A. Throws NumericalError if A <= 0.
VisibilityFit visibility(const std::vector<std::pair<double, double>>& phase_scan);

/// Optional detector imperfections, applied after simulation.
struct DetectorModel {
  double efficiency = 1.0;
  double dark_rate = 0.0;    // 1/ns, uniform over each record
  double jitter_sigma = 0.0; // ns, Gaussian
};

std::vector<ClickRecord> apply_detector(const std::vector<ClickRecord>& records,
                                        const DetectorModel& model, std::uint64_t seed);

void write_histogram_csv(std::ostream& out, const Histogram& hist);
void write_correlation_csv(std::ostream& out, const CorrelationHistogram& corr);
std::string visibility_json(const VisibilityFit& fit);

}  // namespace qdw
