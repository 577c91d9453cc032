#include "qdw/trajectories.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "qdw/errors.hpp"
#include "qdw/liouvillian.hpp"

namespace qdw {

namespace {

constexpr int kH = idx(Level::H);
constexpr int kHBar = idx(Level::HBar);
constexpr int kTBar = idx(Level::TBar);
constexpr std::size_t kChunk = 256;

using State = Eigen::Vector4cd;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Initial-state sampler: a diagonal rho0 is a classical mixture of levels, otherwise rho0 must be pure.
class InitialState {
public:
  explicit InitialState(const DensityMatrix& rho0) {
    const OperatorMatrix& m = rho0.matrix();
    double off = 0.0;
    for (int i = 0; i < kLevels; ++i) {
      for (int j = 0; j < kLevels; ++j) {
        if (i != j) off = std::max(off, std::abs(m(i, j)));
      }
    }
    if (off < 1e-12) {
      for (int i = 0; i < kLevels; ++i) weights_[static_cast<std::size_t>(i)] = std::max(0.0, m(i, i).real());
      return;
    }
    Eigen::SelfAdjointEigenSolver<OperatorMatrix> solver(m);
    if (solver.eigenvalues()(kLevels - 1) < 1.0 - 1e-9) {
      throw ValidationError("trajectory sampling needs a diagonal or a pure initial density matrix");
    }
    pure_ = solver.eigenvectors().col(kLevels - 1);
    is_pure_ = true;
  }

  State draw(std::mt19937_64& rng) const {
    if (is_pure_) return pure_;
    std::discrete_distribution<int> pick(weights_.begin(), weights_.end());
    State s = State::Zero();
    s(pick(rng)) = 1.0;
    return s;
  }

private:
  std::array<double, kLevels> weights_{};
  State pure_ = State::Zero();
  bool is_pure_ = false;
};

struct TimelineEvent {
  enum class Kind { Prepare, Reset, DeltaPulse, Edge, Sample, End } kind;
  double time;
  double value;
  double phase;
};

class TrajectoryRunner {
public:
  TrajectoryRunner(const DensityMatrix& rho0, const PulseSequence& seq, const SystemParams& params,
                   const TrajectoryOptions& options, const std::vector<double>& sample_times)
      : seq_(seq), params_(params), options_(options), initial_(rho0),
        collapse_(build_collapse_ops(params)), base_diag_(Liouvillian(params).effective_diagonal()) {
    duration_ = static_cast<double>(options.n_reps) * seq.rep_period;
    for (const auto& e : collect_events(seq, 0.0, duration_, true, options.delta_pulses)) {
      if (e.time >= duration_) continue;
      timeline_.push_back({static_cast<TimelineEvent::Kind>(static_cast<int>(e.kind)), e.time, e.value, e.phase});
    }
    for (double t : sample_times) timeline_.push_back({TimelineEvent::Kind::Sample, t, 0.0, 0.0});
    timeline_.push_back({TimelineEvent::Kind::End, duration_, 0.0, 0.0});
    std::stable_sort(timeline_.begin(), timeline_.end(),
                     [](const TimelineEvent& a, const TimelineEvent& b) { return a.time < b.time; });
    n_samples_ = sample_times.size();
  }

  double duration() const { return duration_; }
  std::size_t n_samples() const { return n_samples_; }

  // Runs one trajectory; `samples` (if non-null) receives the normalised rho at each sample time.
  ClickRecord run(std::uint64_t index, std::uint64_t seed, std::vector<OperatorMatrix>* samples) const {
    std::mt19937_64 rng(seed);
    ClickRecord rec;
    rec.traj = index;
    rec.seed = seed;
    rec.duration_ns = duration_;

    diag_ = base_diag_;
    if (params_.dephasing == DephasingMode::QuasiStatic && params_.sigma_quasistatic > 0.0) {
      std::normal_distribution<double> noise(0.0, params_.sigma_quasistatic);
      diag_(kH) += noise(rng);
    }
    psi_ = initial_.draw(rng);
    threshold_ = uniform(rng);
    std::vector<Click> extra;

    double t = 0.0;
    std::size_t sample_k = 0;
    for (const auto& e : timeline_) {
      if (e.time > t) {
        const SegmentDrive drive(seq_, t, e.time, options_.delta_pulses);
        if (drive.active()) {
          evolve_driven(t, e.time, drive, rng, rec);
        } else {
          evolve_free(t, e.time, rng, rec);
        }
        t = e.time;
      }
      switch (e.kind) {
        case TimelineEvent::Kind::Prepare:
          renormalise();
          psi_ = State::Zero();
          psi_(kHBar) = 1.0;
          break;
        case TimelineEvent::Kind::Reset:
          reset(e.time, e.value, rng, extra);
          break;
        case TimelineEvent::Kind::DeltaPulse:
          psi_ = delta_pulse_unitary(e.value, e.phase) * psi_;
          break;
        case TimelineEvent::Kind::Sample:
          if (samples != nullptr) {
            const State v = psi_ / psi_.norm();
            (*samples)[sample_k] = v * v.adjoint();
          }
          ++sample_k;
          break;
        case TimelineEvent::Kind::Edge:
        case TimelineEvent::Kind::End:
          break;
      }
    }

    if (!extra.empty()) {
      for (const auto& c : extra) {
        if (c.time_ns < duration_) rec.clicks.push_back(c);
      }
      std::stable_sort(rec.clicks.begin(), rec.clicks.end(),
                       [](const Click& a, const Click& b) { return a.time_ns < b.time_ns; });
    }
    for (std::size_t k = 1; k < rec.clicks.size(); ++k) {
      if (rec.clicks[k].time_ns <= rec.clicks[k - 1].time_ns) {
        rec.clicks[k].time_ns = std::nextafter(rec.clicks[k - 1].time_ns, std::numeric_limits<double>::infinity());
      }
    }
    return rec;
  }

private:
  static double uniform(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = 0.0;
    while (x == 0.0) x = u(rng);
    return x;
  }

  void renormalise() const {
    const double n = psi_.squaredNorm();
    psi_ /= std::sqrt(n);
    threshold_ /= n;
  }

  State derivative(const State& psi, Complex omega) const {
    State d;
    for (int k = 0; k < kLevels; ++k) d(k) = diag_(k) * psi(k);
    d(kTBar) += 0.5 * omega * psi(kHBar);
    d(kHBar) += 0.5 * std::conj(omega) * psi(kTBar);
    return Complex(0.0, -1.0) * d;
  }

  void evolve_driven(double t_a, double t_b, const SegmentDrive& drive, std::mt19937_64& rng,
                     ClickRecord& rec) const {
    const double span = t_b - t_a;
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(span / options_.dt - 1e-9)));
    const double h = span / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      const double t = t_a + static_cast<double>(s) * h;
      const double n_prev = psi_.squaredNorm();
      const Complex w0 = drive(t);
      const Complex wm = drive(t + 0.5 * h);
      const Complex w1 = drive(t + h);
      const State k1 = derivative(psi_, w0);
      const State k2 = derivative(psi_ + 0.5 * h * k1, wm);
      const State k3 = derivative(psi_ + 0.5 * h * k2, wm);
      const State k4 = derivative(psi_ + h * k3, w1);
      psi_ += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const double n = psi_.squaredNorm();
      if (n <= threshold_) {
        const double frac = std::clamp((n_prev - threshold_) / (n_prev - n), 0.0, 1.0);
        jump(t + frac * h, rng, rec);
      }
    }
  }

  // Drive-free H_eff is diagonal, so the norm decay is a sum of exponentials and the jump time
  // is found by Newton iteration on norm^2(s) = threshold.
  void evolve_free(double t_a, double t_b, std::mt19937_64& rng, ClickRecord& rec) const {
    double t = t_a;
    while (t < t_b) {
      Eigen::Vector4d a;
      Eigen::Vector4d g;
      for (int k = 0; k < kLevels; ++k) {
        a(k) = std::norm(psi_(k));
        g(k) = -2.0 * diag_(k).imag();
      }
      auto norm_at = [&](double s) {
        double n = 0.0;
        for (int k = 0; k < kLevels; ++k) n += a(k) * std::exp(-g(k) * s);
        return n;
      };
      const double span = t_b - t;
      if (norm_at(span) > threshold_) {
        advance_free(span);
        return;
      }
      double lo = 0.0;
      double hi = span;
      double s = 0.0;
      for (int it = 0; it < 200; ++it) {
        const double f = norm_at(s) - threshold_;
        if (f > 0.0) lo = s; else hi = s;
        if (std::abs(f) <= 1e-15 * threshold_ || hi - lo <= 1e-15 * std::max(1.0, t)) break;
        double fp = 0.0;
        for (int k = 0; k < kLevels; ++k) fp -= g(k) * a(k) * std::exp(-g(k) * s);
        double next = fp < 0.0 ? s - f / fp : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        s = next;
      }
      advance_free(s);
      t += s;
      jump(t, rng, rec);
    }
  }

  void advance_free(double s) const {
    for (int k = 0; k < kLevels; ++k) psi_(k) *= std::exp(Complex(0.0, -1.0) * diag_(k) * s);
  }

  void jump(double t, std::mt19937_64& rng, ClickRecord& rec) const {
    std::vector<double> w(collapse_.size());
    double total = 0.0;
    for (std::size_t c = 0; c < collapse_.size(); ++c) {
      w[c] = (collapse_[c].op * psi_).squaredNorm();
      total += w[c];
    }
    threshold_ = uniform(rng);
    if (total <= 0.0) {
      psi_ /= psi_.norm();
      return;
    }
    const double u = uniform(rng) * total;
    std::size_t pick = 0;
    double acc = w[0];
    while (acc < u && pick + 1 < w.size()) acc += w[++pick];
    psi_ = collapse_[pick].op * psi_;
    psi_ /= psi_.norm();
    const Channel ch = collapse_[pick].channel;
    if (ch == Channel::Enhanced || ch == Channel::Diagonal) rec.clicks.push_back({t, ch});
  }

  void reset(double t, double p_rand, std::mt19937_64& rng, std::vector<Click>& extra) const {
    if (options_.reset_emission_prob > 0.0 && uniform(rng) < options_.reset_emission_prob) {
      std::exponential_distribution<double> delay(params_.gamma_total());
      extra.push_back({t + delay(rng), Channel::Enhanced});
    }
    if (p_rand <= 0.0 || uniform(rng) >= p_rand) return;
    renormalise();
    const double ground = std::norm(psi_(kH)) + std::norm(psi_(kHBar));
    if (uniform(rng) < ground) {
      psi_ = State::Zero();
      psi_(uniform(rng) < 0.5 ? kH : kHBar) = 1.0;
    } else {
      psi_(kH) = 0.0;
      psi_(kHBar) = 0.0;
      psi_ /= psi_.norm();
    }
  }

  const PulseSequence& seq_;
  const SystemParams& params_;
  const TrajectoryOptions& options_;
  InitialState initial_;
  std::vector<CollapseOp> collapse_;
  Eigen::Vector4cd base_diag_;
  std::vector<TimelineEvent> timeline_;
  double duration_ = 0.0;
  std::size_t n_samples_ = 0;

  // Per-trajectory scratch; a runner is used by one thread at a time.
  mutable Eigen::Vector4cd diag_;
  mutable State psi_;
  mutable double threshold_ = 1.0;
};

void validate_inputs(const PulseSequence& seq, const SystemParams& params, std::size_t n_traj,
                     const TrajectoryOptions& options) {
  params.validate();
  seq.validate();
  if (n_traj == 0) throw ValidationError("n_traj must be >= 1");
  if (options.n_reps == 0) throw ValidationError("n_reps must be >= 1");
  if (!(options.reset_emission_prob >= 0.0 && options.reset_emission_prob <= 1.0)) {
    throw ValidationError("reset_emission_prob must lie in [0, 1]");
  }
  double detuning = 0.0;
  if (params.dephasing == DephasingMode::QuasiStatic) detuning = 6.0 * params.sigma_quasistatic;
  check_step_size(params, seq, options.dt, options.delta_pulses, detuning);
}

// Runs fn(runner, index) for every trajectory across `threads` workers. Work is handed out in
// fixed chunks so per-chunk reductions are independent of the thread count.
template <class Fn>
void for_each_chunk(std::size_t n_traj, unsigned threads, Fn&& fn) {
  const std::size_t n_chunks = (n_traj + kChunk - 1) / kChunk;
  const unsigned workers = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(n_chunks)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) {
      fn(c, c * kChunk, std::min(n_traj, (c + 1) * kChunk));
    }
  };
  if (workers == 1) {
    work();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
}

}  // namespace

std::uint64_t trajectory_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(master_seed + (index + 1) * 0x9e3779b97f4a7c15ULL);
}

std::vector<ClickRecord> sample_trajectories(const DensityMatrix& rho0, const PulseSequence& seq,
                                             const SystemParams& params, std::size_t n_traj,
                                             std::uint64_t master_seed, const TrajectoryOptions& options) {
  validate_inputs(seq, params, n_traj, options);
  std::vector<ClickRecord> records(n_traj);
  for_each_chunk(n_traj, options.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    const TrajectoryRunner runner(rho0, seq, params, options, {});
    for (std::size_t i = begin; i < end; ++i) records[i] = runner.run(i, trajectory_seed(master_seed, i), nullptr);
  });
  return records;
}

std::vector<OperatorMatrix> ensemble_average(const DensityMatrix& rho0, const PulseSequence& seq,
                                             const SystemParams& params, std::size_t n_traj,
                                             std::uint64_t master_seed, const std::vector<double>& sample_times,
                                             const TrajectoryOptions& options) {
  validate_inputs(seq, params, n_traj, options);
  const double duration = static_cast<double>(options.n_reps) * seq.rep_period;
  for (std::size_t k = 0; k < sample_times.size(); ++k) {
    if (sample_times[k] < 0.0 || sample_times[k] >= duration || (k > 0 && sample_times[k] < sample_times[k - 1])) {
      throw ValidationError("ensemble sample times must be sorted and inside the simulated span");
    }
  }
  const std::size_t n_chunks = (n_traj + kChunk - 1) / kChunk;
  std::vector<std::vector<OperatorMatrix>> partial(n_chunks,
                                                   std::vector<OperatorMatrix>(sample_times.size(), OperatorMatrix::Zero()));
  for_each_chunk(n_traj, options.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
    const TrajectoryRunner runner(rho0, seq, params, options, sample_times);
    std::vector<OperatorMatrix> rho(sample_times.size());
    for (std::size_t i = begin; i < end; ++i) {
      runner.run(i, trajectory_seed(master_seed, i), &rho);
      for (std::size_t k = 0; k < rho.size(); ++k) partial[c][k] += rho[k];
    }
  });
  std::vector<OperatorMatrix> out(sample_times.size(), OperatorMatrix::Zero());
  for (const auto& p : partial) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += p[k];
  }
  for (auto& m : out) m /= static_cast<double>(n_traj);
  return out;
}

void write_clicks_csv(std::ostream& out, const std::vector<ClickRecord>& records) {
  out << "traj,time_ns,channel\n";
  for (const auto& r : records) {
    for (const auto& c : r.clicks) out << fmt::format("{},{},{}\n", r.traj, c.time_ns, channel_name(c.channel));
  }
}

std::size_t count_clicks(const std::vector<ClickRecord>& records, Channel channel) {
  std::size_t n = 0;
  for (const auto& r : records) {
    for (const auto& c : r.clicks) n += c.channel == channel ? 1 : 0;
  }
  return n;
}

}  // namespace qdw
