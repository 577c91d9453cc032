#include "qdw/liouvillian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qdw {

namespace {

constexpr int kH = idx(Level::H);
constexpr int kHBar = idx(Level::HBar);
constexpr int kTBar = idx(Level::TBar);

bool is_diagonal(const OperatorMatrix& m) {
  for (int i = 0; i < kLevels; ++i) {
    for (int j = 0; j < kLevels; ++j) {
      if (i != j && m(i, j) != Complex(0.0)) return false;
    }
  }
  return true;
}

}  // namespace

Liouvillian::Liouvillian(const SystemParams& params, double ground_detuning)
    : collapse_(build_collapse_ops(params)) {
  for (auto& r : channel_rates_) r.setZero();
  OperatorMatrix decay = OperatorMatrix::Zero();
  for (const auto& c : collapse_) {
    const OperatorMatrix ldl = c.op.adjoint() * c.op;
    decay += ldl;
    channel_rates_[static_cast<int>(c.channel)] += ldl;

    Jump j;
    int nonzero = 0;
    for (int r = 0; r < kLevels; ++r) {
      for (int s = 0; s < kLevels; ++s) {
        if (c.op(r, s) != Complex(0.0)) {
          ++nonzero;
          j.row = r;
          j.col = s;
          j.weight = std::norm(c.op(r, s));
        }
      }
    }
    if (nonzero == 1) {
      j.kind = Jump::Kind::Single;
    } else if (is_diagonal(c.op)) {
      j.kind = Jump::Kind::Diagonal;
      j.diag = c.op.diagonal();
    } else {
      j.kind = Jump::Kind::Dense;
      j.dense = c.op;
    }
    jumps_.push_back(std::move(j));
  }
  if (!is_diagonal(decay)) throw std::logic_error("Liouvillian expects a diagonal sum of L^dag L");

  const OperatorMatrix h0 = build_hamiltonian(params, 0.0, ground_detuning);
  if (!is_diagonal(h0)) throw std::logic_error("Liouvillian expects a diagonal drive-free Hamiltonian");
  heff_diag_ = h0.diagonal() - Complex(0.0, 0.5) * decay.diagonal();
  for (int k = 0; k < kLevels; ++k) fastest_scale_ = std::max(fastest_scale_, std::abs(heff_diag_(k)) * 2.0);
}

OperatorMatrix Liouvillian::effective_hamiltonian(Complex omega) const {
  OperatorMatrix h = heff_diag_.asDiagonal();
  h(kTBar, kHBar) += 0.5 * omega;
  h(kHBar, kTBar) += 0.5 * std::conj(omega);
  return h;
}

double Liouvillian::fastest_rate(double peak_rabi) const { return std::max(fastest_scale_, peak_rabi); }

OperatorMatrix Liouvillian::apply(const OperatorMatrix& x, Complex omega) const {
  const Complex half = 0.5 * omega;
  const Complex half_conj = std::conj(half);
  const Complex* d = heff_diag_.data();

  // hx = H_eff x, xh = x H_eff^dag
  OperatorMatrix hx;
  OperatorMatrix xh;
  for (int j = 0; j < kLevels; ++j) {
    for (int i = 0; i < kLevels; ++i) {
      hx(i, j) = d[i] * x(i, j);
      xh(i, j) = x(i, j) * std::conj(d[j]);
    }
  }
  if (omega != Complex(0.0)) {
    for (int j = 0; j < kLevels; ++j) {
      hx(kTBar, j) += half * x(kHBar, j);
      hx(kHBar, j) += half_conj * x(kTBar, j);
    }
    for (int i = 0; i < kLevels; ++i) {
      xh(i, kTBar) += x(i, kHBar) * half_conj;
      xh(i, kHBar) += x(i, kTBar) * half;
    }
  }
  OperatorMatrix out = Complex(0.0, -1.0) * (hx - xh);
  for (const auto& j : jumps_) {
    switch (j.kind) {
      case Jump::Kind::Single:
        out(j.row, j.row) += j.weight * x(j.col, j.col);
        break;
      case Jump::Kind::Diagonal:
        for (int c = 0; c < kLevels; ++c) {
          for (int r = 0; r < kLevels; ++r) out(r, c) += j.diag(r) * x(r, c) * std::conj(j.diag(c));
        }
        break;
      case Jump::Kind::Dense:
        out += j.dense * x * j.dense.adjoint();
        break;
    }
  }
  return out;
}

OperatorMatrix delta_pulse_unitary(double area, double phase) {
  const double c = std::cos(0.5 * area);
  const double s = std::sin(0.5 * area);
  OperatorMatrix u = OperatorMatrix::Identity();
  u(kHBar, kHBar) = c;
  u(kTBar, kTBar) = c;
  u(kTBar, kHBar) = Complex(0.0, -s) * std::polar(1.0, phase);
  u(kHBar, kTBar) = Complex(0.0, -s) * std::polar(1.0, -phase);
  return u;
}

void apply_reset(OperatorMatrix& x, double p_rand) {
  if (p_rand == 0.0) return;
  const double keep = 1.0 - p_rand;
  const Complex mean = 0.5 * (x(kH, kH) + x(kHBar, kHBar));
  x(kH, kH) = keep * x(kH, kH) + p_rand * mean;
  x(kHBar, kHBar) = keep * x(kHBar, kHBar) + p_rand * mean;
  x(kH, kHBar) *= keep;
  x(kHBar, kH) *= keep;
  for (int g : {kH, kHBar}) {
    for (int e : {idx(Level::T), kTBar}) {
      x(g, e) *= keep;
      x(e, g) *= keep;
    }
  }
}

void apply_prepare_hbar(OperatorMatrix& x) {
  const Complex tr = x.trace();
  x.setZero();
  x(kHBar, kHBar) = tr;
}

std::vector<SequenceEvent> collect_events(const PulseSequence& seq, double t_a, double t_b,
                                          bool include_start, bool delta_pulses) {
  std::vector<SequenceEvent> events;
  if (t_b < t_a) return events;
  const double period = seq.rep_period;
  const auto first = static_cast<long long>(std::floor(std::max(t_a, 0.0) / period));
  const auto last = static_cast<long long>(std::floor(std::max(t_b, 0.0) / period));
  auto inside = [&](double t) { return (t > t_a || (include_start && t >= t_a)) && t <= t_b && t >= 0.0; };
  for (long long r = first; r <= last; ++r) {
    const double base = static_cast<double>(r) * period;
    if (seq.prepare_hbar && inside(base)) events.push_back({SequenceEvent::Kind::Prepare, base, 0.0, 0.0});
    for (const auto& reset : seq.resets) {
      const double t = base + reset.t0;
      if (inside(t)) events.push_back({SequenceEvent::Kind::Reset, t, reset.p_rand, 0.0});
    }
    for (const auto& p : seq.pulses) {
      if (delta_pulses) {
        const double t = base + p.center();
        if (inside(t)) events.push_back({SequenceEvent::Kind::DeltaPulse, t, p.area, p.phase});
      } else {
        for (double t : {base + p.t0, base + p.t_end()}) {
          if (inside(t)) events.push_back({SequenceEvent::Kind::Edge, t, 0.0, 0.0});
        }
      }
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const SequenceEvent& a, const SequenceEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });
  return events;
}

SegmentDrive::SegmentDrive(const PulseSequence& seq, double t_a, double t_b, bool delta_pulses) {
  if (delta_pulses) return;
  const double mid = 0.5 * (t_a + t_b);
  if (mid < 0.0) return;
  const double rep = std::floor(mid / seq.rep_period);
  const double local = mid - rep * seq.rep_period;
  for (const auto& p : seq.pulses) {
    if (local >= p.t0 && local < p.t_end()) {
      pulse_ = &p;
      rep_offset_ = rep * seq.rep_period;
      return;
    }
  }
}

Complex SegmentDrive::operator()(double t) const {
  if (pulse_ == nullptr) return 0.0;
  return std::polar(pulse_envelope(*pulse_, t - rep_offset_), pulse_->phase);
}

}  // namespace qdw
