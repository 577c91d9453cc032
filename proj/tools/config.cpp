#include "config.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "qdw/errors.hpp"
#include "qdw/sequence_io.hpp"

namespace qdw::cli {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Reads the fields of one JSON object, recording type errors and unknown keys instead of
// throwing so that every problem in a document is reported at once.
class Section {
public:
  Section(const json* obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (obj_ != nullptr && !obj_->is_object()) {
      errors_.push_back(fmt::format("{} must be an object", path_));
      obj_ = nullptr;
    }
  }

  ~Section() {
    if (obj_ == nullptr) return;
    for (const auto& [key, value] : obj_->items()) {
      if (seen_.count(key) == 0) errors_.push_back(fmt::format("{}: unknown key '{}'", path_, key));
    }
  }

  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  const json* child(const std::string& key) {
    seen_.insert(key);
    if (obj_ == nullptr || !obj_->contains(key)) return nullptr;
    return &obj_->at(key);
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void number(const std::string& key, double& v) {
    if (const json* j = child(key)) {
      if (j->is_number()) v = j->get<double>();
      else errors_.push_back(fmt::format("{} must be a number", name(key)));
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& v) {
    if (const json* j = child(key)) {
      if (j->is_number_integer() && j->get<long long>() >= 0) v = static_cast<Int>(j->get<long long>());
      else errors_.push_back(fmt::format("{} must be a non-negative integer", name(key)));
    }
  }

  void boolean(const std::string& key, bool& v) {
    if (const json* j = child(key)) {
      if (j->is_boolean()) v = j->get<bool>();
      else errors_.push_back(fmt::format("{} must be true or false", name(key)));
    }
  }

  void text(const std::string& key, std::string& v) {
    if (const json* j = child(key)) {
      if (j->is_string()) v = j->get<std::string>();
      else errors_.push_back(fmt::format("{} must be a string", name(key)));
    }
  }

  void numbers(const std::string& key, std::vector<double>& v) {
    if (const json* j = child(key)) {
      bool ok = j->is_array();
      if (ok) {
        for (const auto& x : *j) ok = ok && x.is_number();
      }
      if (ok) v = j->get<std::vector<double>>();
      else errors_.push_back(fmt::format("{} must be an array of numbers", name(key)));
    }
  }

  std::vector<std::string>& errors() { return errors_; }

private:
  const json* obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void check(std::vector<std::string>& errors, bool ok, std::string message) {
  if (!ok) errors.push_back(std::move(message));
}

void read_params(Section& top, SystemParams& p, std::vector<std::string>& errors) {
  Section s(top.child("params"), "params", errors);
  s.number("gamma_enh", p.gamma_enh);
  s.number("gamma_diag", p.gamma_diag);
  s.number("gamma_deph", p.gamma_deph);
  s.number("sigma_quasistatic", p.sigma_quasistatic);
  s.number("gamma_sf", p.gamma_sf);
  s.number("delta_drive", p.delta_drive);
  s.number("delta_h", p.delta_h);
  std::string mode = p.dephasing == DephasingMode::Markov ? "markov" : "quasistatic";
  s.text("dephasing", mode);
  if (mode == "markov") {
    p.dephasing = DephasingMode::Markov;
  } else if (mode == "quasistatic") {
    p.dephasing = DephasingMode::QuasiStatic;
    // Switching mode without naming a rate leaves the Markov default, which is not allowed.
    if (s.child("gamma_deph") == nullptr) p.gamma_deph = 0.0;
  } else {
    errors.push_back(fmt::format("params.dephasing must be \"markov\" or \"quasistatic\" (got \"{}\")", mode));
  }
}

void read_target(Section& top, TargetSpec& t, std::vector<std::string>& errors) {
  Section s(top.child("target"), "target", errors);
  s.integer("bins", t.bins);
  s.number("total", t.total);
  s.numbers("probs", t.probs);
  s.numbers("phases", t.phases);
  if (!t.probs.empty()) t.bins = t.probs.size();
  check(errors, t.bins >= 1, "target.bins must be >= 1");
  check(errors, t.total > 0.0 && t.total <= 1.0, fmt::format("target.total must lie in (0, 1] (got {})", t.total));
  double sum = 0.0;
  for (std::size_t k = 0; k < t.probs.size(); ++k) {
    check(errors, t.probs[k] >= 0.0, fmt::format("target.probs[{}] must be >= 0 (got {})", k, t.probs[k]));
    sum += t.probs[k];
  }
  check(errors, sum <= 1.0 + 1e-12, fmt::format("target.probs sum to {}, but the sum must be <= 1", sum));
  check(errors, t.phases.empty() || t.phases.size() == t.bins,
        fmt::format("target.phases has {} entries for {} bins", t.phases.size(), t.bins));
}

void read_compile(Section& top, CompileOptions& c, std::vector<std::string>& errors) {
  Section s(top.child("compile"), "compile", errors);
  s.number("bin_spacing_ns", c.bin_spacing);
  s.number("pulse_duration_ns", c.pulse_duration);
  s.number("first_pulse_ns", c.first_pulse);
  s.number("rep_period_ns", c.rep_period);
  std::string shape = c.shape == PulseShape::Square ? "square" : "gaussian";
  s.text("shape", shape);
  if (shape == "square") c.shape = PulseShape::Square;
  else if (shape == "gaussian") c.shape = PulseShape::Gaussian;
  else errors.push_back(fmt::format("compile.shape must be \"square\" or \"gaussian\" (got \"{}\")", shape));
  check(errors, c.bin_spacing > 0.0, "compile.bin_spacing_ns must be > 0");
  check(errors, c.pulse_duration > 0.0, "compile.pulse_duration_ns must be > 0");
  check(errors, c.pulse_duration <= c.bin_spacing, "compile.pulse_duration_ns must not exceed compile.bin_spacing_ns");
  check(errors, c.first_pulse >= 0.0, "compile.first_pulse_ns must be >= 0");
  check(errors, c.rep_period > 0.0, "compile.rep_period_ns must be > 0");
}

void read_simulation(Section& top, SimulationOptions& sim, std::vector<std::string>& errors) {
  Section s(top.child("simulation"), "simulation", errors);
  s.boolean("delta_pulses", sim.delta_pulses);
  s.number("dt_ns", sim.dt);
  s.number("traj_dt_ns", sim.traj_dt);
  s.integer("n_reps", sim.n_reps);
  s.number("reset_p_rand", sim.reset_p_rand);
  s.number("reset_emission_prob", sim.reset_emission_prob);
  s.integer("g1_stride", sim.g1_stride);
  check(errors, sim.dt > 0.0, "simulation.dt_ns must be > 0");
  check(errors, sim.traj_dt > 0.0, "simulation.traj_dt_ns must be > 0");
  check(errors, sim.n_reps >= 1, "simulation.n_reps must be >= 1");
  check(errors, sim.reset_p_rand >= 0.0 && sim.reset_p_rand <= 1.0, "simulation.reset_p_rand must lie in [0, 1]");
  check(errors, sim.reset_emission_prob >= 0.0 && sim.reset_emission_prob <= 1.0,
        "simulation.reset_emission_prob must lie in [0, 1]");
  check(errors, sim.g1_stride % 2 == 1, "simulation.g1_stride must be odd");
}

void read_analysis(Section& top, AnalysisOptions& a, std::vector<std::string>& errors) {
  Section s(top.child("analysis"), "analysis", errors);
  s.number("hist_bin_ns", a.hist_bin_ns);
  s.number("hbt_bin_ns", a.hbt_bin_ns);
  s.number("max_tau_ns", a.max_tau_ns);
  s.integer("far_m_min", a.far.m_min);
  s.integer("far_m_max", a.far.m_max);
  s.numbers("phases_rad", a.phases);
  s.number("umi_delay_ns", a.umi_delay_ns);
  if (const json* w = s.child("windows")) {
    bool ok = w->is_array();
    if (ok) {
      for (const auto& pair : *w) {
        ok = ok && pair.is_array() && pair.size() == 2 && pair[0].is_number() && pair[1].is_number();
        if (ok) a.windows.emplace_back(pair[0].get<double>(), pair[1].get<double>());
      }
    }
    if (!ok) errors.push_back("analysis.windows must be an array of [start_ns, end_ns] pairs");
  }
  {
    Section d(s.child("detector"), "analysis.detector", errors);
    d.number("efficiency", a.detector.efficiency);
    d.number("dark_rate_per_ns", a.detector.dark_rate);
    d.number("jitter_sigma_ns", a.detector.jitter_sigma);
  }
  check(errors, a.hist_bin_ns > 0.0, "analysis.hist_bin_ns must be > 0");
  check(errors, a.hbt_bin_ns > 0.0, "analysis.hbt_bin_ns must be > 0");
  check(errors, a.max_tau_ns >= 0.0, "analysis.max_tau_ns must be >= 0 (0 selects the default)");
  check(errors, a.far.m_min >= 1 && a.far.m_max >= a.far.m_min, "analysis.far_m_min/far_m_max must satisfy 1 <= min <= max");
  check(errors, a.umi_delay_ns >= 0.0, "analysis.umi_delay_ns must be >= 0 (0 selects the bin spacing)");
  check(errors, a.phases.empty() || a.phases.size() >= 4, "analysis.phases_rad needs >= 4 phases");
  for (const auto& [w0, w1] : a.windows) {
    check(errors, w1 > w0, fmt::format("analysis.windows: [{}, {}) is empty", w0, w1));
  }
  check(errors, a.detector.efficiency >= 0.0 && a.detector.efficiency <= 1.0,
        "analysis.detector.efficiency must lie in [0, 1]");
  check(errors, a.detector.dark_rate >= 0.0, "analysis.detector.dark_rate_per_ns must be >= 0");
  check(errors, a.detector.jitter_sigma >= 0.0, "analysis.detector.jitter_sigma_ns must be >= 0");
}

void read_pumping(Section& top, SpinPumpingOptions& p, std::vector<std::string>& errors) {
  Section s(top.child("pumping"), "pumping", errors);
  s.number("omega_rad_per_ns", p.omega);
  s.number("duration_ns", p.duration);
  s.boolean("oscillatory", p.oscillatory);
  s.number("fit_start_ns", p.fit_start);
  check(errors, p.omega >= 0.0, "pumping.omega_rad_per_ns must be >= 0");
  check(errors, p.duration > 0.0, "pumping.duration_ns must be > 0");
}

void absorb(std::vector<std::string>& errors, const std::string& prefix, const ValidationError& e) {
  if (const auto* report = dynamic_cast<const ValidationReport*>(&e)) {
    for (const auto& m : report->errors()) errors.push_back(prefix + m);
  } else {
    errors.push_back(prefix + e.what());
  }
}

}  // namespace

ResolvedConfig validate_config(const nlohmann::json& doc) {
  std::vector<std::string> errors;
  ResolvedConfig cfg;
  ExperimentSpec& spec = cfg.spec;
  {
    Section top(&doc, "", errors);
    std::string scheme = "weak";
    top.text("scheme", scheme);
    if (scheme == "weak") cfg.scheme = Scheme::Weak;
    else if (scheme == "deterministic") cfg.scheme = Scheme::Deterministic;
    else errors.push_back(fmt::format("scheme must be \"weak\" or \"deterministic\" (got \"{}\")", scheme));

    read_params(top, spec.params, errors);
    read_target(top, spec.target, errors);
    read_compile(top, spec.compile, errors);
    read_simulation(top, spec.sim, errors);
    read_analysis(top, spec.analysis, errors);
    read_pumping(top, spec.pumping, errors);
    top.integer("n_traj", spec.n_traj);
    check(errors, spec.n_traj >= 1, "n_traj must be >= 1");
    if (const json* seq = top.child("sequence")) {
      try {
        spec.sequence = sequence_from_json(seq->dump());
      } catch (const ValidationError& e) {
        absorb(errors, "sequence: ", e);
      }
    }
  }
  try {
    spec.params.validate();
  } catch (const ValidationError& e) {
    absorb(errors, "params.", e);
  }
  if (errors.empty()) {
    try {
      const PulseSequence seq = wstate_sequence(spec, cfg.scheme);
      cfg.bins = seq.pulses.size();
      check(errors, cfg.bins >= 1, "the sequence has no pulses");
    } catch (const ValidationError& e) {
      absorb(errors, "compile: ", e);
    }
  }
  if (!errors.empty()) throw ValidationReport(std::move(errors));
  return cfg;
}

nlohmann::ordered_json resolved_to_json(const ResolvedConfig& cfg) {
  const ExperimentSpec& s = cfg.spec;
  ojson j;
  j["scheme"] = cfg.scheme == Scheme::Weak ? "weak" : "deterministic";
  j["params"] = {{"gamma_enh", s.params.gamma_enh},
                 {"gamma_diag", s.params.gamma_diag},
                 {"gamma_deph", s.params.gamma_deph},
                 {"sigma_quasistatic", s.params.sigma_quasistatic},
                 {"gamma_sf", s.params.gamma_sf},
                 {"delta_drive", s.params.delta_drive},
                 {"delta_h", s.params.delta_h},
                 {"dephasing", s.params.dephasing == DephasingMode::Markov ? "markov" : "quasistatic"}};
  j["target"] = {{"bins", s.target.bins}, {"total", s.target.total}, {"probs", s.target.resolved_probs(cfg.scheme)},
                 {"phases", s.target.resolved_phases(s.target.resolved_probs(cfg.scheme).size())}};
  j["compile"] = {{"bin_spacing_ns", s.compile.bin_spacing},
                  {"pulse_duration_ns", s.compile.pulse_duration},
                  {"first_pulse_ns", s.compile.first_pulse},
                  {"rep_period_ns", s.compile.rep_period},
                  {"shape", s.compile.shape == PulseShape::Square ? "square" : "gaussian"}};
  if (s.sequence) j["sequence"] = ojson::parse(sequence_to_json(*s.sequence));
  j["n_traj"] = s.n_traj;
  j["simulation"] = {{"delta_pulses", s.sim.delta_pulses},
                     {"dt_ns", s.sim.dt},
                     {"traj_dt_ns", s.sim.traj_dt},
                     {"n_reps", s.sim.n_reps},
                     {"reset_p_rand", s.sim.reset_p_rand},
                     {"reset_emission_prob", s.sim.reset_emission_prob},
                     {"g1_stride", s.sim.g1_stride}};
  ojson windows = ojson::array();
  for (const auto& [a, b] : s.analysis.windows) windows.push_back({a, b});
  j["analysis"] = {{"hist_bin_ns", s.analysis.hist_bin_ns},
                   {"hbt_bin_ns", s.analysis.hbt_bin_ns},
                   {"max_tau_ns", s.analysis.max_tau_ns},
                   {"far_m_min", s.analysis.far.m_min},
                   {"far_m_max", s.analysis.far.m_max},
                   {"windows", windows},
                   {"phases_rad", s.analysis.phases},
                   {"umi_delay_ns", s.analysis.umi_delay_ns},
                   {"detector",
                    {{"efficiency", s.analysis.detector.efficiency},
                     {"dark_rate_per_ns", s.analysis.detector.dark_rate},
                     {"jitter_sigma_ns", s.analysis.detector.jitter_sigma}}}};
  j["pumping"] = {{"omega_rad_per_ns", s.pumping.omega},
                  {"duration_ns", s.pumping.duration},
                  {"oscillatory", s.pumping.oscillatory},
                  {"fit_start_ns", s.pumping.fit_start}};
  return j;
}

}  // namespace qdw::cli
