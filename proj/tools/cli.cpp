#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "config.hpp"
#include "manifest.hpp"
#include "qdw/compiler.hpp"
#include "qdw/errors.hpp"
#include "qdw/sequence_io.hpp"

namespace qdw::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct RunOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

// Collects the files of one run so the manifest lists them in write order.
class OutputDir {
public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& bytes) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", (dir_ / name).string()));
    out << bytes;
    files_.push_back(name);
  }

  template <class Fn>
  void write_with(const std::string& name, Fn&& fn) {
    std::ostringstream buf;
    fn(buf);
    write(name, buf.str());
  }

  void write_json(const std::string& name, const ojson& j) { write(name, j.dump(2) + "\n"); }

  void finish(const std::string& experiment) { write_manifest(dir_, files_, experiment); }

private:
  fs::path dir_;
  std::vector<std::string> files_;
};

ojson health_json(const HealthLog& h) {
  return {{"max_trace_error", h.max_trace_error},
          {"max_hermiticity_error", h.max_hermiticity_error},
          {"min_eigenvalue", h.min_eigenvalue}};
}

ojson fit_json(const FitResult& fit) {
  ojson params = ojson::object();
  for (std::size_t k = 0; k < fit.names.size(); ++k) {
    params[fit.names[k]] = {{"value", fit.values[k]}, {"stderr", fit.stderrs[k]}};
  }
  return {{"parameters", params}, {"residual_norm", fit.residual_norm}, {"iterations", fit.iterations}};
}

ojson complex_json(std::complex<double> z) { return ojson::array({z.real(), z.imag()}); }

ojson state_json(const TimeBinState& s) {
  ojson amps = ojson::array();
  for (const auto& a : s.amps()) amps.push_back(complex_json(a));
  return {{"amps", amps}, {"vac", complex_json(s.vac())}};
}

void write_series_csv(std::ostream& out, const SampledSeries& s) {
  Histogram h;
  h.edges.resize(s.values.size() + 1);
  for (std::size_t k = 0; k <= s.values.size(); ++k) h.edges[k] = s.t_start + (static_cast<double>(k) - 0.5) * s.dt;
  h.values = s.values;
  write_histogram_csv(out, h);
}

void run_spin_pumping_cmd(const ResolvedConfig& cfg, OutputDir& dir) {
  const SpinPumpingResult r = run_spin_pumping(cfg.spec);
  dir.write_with("flux.csv", [&](std::ostream& o) { write_series_csv(o, r.flux); });
  ojson j = fit_json(r.fit);
  j["model"] = cfg.spec.pumping.oscillatory ? "damped_oscillation" : "exponential";
  j["tau_p_ns"] = r.tau_p;
  if (cfg.spec.pumping.oscillatory) j["rabi_frequency_rad_per_ns"] = r.rabi_frequency;
  j["health"] = health_json(r.health);
  dir.write_json("fit.json", j);
}

void run_compile_cmd(const ResolvedConfig& cfg, OutputDir& dir) {
  PulseSequence seq;
  if (cfg.spec.sequence) {
    seq = *cfg.spec.sequence;
  } else {
    const auto probs = cfg.spec.target.resolved_probs(cfg.scheme);
    seq = compile_sequence(probs, cfg.spec.target.resolved_phases(probs.size()), cfg.spec.compile);
  }
  dir.write("sequence.json", sequence_to_json(seq) + "\n");
  dir.write_json("amplitudes.json", state_json(sequence_amplitudes(seq)));
}

void run_wstate_cmd(const ResolvedConfig& cfg, OutputDir& dir) {
  const WStateResult r = run_wstate(cfg.spec, cfg.scheme, cfg.bins);
  dir.write("sequence.json", sequence_to_json(r.sequence) + "\n");
  dir.write_with("clicks.csv", [&](std::ostream& o) { write_clicks_csv(o, r.records); });
  dir.write_with("histogram.csv", [&](std::ostream& o) { write_histogram_csv(o, r.histogram); });
  ojson j;
  j["bin_probs"] = r.bin_probs;
  j["bin_prob_stderr"] = r.bin_prob_stderr;
  j["fidelity"] = r.fidelity;
  j["heralded_fidelity"] = r.heralded_fidelity;
  j["estimate"] = state_json(r.estimate);
  j["health"] = health_json(r.health);
  dir.write_json("wstate.json", j);
}

void run_hbt_cmd(const ResolvedConfig& cfg, OutputDir& dir) {
  const HbtResult r = run_hbt(cfg.spec, cfg.scheme);
  dir.write("sequence.json", sequence_to_json(r.sequence) + "\n");
  dir.write_with("clicks.csv", [&](std::ostream& o) { write_clicks_csv(o, r.records); });
  dir.write_with("correlation.csv", [&](std::ostream& o) { write_correlation_csv(o, r.correlation); });
  ojson peaks = ojson::array();
  for (const auto& p : r.side_peaks) peaks.push_back({{"m", p.m}, {"area", p.area}, {"counts", p.counts}});
  ojson j;
  j["g2_zero"] = r.g2.value;
  j["g2_zero_stderr"] = r.g2.stderr_value;
  j["far_peaks"] = {cfg.spec.analysis.far.m_min, cfg.spec.analysis.far.m_max};
  j["side_peaks"] = peaks;
  if (r.g2_filtered) j["g2_zero_filtered"] = {{"value", r.g2_filtered->value}, {"stderr", r.g2_filtered->stderr_value}};
  dir.write_json("g2.json", j);
}

void run_interference_cmd(const ResolvedConfig& cfg, OutputDir& dir) {
  const InterferenceResult r = run_interference(cfg.spec, cfg.scheme, cfg.bins, cfg.spec.analysis.phases);
  dir.write("sequence.json", sequence_to_json(r.sequence) + "\n");
  const double delay = cfg.spec.analysis.umi_delay_ns > 0.0 ? cfg.spec.analysis.umi_delay_ns : r.sequence.bin_spacing;
  ojson summary = ojson::array();
  for (const auto& p : r.pairs) {
    dir.write(fmt::format("visibility_pair{}.json", p.first_bin), visibility_json(p.fit) + "\n");
    ojson entry = {{"pair", {p.first_bin, p.first_bin + 1}}, {"V", p.fit.V}, {"stderr_V", p.fit.stderr_V}};
    if (p.fit.V > 0.0 && p.fit.V < 1.0) {
      entry["t2star_markov_ns"] = estimate_t2star(p.fit.V, delay, CoherenceModel::Markov);
      entry["t2star_gauss_ns"] = estimate_t2star(p.fit.V, delay, CoherenceModel::Gauss);
    }
    ojson scan = ojson::array();
    for (const auto& [phi, v] : p.scan) scan.push_back({phi, v});
    entry["scan"] = scan;
    summary.push_back(entry);
  }
  for (std::size_t k = 0; k < r.outputs.size(); ++k) {
    dir.write_with(fmt::format("umi_phase{}.csv", k), [&](std::ostream& o) { write_histogram_csv(o, r.outputs[k].second); });
  }
  dir.write_json("interference.json", {{"delay_ns", delay}, {"pairs", summary}, {"health", health_json(r.health)}});
}

struct Command {
  const char* name;
  const char* help;
  bool stochastic;
  void (*run)(const ResolvedConfig&, OutputDir&);
};

constexpr Command kCommands[] = {
    {"spin-pumping", "CW optical pumping of the hole spin with a decay-time fit", false, run_spin_pumping_cmd},
    {"wstate", "Time-bin W-state generation: click records, histogram, fidelity", true, run_wstate_cmd},
    {"hbt", "Hanbury Brown-Twiss correlation and peak-area g2(0)", true, run_hbt_cmd},
    {"interference", "Unbalanced Michelson phase scan and visibilities", false, run_interference_cmd},
    {"compile-pulses", "Pulse areas and phases for target bin amplitudes", false, run_compile_cmd},
};

int execute(const Command& cmd, const RunOptions& opt, std::ostream& out, std::ostream& err) {
  if (cmd.stochastic && !opt.seed) {
    err << fmt::format("error: --seed is required for the stochastic '{}' run\n", cmd.name);
    return 1;
  }
  if (opt.threads == 0) {
    err << "error: --threads must be >= 1\n";
    return 1;
  }
  std::ifstream in(opt.config);
  if (!in) {
    err << fmt::format("error: cannot open config '{}'\n", opt.config);
    return 1;
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    err << fmt::format("error: {} is not valid JSON: {}\n", opt.config, e.what());
    return 1;
  }
  ResolvedConfig cfg = validate_config(doc);
  cfg.spec.seed = opt.seed.value_or(0);
  cfg.spec.sim.threads = opt.threads;

  OutputDir dir(opt.out);
  ojson inputs;
  inputs["experiment"] = cmd.name;
  inputs["run"] = {{"seed", opt.seed ? ojson(*opt.seed) : ojson(nullptr)}, {"threads", opt.threads}};
  inputs["config"] = resolved_to_json(cfg);
  dir.write_json("inputs.json", inputs);
  cmd.run(cfg, dir);
  dir.finish(cmd.name);
  out << fmt::format("{}: results written to {}\n", cmd.name, opt.out);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-bin W-state source simulator"};
  app.name("qdw");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunOptions opt;
  std::uint64_t seed = 0;
  const Command* chosen = nullptr;
  for (const auto& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->set_version_flag("--version", kVersion);
    sub->add_option("--config", opt.config, "Experiment JSON document")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory")->required();
    sub->add_option("--seed", seed, "Master seed (u64), required for stochastic runs");
    sub->add_option("--threads", opt.threads, "Worker threads for trajectory sampling")->capture_default_str();
    sub->callback([&opt, &seed, &chosen, &cmd, sub] {
      chosen = &cmd;
      if (sub->count("--seed") > 0) opt.seed = seed;
    });
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    return execute(*chosen, opt, out, err);
  } catch (const ValidationReport& e) {
    err << "validation failed:\n";
    for (const auto& m : e.errors()) err << "  - " << m << '\n';
    return 1;
  } catch (const ValidationError& e) {
    err << "validation failed: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace qdw::cli
