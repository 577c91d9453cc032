#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cli.hpp"
#include "config.hpp"
#include "manifest.hpp"
#include "qdw/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("qdw_cli_" + std::to_string(std::hash<std::string>{}(
                                                        doctest::getContextOptions()->currentTest->m_name)));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }

  std::string write(const std::string& name, const json& doc) const {
    std::ofstream(dir / name) << doc.dump();
    return (dir / name).string();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = qdw::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const json kIdeal = {{"scheme", "deterministic"},
                     {"params", {{"gamma_enh", 25.0}, {"gamma_diag", 0.0}, {"gamma_deph", 0.0}}},
                     {"target", {{"bins", 3}}},
                     {"n_traj", 300},
                     {"simulation", {{"delta_pulses", true}, {"n_reps", 6}}},
                     {"analysis", {{"far_m_min", 2}, {"far_m_max", 4}}}};

}  // namespace

TEST_CASE("compile-pulses writes the W3 areas") {
  Scratch s;
  const auto cfg = s.write("w3.json", {{"scheme", "deterministic"}, {"target", {{"bins", 3}}}});
  const Result r = run({"compile-pulses", "--config", cfg, "--out", s.path("r")});
  REQUIRE(r.code == 0);
  const json seq = json::parse(slurp(s.path("r/sequence.json")));
  const double expected[] = {1.230959, 1.570796, 3.141593};
  for (int k = 0; k < 3; ++k) CHECK(std::abs(seq["pulses"][k]["area_rad"].get<double>() - expected[k]) < 5e-7);
  CHECK(fs::exists(s.path("r/amplitudes.json")));
  CHECK(fs::exists(s.path("r/inputs.json")));
}

TEST_CASE("stochastic runs are reproducible and need a seed") {
  Scratch s;
  const auto cfg = s.write("ideal.json", kIdeal);
  const Result missing = run({"wstate", "--config", cfg, "--out", s.path("x")});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("--seed") != std::string::npos);

  REQUIRE(run({"wstate", "--config", cfg, "--seed", "7", "--out", s.path("a")}).code == 0);
  REQUIRE(run({"wstate", "--config", cfg, "--seed", "7", "--out", s.path("b"), "--threads", "3"}).code == 0);
  for (const char* f : {"histogram.csv", "clicks.csv", "wstate.json"}) {
    CHECK(slurp(s.path(std::string("a/") + f)) == slurp(s.path(std::string("b/") + f)));
  }
  CHECK(slurp(s.path("a/histogram.csv")).rfind("bin_start_ns,bin_end_ns,value\n", 0) == 0);
  CHECK(slurp(s.path("a/clicks.csv")).rfind("traj,time_ns,channel\n", 0) == 0);

  REQUIRE(run({"hbt", "--config", cfg, "--seed", "7", "--out", s.path("h")}).code == 0);
  const json g2 = json::parse(slurp(s.path("h/g2.json")));
  CHECK(g2["g2_zero"].get<double>() == 0.0);
}

TEST_CASE("manifest lists every file with its hash") {
  Scratch s;
  const auto cfg = s.write("ideal.json", kIdeal);
  REQUIRE(run({"wstate", "--config", cfg, "--seed", "1", "--out", s.path("m")}).code == 0);
  const json man = json::parse(slurp(s.path("m/manifest.json")));
  CHECK(man["experiment"] == "wstate");
  std::size_t listed = 0;
  for (const auto& f : man["files"]) {
    const std::string bytes = slurp(s.path("m/" + f["path"].get<std::string>()));
    CHECK(f["bytes"].get<std::size_t>() == bytes.size());
    CHECK(f["sha256"].get<std::string>() == qdw::cli::sha256_hex(bytes));
    ++listed;
  }
  std::size_t on_disk = 0;
  for (const auto& e : fs::directory_iterator(s.path("m"))) on_disk += e.path().filename() != "manifest.json";
  CHECK(listed == on_disk);
  REQUIRE(run({"wstate", "--config", cfg, "--seed", "1", "--out", s.path("m2")}).code == 0);
  CHECK(slurp(s.path("m/manifest.json")) == slurp(s.path("m2/manifest.json")));
  CHECK(qdw::cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("inputs.json echoes resolved defaults") {
  Scratch s;
  const auto cfg = s.write("min.json", json::object());
  REQUIRE(run({"compile-pulses", "--config", cfg, "--out", s.path("r")}).code == 0);
  const json in = json::parse(slurp(s.path("r/inputs.json")));
  CHECK(in["experiment"] == "compile-pulses");
  CHECK(in["run"]["seed"].is_null());
  const json& c = in["config"];
  CHECK(c["scheme"] == "weak");
  CHECK(c["params"]["gamma_enh"] == 5.0);
  CHECK(c["params"]["dephasing"] == "markov");
  CHECK(c["target"]["probs"].size() == 3);
  CHECK(c["compile"]["bin_spacing_ns"] == 2.0);
  CHECK(c["simulation"]["g1_stride"] == 5);
  CHECK(c["analysis"]["far_m_min"] == 5);
}

TEST_CASE("validate_config reports every problem") {
  using qdw::ValidationReport;
  auto errors_of = [](const json& doc) -> std::vector<std::string> {
    try {
      qdw::cli::validate_config(doc);
    } catch (const ValidationReport& r) {
      return r.errors();
    }
    return {};
  };
  auto mentions = [](const std::vector<std::string>& errs, const std::string& needle) {
    for (const auto& e : errs) {
      if (e.find(needle) != std::string::npos) return true;
    }
    return false;
  };

  const auto neg = errors_of({{"params", {{"gamma_enh", -1.0}}}});
  REQUIRE(!neg.empty());
  CHECK(mentions(neg, "gamma_enh"));
  CHECK(mentions(neg, ">= 0"));

  const auto sum = errors_of({{"target", {{"probs", {0.6, 0.6}}}}});
  CHECK(mentions(sum, "<= 1"));

  const auto several = errors_of({{"params", {{"gamma_enh", -1.0}, {"gamma_sf", "fast"}}},
                                  {"n_traj", 0},
                                  {"bogus", 1},
                                  {"simulation", {{"g1_stride", 4}}}});
  CHECK(several.size() >= 5);
  CHECK(mentions(several, "bogus"));
  CHECK(mentions(several, "gamma_sf"));
  CHECK(mentions(several, "n_traj"));
  CHECK(mentions(several, "g1_stride"));

  CHECK(errors_of(json::object()).empty());
}

TEST_CASE("exit codes, help and version") {
  Scratch s;
  const Result top = run({"--help"});
  CHECK(top.code == 0);
  CHECK(top.out.find("compile-pulses") != std::string::npos);
  CHECK(run({"--version"}).code == 0);
  for (const char* sub : {"spin-pumping", "wstate", "hbt", "interference", "compile-pulses"}) {
    const Result h = run({sub, "--help"});
    CHECK(h.code == 0);
    CHECK(h.out.find("--config") != std::string::npos);
    const Result v = run({sub, "--version"});
    CHECK(v.code == 0);
    CHECK(v.out.find(qdw::cli::kVersion) != std::string::npos);
  }
  CHECK(run({"teleport"}).code == 1);
  CHECK(run({}).code == 1);
  const auto cfg = s.write("ok.json", json::object());
  CHECK(run({"compile-pulses", "--config", cfg, "--out", s.path("r"), "--frobnicate"}).code == 1);

  const auto bad = s.write("bad.json", {{"params", {{"gamma_enh", -3.0}}}});
  const Result invalid = run({"compile-pulses", "--config", bad, "--out", s.path("r")});
  CHECK(invalid.code == 1);
  CHECK(invalid.err.find("gamma_enh") != std::string::npos);

  // A drive-free pumping run has nothing to fit: numerical failure.
  const auto dark = s.write("dark.json", {{"pumping", {{"omega_rad_per_ns", 0.0}}}});
  CHECK(run({"spin-pumping", "--config", dark, "--out", s.path("p")}).code == 2);
}
