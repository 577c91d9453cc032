#include "qdw/sequence_io.hpp"

#include <json.hpp>

#include <fmt/format.h>

#include "qdw/errors.hpp"

namespace qdw {

using nlohmann::json;

std::string sequence_to_json(const PulseSequence& seq, int indent) {
  json doc;
  doc["rep_period_ns"] = seq.rep_period;
  doc["bin_spacing_ns"] = seq.bin_spacing;
  doc["pulses"] = json::array();
  for (const auto& p : seq.pulses) {
    doc["pulses"].push_back({{"t0", p.t0},
                             {"dur", p.duration},
                             {"area_rad", p.area},
                             {"phase_rad", p.phase},
                             {"shape", p.shape == PulseShape::Square ? "square" : "gaussian"}});
  }
  doc["resets"] = json::array();
  for (const auto& r : seq.resets) doc["resets"].push_back({{"t0", r.t0}, {"p_rand", r.p_rand}});
  if (seq.prepare_hbar) doc["prepare_hbar"] = true;
  return doc.dump(indent);
}

PulseSequence sequence_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("sequence document is not valid JSON: {}", e.what()));
  }
  PulseSequence seq;
  try {
    seq.rep_period = doc.value("rep_period_ns", kDefaultRepPeriod);
    seq.bin_spacing = doc.value("bin_spacing_ns", kDefaultBinSpacing);
    seq.prepare_hbar = doc.value("prepare_hbar", false);
    for (const auto& jp : doc.at("pulses")) {
      Pulse p;
      p.t0 = jp.at("t0").get<double>();
      p.duration = jp.at("dur").get<double>();
      p.area = jp.at("area_rad").get<double>();
      p.phase = jp.value("phase_rad", 0.0);
      const std::string shape = jp.value("shape", std::string("square"));
      if (shape == "square") {
        p.shape = PulseShape::Square;
      } else if (shape == "gaussian") {
        p.shape = PulseShape::Gaussian;
      } else {
        throw ValidationError(fmt::format("unknown pulse shape '{}' (square|gaussian)", shape));
      }
      seq.pulses.push_back(p);
    }
    for (const auto& jr : doc.value("resets", json::array())) {
      seq.resets.push_back({jr.at("t0").get<double>(), jr.at("p_rand").get<double>()});
    }
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed sequence document: {}", e.what()));
  }
  seq.validate();
  return seq;
}

}  // namespace qdw
