#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "qdw/experiments.hpp"

namespace qdw::cli {

/// Experiment document after defaults are filled in and every field is checked.
struct ResolvedConfig {
  ExperimentSpec spec;
  Scheme scheme = Scheme::Weak;
  std::size_t bins = 3;
};

/// Reads an experiment document. Unknown keys, wrong types and physical-range or cross-field
/// violations are collected and thrown together as a ValidationReport.
ResolvedConfig validate_config(const nlohmann::json& doc);

/// The resolved document with every default written out (the inputs.json payload).
nlohmann::ordered_json resolved_to_json(const ResolvedConfig& cfg);

}  // namespace qdw::cli
