#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace qdw::cli {

std::string sha256_hex(const std::string& bytes);

/// Writes `files` (relative to dir) with their sizes and SHA-256 digests to dir/manifest.json.
void write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& files,
                    const std::string& experiment);

}  // namespace qdw::cli
