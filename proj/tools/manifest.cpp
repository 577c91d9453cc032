#include "manifest.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

namespace qdw::cli {

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

void write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& files,
                    const std::string& experiment) {
  nlohmann::ordered_json doc;
  doc["experiment"] = experiment;
  doc["files"] = nlohmann::ordered_json::array();
  for (const auto& name : files) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot read {}", (dir / name).string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    doc["files"].push_back({{"path", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
  }
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << doc.dump(2) << '\n';
}

}  // namespace qdw::cli
