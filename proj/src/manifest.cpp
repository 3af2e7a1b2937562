#include "cgem/manifest.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace cgem {

using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("EVP context allocation failed");
  bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
            EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
            EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

void ExperimentManifest::add_output(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("manifest output missing: " + path);
  Output o;
  o.path = path;
  o.bytes = static_cast<uint64_t>(in.tellg());
  o.sha256 = sha256_file(path);
  outputs.push_back(std::move(o));
}

json ExperimentManifest::to_json() const {
  json outs = json::array();
  for (const auto& o : outputs)
    outs.push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  return {{"format_version", 1},
          {"kind", "manifest"},
          {"command", command},
          {"argv", argv},
          {"config", config},
          {"seed", seed},
          {"version", version},
          {"wall_clock_sec", wall_clock_sec},
          {"env_steps", env_steps},
          {"outputs", outs}};
}

void ExperimentManifest::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << to_json().dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace cgem
