#include "handpose/pipeline/manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace handpose {
namespace {

std::string digest_hex(const EVP_MD* md, std::string_view prefix, std::string_view bytes) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("hash: cannot allocate digest context");
  const bool ok = EVP_DigestInit_ex(ctx, md, nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, prefix.data(), prefix.size()) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 && EVP_DigestFinal_ex(ctx, out, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("hash: digest computation failed");
  static const char* kHex = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[out[i] >> 4];
    hex += kHex[out[i] & 0xf];
  }
  return hex;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) { return digest_hex(EVP_sha256(), {}, bytes); }

std::string git_blob_hash(std::string_view bytes) {
  std::string header = "blob " + std::to_string(bytes.size());
  header.push_back('\0');
  return digest_hex(EVP_sha1(), header, bytes);
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void Manifest::add_config(const std::string& canonical_config_text) {
  entries["config_sha256"] = sha256_hex(canonical_config_text);
}

void Manifest::add_dataset(const std::filesystem::path& path) {
  entries["dataset_sha256"] = sha256_hex(read_file_bytes(path));
}

void Manifest::add_checkpoint(const std::filesystem::path& path) {
  entries["checkpoint_git_hash"] = git_blob_hash(read_file_bytes(path));
}

void Manifest::add_file(const std::string& key, const std::filesystem::path& path) {
  entries[key] = sha256_hex(read_file_bytes(path));
}

std::string Manifest::to_json() const {
  nlohmann::json doc = nlohmann::json::object();
  doc["command"] = command;
  for (const auto& [k, v] : entries) doc[k] = v;
  return doc.dump(2) + "\n";
}

void Manifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << to_json();
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  return std::filesystem::path(output.string() + ".manifest.json");
}

}  // namespace handpose
