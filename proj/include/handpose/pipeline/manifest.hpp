#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace handpose {

std::string sha256_hex(std::string_view bytes);
/// Content hash in the form git uses for blobs: SHA-1 over "blob <size>\0"
/// followed by the bytes.
std::string git_blob_hash(std::string_view bytes);
std::string read_file_bytes(const std::filesystem::path& path);

/// Run record written next to every CLI output: the command plus named
/// hashes and values, as a JSON object with sorted keys.
struct Manifest {
  std::string command;
  std::map<std::string, std::string> entries;

  void add_config(const std::string& canonical_config_text);
  void add_dataset(const std::filesystem::path& path);
  void add_checkpoint(const std::filesystem::path& path);
  void add_file(const std::string& key, const std::filesystem::path& path);

  std::string to_json() const;
  void save(const std::filesystem::path& path) const;
};

/// `<output>.manifest.json`.
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

}  // namespace handpose
