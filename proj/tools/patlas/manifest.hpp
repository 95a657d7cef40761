#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace patlas::cli {

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

/// Records what a command wrote so any artifact can be traced to the
/// configuration that produced it. No timestamps or host details, so two
/// runs of one config produce the same bytes.
class RunManifest {
 public:
  RunManifest(std::filesystem::path out_dir, std::string command, nlohmann::ordered_json config);

  /// Registers a written file (absolute or relative to out_dir).
  void add(const std::filesystem::path& artifact);

  /// Writes <out_dir>/run-manifest.json. Entries from an earlier manifest
  /// with the same config hash are kept (stages run one at a time share one
  /// manifest); a different hash starts over. `error` marks a failed run.
  void write(const std::string& error = {}) const;

 private:
  std::filesystem::path out_dir_;
  std::string command_;
  nlohmann::ordered_json config_;
  std::vector<std::filesystem::path> artifacts_;
};

}  // namespace patlas::cli
