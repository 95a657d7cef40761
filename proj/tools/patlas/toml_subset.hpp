#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace patlas::cli {

/// Parse failure carrying the 1-based line it happened on.
class TomlError : public std::runtime_error {
 public:
  TomlError(std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Reads the TOML subset used by run configs into a JSON object.
///
/// Supported: comments, bare/quoted keys, dotted keys, [table] and
/// [dotted.table] headers, basic and literal strings, integers (with
/// underscores, hex/oct/bin), floats (incl. inf/nan), booleans and arrays
/// of those, which may span lines. Not supported: arrays of tables,
/// inline tables, multi-line strings and date-times; they are rejected
/// with a line-numbered error rather than misread.
nlohmann::ordered_json parse_toml(const std::string& text);
nlohmann::ordered_json parse_toml_file(const std::filesystem::path& path);

}  // namespace patlas::cli
