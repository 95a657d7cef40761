#include "toml_subset.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace patlas::cli {
namespace {

using json = nlohmann::ordered_json;

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  json run() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_ws_comments_newlines();
      if (eof()) break;
      if (peek() == '[') {
        table = &open_table(root);
      } else {
        parse_key_value(*table);
      }
      end_of_line();
    }
    return root;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::vector<std::string> defined_tables_;

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  [[noreturn]] void error(const std::string& msg) const { throw TomlError(line_, msg); }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }
  void skip_ws_comments_newlines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\r' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '\n') ++pos_;
      if (peek() == '\n') {
        ++pos_;
        ++line_;
      } else {
        break;
      }
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (eof()) return;
    if (peek() != '\n') error("unexpected text after value");
    ++pos_;
    ++line_;
  }

  static bool bare_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::string key_part() {
    skip_ws();
    if (peek() == '"') return basic_string();
    if (peek() == '\'') return literal_string();
    const std::size_t start = pos_;
    while (!eof() && bare_char(peek())) ++pos_;
    if (pos_ == start) error("expected a key");
    return s_.substr(start, pos_ - start);
  }

  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts{key_part()};
    skip_ws();
    while (peek() == '.') {
      ++pos_;
      parts.push_back(key_part());
      skip_ws();
    }
    return parts;
  }

  json& descend(json& from, const std::vector<std::string>& path, std::size_t count) {
    json* t = &from;
    for (std::size_t i = 0; i < count; ++i) {
      auto& next = (*t)[path[i]];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) error("key '" + path[i] + "' is already a value, not a table");
      t = &next;
    }
    return *t;
  }

  json& open_table(json& root) {
    ++pos_;
    if (peek() == '[') error("arrays of tables are not supported");
    const auto path = dotted_key();
    if (peek() != ']') error("expected ']' to close the table header");
    ++pos_;
    std::string joined;
    for (const auto& p : path) joined += (joined.empty() ? "" : ".") + p;
    for (const auto& d : defined_tables_)
      if (d == joined) error("table [" + joined + "] is defined twice");
    defined_tables_.push_back(joined);
    return descend(root, path, path.size());
  }

  void parse_key_value(json& table) {
    const auto path = dotted_key();
    if (peek() != '=') error("expected '=' after key");
    ++pos_;
    skip_ws();
    json& parent = descend(table, path, path.size() - 1);
    if (parent.contains(path.back())) error("duplicate key '" + path.back() + "'");
    parent[path.back()] = value();
  }

  json value() {
    const char c = peek();
    if (c == '"') {
      if (s_.compare(pos_, 3, "\"\"\"") == 0) error("multi-line strings are not supported");
      return basic_string();
    }
    if (c == '\'') {
      if (s_.compare(pos_, 3, "'''") == 0) error("multi-line strings are not supported");
      return literal_string();
    }
    if (c == '[') return array();
    if (c == '{') error("inline tables are not supported");
    if (s_.compare(pos_, 4, "true") == 0 && !bare_char(at(pos_ + 4))) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0 && !bare_char(at(pos_ + 5))) {
      pos_ += 5;
      return false;
    }
    return number();
  }

  char at(std::size_t i) const { return i < s_.size() ? s_[i] : '\0'; }

  json array() {
    ++pos_;
    json arr = json::array();
    while (true) {
      skip_ws_comments_newlines();
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      if (eof()) error("unterminated array");
      arr.push_back(value());
      skip_ws_comments_newlines();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        error("expected ',' or ']' in array");
      }
    }
  }

  json number() {
    const std::size_t start = pos_;
    while (!eof() && (bare_char(peek()) || peek() == '+' || peek() == '.')) ++pos_;
    std::string tok = s_.substr(start, pos_ - start);
    if (tok.empty()) error("expected a value");
    if (tok.find(':') != std::string::npos || (tok.size() >= 10 && tok[4] == '-' && tok[7] == '-'))
      error("date-time values are not supported");
    std::string clean;
    for (std::size_t i = 0; i < tok.size(); ++i) {
      if (tok[i] == '_') {
        if (i == 0 || i + 1 == tok.size() || !std::isalnum(static_cast<unsigned char>(tok[i - 1])) ||
            !std::isalnum(static_cast<unsigned char>(tok[i + 1])))
          error("misplaced underscore in number '" + tok + "'");
        continue;
      }
      clean += tok[i];
    }
    std::string body = clean;
    bool negative = false;
    if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
      negative = body[0] == '-';
      body.erase(0, 1);
    }
    if (body == "inf") return negative ? -std::numeric_limits<double>::infinity()
                                       : std::numeric_limits<double>::infinity();
    if (body == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'o' || body[1] == 'b')) {
      if (clean[0] == '+' || clean[0] == '-') error("sign not allowed on prefixed integer");
      const int base = body[1] == 'x' ? 16 : body[1] == 'o' ? 8 : 2;
      std::int64_t v = 0;
      const auto r = std::from_chars(body.data() + 2, body.data() + body.size(), v, base);
      if (r.ec != std::errc() || r.ptr != body.data() + body.size())
        error("invalid integer '" + tok + "'");
      return v;
    }
    const bool is_float = body.find_first_of(".eE") != std::string::npos;
    if (body.size() > 1 && body[0] == '0' && std::isdigit(static_cast<unsigned char>(body[1])))
      error("leading zeros are not allowed in '" + tok + "'");
    if (is_float) {
      const auto dot = body.find('.');
      if (dot != std::string::npos &&
          (dot == 0 || dot + 1 >= body.size() ||
           !std::isdigit(static_cast<unsigned char>(body[dot + 1]))))
        error("invalid float '" + tok + "'");
      double v = 0.0;
      const auto r = std::from_chars(clean.data() + (clean[0] == '+'), clean.data() + clean.size(), v);
      if (r.ec != std::errc() || r.ptr != clean.data() + clean.size())
        error("invalid float '" + tok + "'");
      return v;
    }
    std::int64_t v = 0;
    const auto r = std::from_chars(clean.data() + (clean[0] == '+'), clean.data() + clean.size(), v);
    if (r.ec == std::errc::result_out_of_range) error("integer out of range '" + tok + "'");
    if (r.ec != std::errc() || r.ptr != clean.data() + clean.size())
      error("invalid value '" + tok + "'");
    return v;
  }

  std::string literal_string() {
    ++pos_;
    std::string out;
    while (!eof() && peek() != '\'') {
      if (peek() == '\n') error("unterminated string");
      out += s_[pos_++];
    }
    if (eof()) error("unterminated string");
    ++pos_;
    return out;
  }

  void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) error("invalid unicode escape");
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  std::string basic_string() {
    ++pos_;
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') error("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (eof()) error("unterminated string");
      const char e = s_[pos_++];
      switch (e) {
        case 'b': out += '\b'; break;
        case 't': out += '\t'; break;
        case 'n': out += '\n'; break;
        case 'f': out += '\f'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'u':
        case 'U': {
          const std::size_t len = e == 'u' ? 4 : 8;
          if (pos_ + len > s_.size()) error("truncated unicode escape");
          std::uint32_t cp = 0;
          const auto r = std::from_chars(s_.data() + pos_, s_.data() + pos_ + len, cp, 16);
          if (r.ec != std::errc() || r.ptr != s_.data() + pos_ + len)
            error("invalid unicode escape");
          pos_ += len;
          append_utf8(out, cp);
          break;
        }
        default: error(std::string("invalid escape '\\") + e + "'");
      }
    }
  }
};

}  // namespace

nlohmann::ordered_json parse_toml(const std::string& text) { return Parser(text).run(); }

nlohmann::ordered_json parse_toml_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_toml(ss.str());
}

}  // namespace patlas::cli
