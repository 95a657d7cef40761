#include "manifest.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

#include "patlas/patlas.h"

namespace patlas::cli {
namespace {

using json = nlohmann::ordered_json;

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("SHA-256 initialisation failed");
  }
  void update(const char* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 0xF];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string() + " for checksum");
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string sha256_text(const std::string& text) {
  Sha256 h;
  h.update(text.data(), text.size());
  return h.hex();
}

RunManifest::RunManifest(std::filesystem::path out_dir, std::string command, json config)
    : out_dir_(std::move(out_dir)), command_(std::move(command)), config_(std::move(config)) {}

void RunManifest::add(const std::filesystem::path& artifact) { artifacts_.push_back(artifact); }

void RunManifest::write(const std::string& error) const {
  namespace fs = std::filesystem;
  const std::string config_hash = sha256_text(config_.dump());
  const fs::path path = out_dir_ / "run-manifest.json";

  std::map<std::string, std::string> files;
  std::set<std::string> commands{command_};
  json failures = json::object();
  if (fs::exists(path)) {
    try {
      std::ifstream in(path);
      const auto old = json::parse(in);
      if (old.at("config_sha256") == config_hash) {
        for (const auto& a : old.at("artifacts"))
          if (fs::exists(out_dir_ / a.at("path").get<std::string>()))
            files[a.at("path").get<std::string>()] = a.at("sha256").get<std::string>();
        for (const auto& c : old.at("commands")) commands.insert(c.get<std::string>());
        if (old.contains("errors"))
          for (const auto& [c, msg] : old["errors"].items())
            if (c != command_) failures[c] = msg;
      }
    } catch (const std::exception&) {
      // An unreadable earlier manifest is simply replaced.
    }
  }
  for (const auto& a : artifacts_) {
    const fs::path abs = a.is_absolute() ? a : out_dir_ / a;
    if (!fs::exists(abs)) continue;
    const auto rel = fs::relative(abs, out_dir_).generic_string();
    files[rel] = sha256_file(abs);
  }
  if (!error.empty()) failures[command_] = error;

  json j;
  j["tool"] = "patlas";
  j["library_version"] = patlas_version();
  j["commands"] = std::vector<std::string>(commands.begin(), commands.end());
  j["status"] = failures.empty() ? "ok" : "failed";
  if (!failures.empty()) j["errors"] = failures;
  j["config_sha256"] = config_hash;
  j["config"] = config_;
  auto arts = json::array();
  for (const auto& [p, h] : files) arts.push_back(json{{"path", p}, {"sha256", h}});
  j["artifacts"] = std::move(arts);

  fs::create_directories(out_dir_);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace patlas::cli
