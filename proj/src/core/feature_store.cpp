#include "feature_store.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "error.hpp"
#include "text_util.hpp"

namespace patlas {
namespace {

constexpr std::string_view kMagic = "#featureset v1";

double norm_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool valid_label(std::string_view s) {
  return !s.empty() && s.find_first_of(",| \t\r\n") == std::string_view::npos;
}

bool valid_id(std::string_view s) {
  return !s.empty() && s.find_first_of(",\r\n") == std::string_view::npos;
}

}  // namespace

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

FeatureSet::FeatureSet(std::size_t dim, std::vector<std::string> labels,
                       std::vector<TileRecord> records, bool normalized)
    : dim_(dim),
      labels_(std::move(labels)),
      records_(std::move(records)),
      normalized_(normalized) {
  if (dim_ == 0) fail(ErrorCode::kFormat, "feature dimension must be positive");
  if (labels_.empty()) fail(ErrorCode::kFormat, "label set is empty");
  std::unordered_set<std::string> seen_labels;
  for (const auto& l : labels_) {
    if (!valid_label(l)) fail(ErrorCode::kFormat, "invalid label '" + l + "'");
    if (!seen_labels.insert(l).second)
      fail(ErrorCode::kFormat, "duplicate label '" + l + "'");
  }
  std::unordered_set<std::string> seen_ids;
  const double tol = normalized_ ? kStoredUnitNormTolerance : 0.0;
  for (const auto& r : records_) {
    if (!valid_id(r.tile_id) || !valid_id(r.image_id))
      fail(ErrorCode::kFormat, "record has an empty or invalid id");
    if (!seen_labels.count(r.diagnosis))
      fail(ErrorCode::kFormat, "tile '" + r.tile_id + "': unknown label '" +
                                   r.diagnosis + "'");
    if (r.features.size() != dim_)
      fail(ErrorCode::kFormat,
           "tile '" + r.tile_id + "': expected " + std::to_string(dim_) +
               " features, got " + std::to_string(r.features.size()));
    for (double v : r.features)
      if (!std::isfinite(v))
        fail(ErrorCode::kNumeric, "tile '" + r.tile_id + "': non-finite feature");
    if (!seen_ids.insert(r.tile_id).second)
      fail(ErrorCode::kFormat, "duplicate tile_id '" + r.tile_id + "'");
    if (normalized_ && std::abs(norm_of(r.features) - 1.0) > tol)
      fail(ErrorCode::kNumeric,
           "tile '" + r.tile_id + "': flagged normalized but norm is not 1");
  }
}

std::optional<std::size_t> FeatureSet::label_index(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  return std::nullopt;
}

FeatureSet FeatureSet::select_diagnosis(std::string_view label) const {
  if (!label_index(label))
    fail(ErrorCode::kInvalidArgument, "unknown label '" + std::string(label) + "'");
  std::vector<TileRecord> kept;
  for (const auto& r : records_)
    if (r.diagnosis == label) kept.push_back(r);
  return FeatureSet(dim_, labels_, std::move(kept), normalized_);
}

FeatureSet load_feature_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open feature file " + path.string());

  auto at_line = [&](std::size_t line, const std::string& msg) {
    return path.string() + ":" + std::to_string(line) + ": " + msg;
  };

  std::string line;
  if (!std::getline(in, line))
    fail(ErrorCode::kFormat, at_line(1, "missing header"));
  std::string_view header = text::trim(line);
  if (!text::starts_with(header, kMagic))
    fail(ErrorCode::kFormat, at_line(1, "header must start with '#featureset v1'"));

  std::optional<long long> dim;
  std::vector<std::string> labels;
  bool normalized = false;
  std::istringstream tokens{std::string(header.substr(kMagic.size()))};
  std::string tok;
  while (tokens >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::kFormat, at_line(1, "malformed header token '" + tok + "'"));
    const std::string key = tok.substr(0, eq);
    const std::string value = tok.substr(eq + 1);
    if (key == "dim") {
      dim = text::parse_int(value);
      if (!dim || *dim <= 0)
        fail(ErrorCode::kFormat, at_line(1, "dim must be a positive integer"));
    } else if (key == "labels") {
      for (auto l : text::split(value, '|')) labels.emplace_back(l);
    } else if (key == "normalized") {
      if (value != "0" && value != "1")
        fail(ErrorCode::kFormat, at_line(1, "normalized must be 0 or 1"));
      normalized = value == "1";
    } else {
      fail(ErrorCode::kFormat, at_line(1, "unknown header key '" + key + "'"));
    }
  }
  if (!dim) fail(ErrorCode::kFormat, at_line(1, "header lacks dim="));
  if (labels.empty()) fail(ErrorCode::kFormat, at_line(1, "header lacks labels="));

  const auto d = static_cast<std::size_t>(*dim);
  std::vector<TileRecord> records;
  std::unordered_set<std::string> ids;
  std::unordered_set<std::string> label_set(labels.begin(), labels.end());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = text::trim(line);
    if (row.empty() || row.front() == '#') continue;
    const auto fields = text::split(row, ',');
    if (fields.size() != 5 + d)
      fail(ErrorCode::kFormat,
           at_line(line_no, "expected " + std::to_string(5 + d) +
                                " fields (5 + dim), got " +
                                std::to_string(fields.size())));
    TileRecord r;
    r.tile_id = std::string(text::trim(fields[0]));
    r.image_id = std::string(text::trim(fields[1]));
    r.diagnosis = std::string(text::trim(fields[2]));
    if (r.tile_id.empty() || r.image_id.empty())
      fail(ErrorCode::kFormat, at_line(line_no, "empty tile_id or image_id"));
    if (!label_set.count(r.diagnosis))
      fail(ErrorCode::kFormat,
           at_line(line_no, "unknown label '" + r.diagnosis + "'"));
    const auto x = text::parse_int(fields[3]);
    const auto y = text::parse_int(fields[4]);
    if (!x || !y || *x < 0 || *y < 0 || *x > INT32_MAX || *y > INT32_MAX)
      fail(ErrorCode::kFormat,
           at_line(line_no, "x and y must be non-negative integers"));
    r.x = static_cast<int>(*x);
    r.y = static_cast<int>(*y);
    r.features.reserve(d);
    for (std::size_t j = 0; j < d; ++j) {
      const auto v = text::parse_double(fields[5 + j]);
      if (!v)
        fail(ErrorCode::kFormat,
             at_line(line_no, "feature f" + std::to_string(j) + " is not a number"));
      if (!std::isfinite(*v))
        fail(ErrorCode::kNumeric,
             at_line(line_no, "feature f" + std::to_string(j) + " is non-finite"));
      r.features.push_back(*v);
    }
    if (!ids.insert(r.tile_id).second)
      fail(ErrorCode::kFormat,
           at_line(line_no, "duplicate tile_id '" + r.tile_id + "'"));
    records.push_back(std::move(r));
  }
  try {
    return FeatureSet(d, std::move(labels), std::move(records), normalized);
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

void save_feature_set(const FeatureSet& fs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write feature file " + path.string());
  out << kMagic << " dim=" << fs.dim() << " labels=";
  for (std::size_t i = 0; i < fs.labels().size(); ++i)
    out << (i ? "|" : "") << fs.labels()[i];
  if (fs.normalized()) out << " normalized=1";
  out << '\n';
  for (const auto& r : fs.records()) {
    out << r.tile_id << ',' << r.image_id << ',' << r.diagnosis << ',' << r.x
        << ',' << r.y;
    for (double v : r.features) out << ',' << format_real(v);
    out << '\n';
  }
  out.flush();
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

FeatureSet normalize(const FeatureSet& fs) {
  std::vector<TileRecord> records = fs.records();
  for (auto& r : records) {
    const double n = norm_of(r.features);
    if (n == 0.0)
      fail(ErrorCode::kNumeric,
           "tile '" + r.tile_id + "' has a zero feature vector; cosine distance is undefined");
    for (double& v : r.features) v /= n;
  }
  return FeatureSet(fs.dim(), fs.labels(), std::move(records), true);
}

bool equivalent(const FeatureSet& a, const FeatureSet& b) {
  if (a.dim() != b.dim() || a.labels() != b.labels() ||
      a.normalized() != b.normalized() || a.size() != b.size())
    return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& ra = a[i];
    const auto& rb = b[i];
    if (ra.tile_id != rb.tile_id || ra.image_id != rb.image_id ||
        ra.diagnosis != rb.diagnosis || ra.x != rb.x || ra.y != rb.y)
      return false;
    for (std::size_t j = 0; j < a.dim(); ++j)
      if (format_real(ra.features[j]) != format_real(rb.features[j])) return false;
  }
  return true;
}

}  // namespace patlas
