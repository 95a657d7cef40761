#include "catalog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "text_util.hpp"

namespace patlas {
namespace {

using ojson = nlohmann::ordered_json;

double round9(double v) { return std::strtod(format_real(v).c_str(), nullptr); }

std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::optional<bool> parse_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  return std::nullopt;
}

ojson entry_to_json(const CatalogEntry& e) {
  ojson j;
  j["cluster_index"] = e.cluster_index;
  j["size"] = e.size;
  j["informative"] = e.informative();
  auto reps = ojson::array();
  for (const auto& r : e.representatives)
    reps.push_back(ojson{{"tile_id", r.tile_id}, {"distance", round9(r.distance)}});
  j["representatives"] = std::move(reps);
  if (e.annotation) {
    ojson a;
    a["patterns"] = e.annotation->patterns;
    a["redundant_with"] =
        e.annotation->redundant_with ? ojson(*e.annotation->redundant_with) : ojson(nullptr);
    a["informative_override"] = e.annotation->informative_override
                                    ? ojson(*e.annotation->informative_override)
                                    : ojson(nullptr);
    j["annotation"] = std::move(a);
  } else {
    j["annotation"] = nullptr;
  }
  return j;
}

ojson mean_ci_json(const stats::MeanCi& m) {
  ojson j;
  j["mean"] = round9(m.mean);
  if (m.has_ci) {
    j["ci95"] = ojson::array({round9(m.lo), round9(m.hi)});
  } else {
    j["ci95"] = nullptr;
  }
  return j;
}

}  // namespace

bool is_informative(std::size_t size, std::optional<bool> override_flag) {
  if (override_flag) return *override_flag;
  return size >= kMinInformativeSize;
}

bool CatalogEntry::informative() const {
  return is_informative(size, annotation ? annotation->informative_override : std::nullopt);
}

std::vector<CatalogEntry> build_catalog(const FeatureSet& fs, const ClusterModel& model,
                                        const Assignment& assignment,
                                        const std::string& diagnosis) {
  if (assignment.size() != fs.size())
    fail(ErrorCode::kInvalidArgument, "assignment does not cover the feature set");
  struct Member {
    double distance;
    const std::string* tile_id;
  };
  std::vector<std::vector<Member>> members(model.k());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const int c = assignment.cluster[i];
    if (c < 0 || static_cast<std::size_t>(c) >= model.k())
      fail(ErrorCode::kInvalidArgument, "tile '" + fs[i].tile_id + "' has no valid cluster");
    members[static_cast<std::size_t>(c)].push_back(
        {cosine_distance(model.centroids.row(static_cast<std::size_t>(c)), fs[i].features),
         &fs[i].tile_id});
  }
  std::vector<CatalogEntry> out;
  out.reserve(model.k());
  for (std::size_t c = 0; c < model.k(); ++c) {
    auto& m = members[c];
    std::sort(m.begin(), m.end(), [](const Member& a, const Member& b) {
      if (a.distance != b.distance) return a.distance < b.distance;
      return *a.tile_id < *b.tile_id;
    });
    CatalogEntry e;
    e.diagnosis = diagnosis;
    e.cluster_index = static_cast<int>(c);
    e.size = m.size();
    const std::size_t n_rep = std::min(kMaxRepresentatives, m.size());
    for (std::size_t i = 0; i < n_rep; ++i)
      e.representatives.push_back({*m[i].tile_id, round9(m[i].distance)});
    out.push_back(std::move(e));
  }
  return out;
}

void ingest_annotations(MethodCatalog& catalog, const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) fail(ErrorCode::kIo, "cannot open annotation file " + csv.string());
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = text::trim(line);
    if (row.empty() || row.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (row != "diagnosis,cluster_index,patterns,redundant_with,informative_override")
        fail(ErrorCode::kFormat, csv.string() + ":" + std::to_string(line_no) +
                                     ": unexpected annotation header");
      continue;
    }
    const auto where = csv.string() + ":" + std::to_string(line_no) + ": ";
    const auto f = text::split(row, ',');
    if (f.size() != 5) fail(ErrorCode::kFormat, where + "expected 5 fields");
    const std::string diagnosis(text::trim(f[0]));
    const auto cluster = text::parse_int(f[1]);
    if (!cluster) fail(ErrorCode::kFormat, where + "cluster_index is not an integer");
    auto it = catalog.by_diagnosis.find(diagnosis);
    if (it == catalog.by_diagnosis.end())
      fail(ErrorCode::kNotFound, where + "unknown diagnosis '" + diagnosis + "'");
    auto& entries = it->second;
    auto exists = [&](long long c) {
      return c >= 0 && static_cast<std::size_t>(c) < entries.size();
    };
    if (!exists(*cluster))
      fail(ErrorCode::kNotFound, where + "cluster " + std::to_string(*cluster) +
                                     " does not exist (diagnosis has " +
                                     std::to_string(entries.size()) + " clusters)");
    Annotation a;
    for (auto p : text::split(f[2], ';')) {
      const auto t = text::trim(p);
      if (!t.empty()) a.patterns.emplace_back(t);
    }
    if (const auto r = text::trim(f[3]); !r.empty()) {
      const auto v = text::parse_int(r);
      if (!v) fail(ErrorCode::kFormat, where + "redundant_with is not an integer");
      if (!exists(*v))
        fail(ErrorCode::kNotFound,
             where + "redundant_with references missing cluster " + std::to_string(*v));
      a.redundant_with = static_cast<int>(*v);
    }
    if (const auto o = text::trim(f[4]); !o.empty()) {
      a.informative_override = parse_bool(o);
      if (!a.informative_override)
        fail(ErrorCode::kFormat, where + "informative_override must be true/false");
    }
    entries[static_cast<std::size_t>(*cluster)].annotation = std::move(a);
  }
}

double redundancy_fraction(const std::vector<CatalogEntry>& entries) {
  if (entries.empty()) return 0.0;
  const auto redundant = std::count_if(entries.begin(), entries.end(), [](const auto& e) {
    return e.annotation && e.annotation->redundant_with.has_value();
  });
  return static_cast<double>(redundant) / static_cast<double>(entries.size());
}

CatalogSummary summarize(const std::vector<MethodCatalog>& catalogs) {
  CatalogSummary s;
  for (const auto& cat : catalogs) {
    if (cat.by_diagnosis.empty())
      fail(ErrorCode::kInvalidArgument, "method '" + cat.method + "' has no diagnoses");
    MethodSummary ms;
    ms.method = cat.method;
    std::vector<double> counts, informative, fractions;
    for (const auto& [diag, entries] : cat.by_diagnosis) {
      DiagnosisSummary d;
      const auto k = cat.chosen_k.find(diag);
      d.chosen_k = k != cat.chosen_k.end() ? k->second : static_cast<int>(entries.size());
      d.clusters = entries.size();
      d.non_informative = static_cast<std::size_t>(std::count_if(
          entries.begin(), entries.end(), [](const auto& e) { return !e.informative(); }));
      d.informative_clusters = d.clusters - d.non_informative;
      d.non_informative_fraction =
          d.clusters ? static_cast<double>(d.non_informative) / static_cast<double>(d.clusters)
                     : 0.0;
      counts.push_back(static_cast<double>(d.clusters));
      informative.push_back(static_cast<double>(d.informative_clusters));
      fractions.push_back(d.non_informative_fraction);
      ms.per_diagnosis.emplace(diag, d);
    }
    ms.cluster_count = stats::mean_ci95(counts);
    ms.informative_count = stats::mean_ci95(informative);
    ms.non_informative_fraction = stats::mean_ci95(fractions);
    s.methods.push_back(std::move(ms));
  }
  return s;
}

std::string catalog_to_json(const MethodCatalog& cat) {
  ojson j;
  j["method"] = cat.method;
  ojson ks = ojson::object();
  for (const auto& [d, k] : cat.chosen_k) ks[d] = k;
  j["chosen_k"] = std::move(ks);
  ojson diags = ojson::object();
  for (const auto& [d, entries] : cat.by_diagnosis) {
    auto arr = ojson::array();
    for (const auto& e : entries) arr.push_back(entry_to_json(e));
    diags[d] = std::move(arr);
  }
  j["diagnoses"] = std::move(diags);
  return j.dump(2) + "\n";
}

MethodCatalog catalog_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MethodCatalog cat;
    cat.method = j.at("method").get<std::string>();
    for (const auto& [d, k] : j.at("chosen_k").items()) cat.chosen_k[d] = k.get<int>();
    for (const auto& [d, arr] : j.at("diagnoses").items()) {
      auto& entries = cat.by_diagnosis[d];
      for (const auto& je : arr) {
        CatalogEntry e;
        e.diagnosis = d;
        e.cluster_index = je.at("cluster_index").get<int>();
        e.size = je.at("size").get<std::size_t>();
        for (const auto& r : je.at("representatives"))
          e.representatives.push_back(
              {r.at("tile_id").get<std::string>(), r.at("distance").get<double>()});
        if (const auto& ja = je.at("annotation"); !ja.is_null()) {
          Annotation a;
          a.patterns = ja.at("patterns").get<std::vector<std::string>>();
          if (!ja.at("redundant_with").is_null())
            a.redundant_with = ja["redundant_with"].get<int>();
          if (!ja.at("informative_override").is_null())
            a.informative_override = ja["informative_override"].get<bool>();
          e.annotation = std::move(a);
        }
        entries.push_back(std::move(e));
      }
    }
    return cat;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("catalog JSON: ") + e.what());
  }
}

std::string summary_to_json(const CatalogSummary& s) {
  ojson j;
  auto methods = ojson::array();
  for (const auto& m : s.methods) {
    ojson jm;
    jm["method"] = m.method;
    ojson per = ojson::object();
    for (const auto& [d, ds] : m.per_diagnosis) {
      per[d] = ojson{{"chosen_k", ds.chosen_k},
                     {"clusters", ds.clusters},
                     {"informative_clusters", ds.informative_clusters},
                     {"non_informative", ds.non_informative},
                     {"non_informative_fraction", round9(ds.non_informative_fraction)}};
    }
    jm["per_diagnosis"] = std::move(per);
    jm["cluster_count"] = mean_ci_json(m.cluster_count);
    jm["informative_count"] = mean_ci_json(m.informative_count);
    jm["non_informative_fraction"] = mean_ci_json(m.non_informative_fraction);
    methods.push_back(std::move(jm));
  }
  j["methods"] = std::move(methods);
  return j.dump(2) + "\n";
}

ReportResult render_report(const MethodCatalog& cat, const std::filesystem::path& tile_dir,
                           const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create report directory " + out_dir.string());

  ReportResult result;
  const fs::path abs_out = fs::absolute(out_dir);
  const fs::path abs_tiles = fs::absolute(tile_dir);

  auto write_file = [&](const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + p.string());
    out << body;
    if (!out) fail(ErrorCode::kIo, "write failed for " + p.string());
  };

  const char* style =
      "<style>body{font-family:sans-serif}table{border-collapse:collapse}"
      "td{padding:4px;border-bottom:1px solid #ccc;vertical-align:top}"
      ".badge{padding:2px 6px;border-radius:3px;color:#fff}"
      ".ok{background:#2a7}.no{background:#b33}"
      ".ph{display:inline-block;width:96px;height:96px;background:#ddd;"
      "font-size:10px;text-align:center}img{width:96px;height:96px}</style>";

  std::ostringstream index;
  index << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>"
        << html_escape(cat.method) << " catalog</title>" << style << "</head><body>\n"
        << "<h1>Pattern catalog (" << html_escape(cat.method) << ")</h1>\n";
  if (cat.by_diagnosis.empty()) index << "<p>0 clusters</p>\n";
  index << "<ul>\n";

  for (const auto& [diag, entries] : cat.by_diagnosis) {
    std::vector<std::string> warnings;
    std::ostringstream page;
    page << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>"
         << html_escape(diag) << "</title>" << style << "</head><body>\n"
         << "<h1>" << html_escape(diag) << " (" << html_escape(cat.method) << ")</h1>\n"
         << "<p>" << entries.size() << " clusters</p>\n";
    if (!entries.empty()) page << "<table>\n";
    for (const auto& e : entries) {
      page << "<tr class=\"cluster\"><td>#" << e.cluster_index << "<br>" << e.size
           << " tiles<br><span class=\"badge " << (e.informative() ? "ok\">informative" : "no\">non-informative")
           << "</span></td><td>";
      for (const auto& r : e.representatives) {
        const fs::path tile = abs_tiles / (r.tile_id + ".png");
        if (fs::exists(tile)) {
          const auto rel = fs::relative(tile, abs_out).generic_string();
          page << "<img src=\"" << html_escape(rel) << "\" title=\"" << html_escape(r.tile_id)
               << " d=" << format_real(r.distance) << "\">";
        } else {
          page << "<span class=\"ph\">" << html_escape(r.tile_id) << "<br>missing</span>";
          warnings.push_back(diag + ": missing tile image " + tile.string());
        }
      }
      page << "</td><td>";
      if (e.annotation) {
        const auto& a = *e.annotation;
        page << "patterns: ";
        for (std::size_t i = 0; i < a.patterns.size(); ++i)
          page << (i ? "; " : "") << html_escape(a.patterns[i]);
        if (a.redundant_with) page << "<br>redundant with #" << *a.redundant_with;
        if (a.informative_override)
          page << "<br>override: " << (*a.informative_override ? "informative" : "non-informative");
      }
      page << "</td></tr>\n";
    }
    if (!entries.empty()) page << "</table>\n";
    page << "<footer>";
    if (warnings.empty()) {
      page << "<p>0 warnings</p>";
    } else {
      page << "<p>" << warnings.size() << " warnings</p><ul>";
      for (const auto& w : warnings) page << "<li class=\"warning\">" << html_escape(w) << "</li>";
      page << "</ul>";
    }
    page << "</footer>\n</body></html>\n";
    const fs::path page_path = out_dir / (diag + ".html");
    write_file(page_path, page.str());
    result.pages.push_back(page_path);
    result.warnings.insert(result.warnings.end(), warnings.begin(), warnings.end());
    index << "<li><a href=\"" << html_escape(diag) << ".html\">" << html_escape(diag)
          << "</a> (" << entries.size() << " clusters)</li>\n";
  }
  index << "</ul>\n</body></html>\n";
  write_file(out_dir / "index.html", index.str());
  write_file(out_dir / "catalog.json", catalog_to_json(cat));
  return result;
}

}  // namespace patlas
