#include "patlas/patlas.h"

#include <fstream>
#include <iterator>
#include <memory>
#include <new>
#include <set>
#include <sstream>
#include <string>

#include "catalog.hpp"
#include "classifier.hpp"
#include "clustering.hpp"
#include "error.hpp"
#include "feature_store.hpp"
#include "model_selection.hpp"
#include "preprocess.hpp"
#include "stats.hpp"

struct patlas_feature_set {
  patlas::FeatureSet fs;
  std::size_t images = 0;
};
struct patlas_cluster_model {
  patlas::ClusterModel model;
};
struct patlas_assignment {
  patlas::Assignment assignment;
};
struct patlas_sweep {
  patlas::KSweepResult result;
};
struct patlas_catalog {
  patlas::MethodCatalog catalog;
};
struct patlas_probability_table {
  patlas::ProbabilityTable table;
};
struct patlas_predictions {
  std::vector<patlas::LesionPrediction> predictions;
  std::vector<std::string> labels;
};
struct patlas_tiling_options {
  patlas::TilingOptions opts;
};

namespace {

thread_local std::string g_last_error;

patlas_status to_status(patlas::ErrorCode c) { return static_cast<patlas_status>(c); }

// Runs `fn`, translating exceptions into status codes and the thread-local
// message.
template <typename Fn>
patlas_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return PATLAS_OK;
  } catch (const patlas::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PATLAS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PATLAS_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) patlas::fail(patlas::ErrorCode::kInvalidArgument, what);
}

patlas_feature_set* wrap(patlas::FeatureSet fs) {
  std::set<std::string> ids;
  for (const auto& r : fs.records()) ids.insert(r.image_id);
  const auto n = ids.size();
  return new patlas_feature_set{std::move(fs), n};
}

}  // namespace

extern "C" {

const char* patlas_version(void) { return "1.0.0"; }

const char* patlas_status_string(patlas_status s) {
  switch (s) {
    case PATLAS_OK: return "ok";
    case PATLAS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PATLAS_ERR_IO: return "i/o error";
    case PATLAS_ERR_FORMAT: return "format error";
    case PATLAS_ERR_NUMERIC: return "numeric error";
    case PATLAS_ERR_DEGENERATE: return "degenerate input";
    case PATLAS_ERR_NOT_FOUND: return "not found";
    case PATLAS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* patlas_last_error(void) { return g_last_error.c_str(); }

// ---- feature sets ---------------------------------------------------------

patlas_status patlas_feature_set_load(const char* path, patlas_feature_set** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = wrap(patlas::load_feature_set(path));
  });
}

patlas_status patlas_feature_set_save(const patlas_feature_set* fs, const char* path) {
  return guarded([&] {
    require(fs && path, "null argument");
    patlas::save_feature_set(fs->fs, path);
  });
}

patlas_status patlas_feature_set_normalize(const patlas_feature_set* fs,
                                           patlas_feature_set** out) {
  return guarded([&] {
    require(fs && out, "null argument");
    *out = wrap(patlas::normalize(fs->fs));
  });
}

patlas_status patlas_feature_set_select(const patlas_feature_set* fs, const char* diagnosis,
                                        patlas_feature_set** out) {
  return guarded([&] {
    require(fs && diagnosis && out, "null argument");
    *out = wrap(fs->fs.select_diagnosis(diagnosis));
  });
}

void patlas_feature_set_free(patlas_feature_set* fs) { delete fs; }

size_t patlas_feature_set_size(const patlas_feature_set* fs) { return fs ? fs->fs.size() : 0; }
size_t patlas_feature_set_dim(const patlas_feature_set* fs) { return fs ? fs->fs.dim() : 0; }
int patlas_feature_set_is_normalized(const patlas_feature_set* fs) {
  return fs && fs->fs.normalized() ? 1 : 0;
}
size_t patlas_feature_set_label_count(const patlas_feature_set* fs) {
  return fs ? fs->fs.labels().size() : 0;
}
const char* patlas_feature_set_label(const patlas_feature_set* fs, size_t i) {
  return fs && i < fs->fs.labels().size() ? fs->fs.labels()[i].c_str() : nullptr;
}
size_t patlas_feature_set_image_count(const patlas_feature_set* fs) {
  return fs ? fs->images : 0;
}
const char* patlas_feature_set_tile_id(const patlas_feature_set* fs, size_t i) {
  return fs && i < fs->fs.size() ? fs->fs[i].tile_id.c_str() : nullptr;
}
const char* patlas_feature_set_image_id(const patlas_feature_set* fs, size_t i) {
  return fs && i < fs->fs.size() ? fs->fs[i].image_id.c_str() : nullptr;
}
const char* patlas_feature_set_diagnosis(const patlas_feature_set* fs, size_t i) {
  return fs && i < fs->fs.size() ? fs->fs[i].diagnosis.c_str() : nullptr;
}
const double* patlas_feature_set_features(const patlas_feature_set* fs, size_t i) {
  return fs && i < fs->fs.size() ? fs->fs[i].features.data() : nullptr;
}

// ---- preprocessing ------------------------------------------------------

patlas_tile_spec patlas_tile_spec_default(void) {
  const patlas::TileSpec d;
  return {d.tile_size, d.overlap_fraction, d.min_lesion_fraction};
}

patlas_status patlas_tile_origins(const uint8_t* mask, int width, int height,
                                  const patlas_tile_spec* spec, int* xs, int* ys,
                                  size_t capacity, size_t* count) {
  return guarded([&] {
    require(mask && spec && count && width >= 0 && height >= 0, "invalid argument");
    require(capacity == 0 || (xs && ys), "null output buffers");
    patlas::MaskedImage img;
    img.mask = patlas::Mask(width, height);
    std::copy(mask, mask + static_cast<std::size_t>(width) * height, img.mask.values.begin());
    img.pixels = patlas::RgbImage(width, height);
    const patlas::TileSpec ts{spec->tile_size, spec->overlap_fraction, spec->min_lesion_fraction};
    const auto tiles = patlas::extract_tiles(img, ts);
    *count = tiles.size();
    for (std::size_t i = 0; i < tiles.size() && i < capacity; ++i) {
      xs[i] = tiles[i].x;
      ys[i] = tiles[i].y;
    }
  });
}

patlas_status patlas_color_constancy(uint8_t* rgb, int width, int height, double p,
                                     int* warning) {
  return guarded([&] {
    require(rgb && width >= 0 && height >= 0, "invalid argument");
    patlas::RgbImage img(width, height);
    std::copy(rgb, rgb + img.pixels.size(), img.pixels.begin());
    const auto res = patlas::color_constancy(img, p);
    std::copy(res.image.pixels.begin(), res.image.pixels.end(), rgb);
    if (warning) *warning = res.warning ? 1 : 0;
  });
}

patlas_status patlas_tiling_options_create(patlas_tiling_options** out) {
  return guarded([&] {
    require(out, "null argument");
    *out = new patlas_tiling_options{};
  });
}
void patlas_tiling_options_free(patlas_tiling_options* o) { delete o; }

patlas_status patlas_tiling_options_set_spec(patlas_tiling_options* o,
                                             const patlas_tile_spec* spec) {
  return guarded([&] {
    require(o && spec, "null argument");
    o->opts.spec = {spec->tile_size, spec->overlap_fraction, spec->min_lesion_fraction};
    o->opts.spec.stride();
  });
}

patlas_status patlas_tiling_options_set_color(patlas_tiling_options* o, patlas_color_scope scope,
                                              double p) {
  return guarded([&] {
    require(o, "null argument");
    switch (scope) {
      case PATLAS_COLOR_PER_TILE: o->opts.color_scope = patlas::ColorScope::kTile; break;
      case PATLAS_COLOR_PER_IMAGE: o->opts.color_scope = patlas::ColorScope::kImage; break;
      case PATLAS_COLOR_NONE: o->opts.color_scope = patlas::ColorScope::kNone; break;
      default: require(false, "unknown color scope");
    }
    require(p >= 1.0, "Minkowski norm order must be >= 1");
    o->opts.minkowski_p = p;
  });
}

patlas_status patlas_tiling_options_set_seed(patlas_tiling_options* o, uint64_t seed) {
  return guarded([&] {
    require(o, "null argument");
    o->opts.caps.seed = seed;
  });
}

patlas_status patlas_tiling_options_set_threads(patlas_tiling_options* o, unsigned threads) {
  return guarded([&] {
    require(o, "null argument");
    o->opts.threads = threads;
  });
}

patlas_status patlas_tiling_options_set_image_cap(patlas_tiling_options* o, const char* label,
                                                  size_t cap) {
  return guarded([&] {
    require(o && label, "null argument");
    require(cap > 0, "caps must be positive");
    o->opts.caps.max_images_per_class[label] = cap;
  });
}

patlas_status patlas_tiling_options_set_tile_cap(patlas_tiling_options* o, const char* label,
                                                 size_t cap) {
  return guarded([&] {
    require(o && label, "null argument");
    require(cap > 0, "caps must be positive");
    o->opts.caps.max_tiles_per_class[label] = cap;
  });
}

patlas_status patlas_tile_corpus(const char* manifest, const char* out_dir,
                                 const patlas_tiling_options* o, patlas_tiling_report* report) {
  return guarded([&] {
    require(manifest && out_dir, "null argument");
    const patlas::TilingOptions opts = o ? o->opts : patlas::TilingOptions{};
    const auto r = patlas::tile_corpus(manifest, out_dir, opts);
    if (report)
      *report = {r.images_in, r.images_used, r.images_without_tiles, r.tiles_written,
                 r.color_warnings};
  });
}

// ---- clustering -----------------------------------------------------------

patlas_kmeans_params patlas_kmeans_params_default(void) {
  const patlas::KMeansParams d;
  return {d.k, d.seed, d.max_iter, d.tol, d.threads};
}

patlas_status patlas_cosine_distance(const double* u, const double* v, size_t n, double* out) {
  return guarded([&] {
    require(u && v && out, "null argument");
    *out = patlas::cosine_distance({u, n}, {v, n});
  });
}

patlas_status patlas_kmeans_fit(const patlas_feature_set* fs, const patlas_kmeans_params* p,
                                patlas_cluster_model** model, patlas_assignment** assignment) {
  return guarded([&] {
    require(fs && p && model, "null argument");
    patlas::KMeansParams kp{p->k, p->seed, p->max_iter, p->tol, p->threads};
    auto res = patlas::fit_kmeans(fs->fs, kp);
    auto m = std::make_unique<patlas_cluster_model>(patlas_cluster_model{std::move(res.model)});
    if (assignment) *assignment = new patlas_assignment{std::move(res.assignment)};
    *model = m.release();
  });
}

patlas_status patlas_assign(const patlas_cluster_model* model, const patlas_feature_set* fs,
                            unsigned threads, patlas_assignment** out) {
  return guarded([&] {
    require(model && fs && out, "null argument");
    *out = new patlas_assignment{patlas::assign(model->model, fs->fs, threads)};
  });
}

size_t patlas_model_k(const patlas_cluster_model* m) { return m ? m->model.k() : 0; }
size_t patlas_model_dim(const patlas_cluster_model* m) { return m ? m->model.dim() : 0; }
double patlas_model_inertia(const patlas_cluster_model* m) { return m ? m->model.inertia : 0.0; }
int patlas_model_iterations(const patlas_cluster_model* m) {
  return m ? m->model.iterations_run : 0;
}
const double* patlas_model_centroid(const patlas_cluster_model* m, size_t i) {
  return m && i < m->model.k() ? m->model.centroids.row(i).data() : nullptr;
}
patlas_status patlas_model_save(const patlas_cluster_model* m, const char* path) {
  return guarded([&] {
    require(m && path, "null argument");
    patlas::save_model(m->model, path);
  });
}
patlas_status patlas_model_load(const char* path, patlas_cluster_model** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new patlas_cluster_model{patlas::load_model(path)};
  });
}
void patlas_model_free(patlas_cluster_model* m) { delete m; }

size_t patlas_assignment_size(const patlas_assignment* a) { return a ? a->assignment.size() : 0; }
int patlas_assignment_cluster(const patlas_assignment* a, size_t i) {
  return a && i < a->assignment.size() ? a->assignment.cluster[i] : -1;
}
double patlas_assignment_distance(const patlas_assignment* a, size_t i) {
  return a && i < a->assignment.size() ? a->assignment.distance[i] : 0.0;
}
patlas_status patlas_assignment_save(const patlas_assignment* a, const patlas_feature_set* fs,
                                     const char* path) {
  return guarded([&] {
    require(a && fs && path, "null argument");
    patlas::save_assignment(a->assignment, fs->fs, path);
  });
}
patlas_status patlas_assignment_load(const patlas_feature_set* fs, const char* path,
                                     patlas_assignment** out) {
  return guarded([&] {
    require(fs && path && out, "null argument");
    *out = new patlas_assignment{patlas::load_assignment(fs->fs, path)};
  });
}
void patlas_assignment_free(patlas_assignment* a) { delete a; }

// ---- model selection ------------------------------------------------------

patlas_status patlas_compute_w(const patlas_feature_set* fs, const patlas_cluster_model* model,
                               const patlas_assignment* a, double* out) {
  return guarded([&] {
    require(fs && model && a && out, "null argument");
    *out = patlas::compute_w(fs->fs, model->model, a->assignment);
  });
}

patlas_sweep_params patlas_sweep_params_default(void) {
  const patlas::SweepParams d;
  return {d.k_min, d.k_max, d.seed, d.max_iter, d.tol, d.threads};
}

patlas_status patlas_sweep_run(const patlas_feature_set* fs, const patlas_sweep_params* p,
                               patlas_sweep** out) {
  return guarded([&] {
    require(fs && p && out, "null argument");
    patlas::SweepParams sp{p->k_min, p->k_max, p->seed, p->max_iter, p->tol, p->threads};
    *out = new patlas_sweep{patlas::sweep_k(fs->fs, sp)};
  });
}

size_t patlas_sweep_size(const patlas_sweep* s) { return s ? s->result.k_values.size() : 0; }
int patlas_sweep_k(const patlas_sweep* s, size_t i) {
  return s && i < s->result.k_values.size() ? s->result.k_values[i] : 0;
}
double patlas_sweep_inertia(const patlas_sweep* s, size_t i) {
  return s && i < s->result.inertia_curve.size() ? s->result.inertia_curve[i] : 0.0;
}
double patlas_sweep_w(const patlas_sweep* s, size_t i) {
  return s && i < s->result.w_curve.size() ? s->result.w_curve[i] : 0.0;
}
int patlas_sweep_elbow_k(const patlas_sweep* s) {
  return s && s->result.chosen_elbow_k ? *s->result.chosen_elbow_k : 0;
}
int patlas_sweep_compactness_k(const patlas_sweep* s) {
  return s && s->result.chosen_compactness_k ? *s->result.chosen_compactness_k : 0;
}
size_t patlas_sweep_flagged_increases(const patlas_sweep* s) {
  return s ? s->result.inertia_increase_ks.size() : 0;
}
uint64_t patlas_sweep_seed(const patlas_sweep* s) { return s ? s->result.seed : 0; }
patlas_status patlas_sweep_save(const patlas_sweep* s, const char* json_path,
                                const char* csv_path) {
  return guarded([&] {
    require(s && json_path && csv_path, "null argument");
    patlas::save_sweep(s->result, json_path, csv_path);
  });
}
patlas_status patlas_sweep_load(const char* json_path, patlas_sweep** out) {
  return guarded([&] {
    require(json_path && out, "null argument");
    *out = new patlas_sweep{patlas::load_sweep(json_path)};
  });
}
void patlas_sweep_free(patlas_sweep* s) { delete s; }

patlas_status patlas_select_k_elbow(const int* ks, const double* curve, size_t n, int* out_k) {
  return guarded([&] {
    require(ks && curve && out_k, "null argument");
    const auto r = patlas::select_k_elbow({ks, n}, {curve, n});
    *out_k = r.k.value_or(0);
  });
}

patlas_status patlas_select_k_compactness(const int* ks, const double* w, size_t n, int* out_k) {
  return guarded([&] {
    require(ks && w && out_k, "null argument");
    *out_k = patlas::select_k_compactness({ks, n}, {w, n});
  });
}

// ---- catalog --------------------------------------------------------------

patlas_status patlas_catalog_create(const char* method, patlas_catalog** out) {
  return guarded([&] {
    require(method && out, "null argument");
    auto* c = new patlas_catalog{};
    c->catalog.method = method;
    *out = c;
  });
}

patlas_status patlas_catalog_add(patlas_catalog* cat, const char* diagnosis, int chosen_k,
                                 const patlas_feature_set* fs,
                                 const patlas_cluster_model* model,
                                 const patlas_assignment* a) {
  return guarded([&] {
    require(cat && diagnosis && fs && model && a, "null argument");
    cat->catalog.by_diagnosis[diagnosis] =
        patlas::build_catalog(fs->fs, model->model, a->assignment, diagnosis);
    cat->catalog.chosen_k[diagnosis] = chosen_k;
  });
}

patlas_status patlas_catalog_ingest_annotations(patlas_catalog* cat, const char* csv_path) {
  return guarded([&] {
    require(cat && csv_path, "null argument");
    patlas::MethodCatalog copy = cat->catalog;  // all-or-nothing
    patlas::ingest_annotations(copy, csv_path);
    cat->catalog = std::move(copy);
  });
}

size_t patlas_catalog_cluster_count(const patlas_catalog* cat, const char* diagnosis) {
  if (!cat || !diagnosis) return 0;
  const auto it = cat->catalog.by_diagnosis.find(diagnosis);
  return it == cat->catalog.by_diagnosis.end() ? 0 : it->second.size();
}

size_t patlas_catalog_non_informative(const patlas_catalog* cat, const char* diagnosis) {
  if (!cat || !diagnosis) return 0;
  const auto it = cat->catalog.by_diagnosis.find(diagnosis);
  if (it == cat->catalog.by_diagnosis.end()) return 0;
  std::size_t n = 0;
  for (const auto& e : it->second) n += e.informative() ? 0 : 1;
  return n;
}

double patlas_catalog_redundancy(const patlas_catalog* cat, const char* diagnosis) {
  if (!cat || !diagnosis) return 0.0;
  const auto it = cat->catalog.by_diagnosis.find(diagnosis);
  return it == cat->catalog.by_diagnosis.end() ? 0.0 : patlas::redundancy_fraction(it->second);
}

size_t patlas_catalog_diagnosis_count(const patlas_catalog* cat) {
  return cat ? cat->catalog.by_diagnosis.size() : 0;
}

const char* patlas_catalog_diagnosis(const patlas_catalog* cat, size_t i) {
  if (!cat || i >= cat->catalog.by_diagnosis.size()) return nullptr;
  return std::next(cat->catalog.by_diagnosis.begin(), static_cast<std::ptrdiff_t>(i))->first.c_str();
}

const char* patlas_catalog_method(const patlas_catalog* cat) {
  return cat ? cat->catalog.method.c_str() : nullptr;
}

patlas_status patlas_catalog_save_json(const patlas_catalog* cat, const char* path) {
  return guarded([&] {
    require(cat && path, "null argument");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) patlas::fail(patlas::ErrorCode::kIo, std::string("cannot write ") + path);
    out << patlas::catalog_to_json(cat->catalog);
    if (!out) patlas::fail(patlas::ErrorCode::kIo, std::string("write failed for ") + path);
  });
}

patlas_status patlas_catalog_load_json(const char* path, patlas_catalog** out) {
  return guarded([&] {
    require(path && out, "null argument");
    std::ifstream in(path, std::ios::binary);
    if (!in) patlas::fail(patlas::ErrorCode::kIo, std::string("cannot open ") + path);
    std::stringstream ss;
    ss << in.rdbuf();
    *out = new patlas_catalog{patlas::catalog_from_json(ss.str())};
  });
}

patlas_status patlas_catalog_render(const patlas_catalog* cat, const char* tile_dir,
                                    const char* out_dir, size_t* warnings) {
  return guarded([&] {
    require(cat && tile_dir && out_dir, "null argument");
    const auto r = patlas::render_report(cat->catalog, tile_dir, out_dir);
    if (warnings) *warnings = r.warnings.size();
  });
}

patlas_status patlas_catalog_summarize(const patlas_catalog* const* cats, size_t count,
                                       const char* json_path) {
  return guarded([&] {
    require(cats && json_path && count > 0, "invalid argument");
    std::vector<patlas::MethodCatalog> all;
    for (size_t i = 0; i < count; ++i) {
      require(cats[i] != nullptr, "null catalog");
      all.push_back(cats[i]->catalog);
    }
    std::ofstream out(json_path, std::ios::binary | std::ios::trunc);
    if (!out) patlas::fail(patlas::ErrorCode::kIo, std::string("cannot write ") + json_path);
    out << patlas::summary_to_json(patlas::summarize(all));
    if (!out) patlas::fail(patlas::ErrorCode::kIo, std::string("write failed for ") + json_path);
  });
}

void patlas_catalog_free(patlas_catalog* cat) { delete cat; }

// ---- classifier -----------------------------------------------------------

patlas_status patlas_probability_table_build(const patlas_feature_set* train,
                                             const patlas_assignment* a, size_t k,
                                             patlas_probability_table** out) {
  return guarded([&] {
    require(train && a && out, "null argument");
    *out = new patlas_probability_table{
        patlas::build_probability_table(a->assignment, train->fs, k)};
  });
}

const double* patlas_probability_table_row(const patlas_probability_table* t, size_t c) {
  return t && c < t->table.rows.size() ? t->table.rows[c].data() : nullptr;
}

patlas_status patlas_probability_table_save(const patlas_probability_table* t, const char* path) {
  return guarded([&] {
    require(t && path, "null argument");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) patlas::fail(patlas::ErrorCode::kIo, std::string("cannot write ") + path);
    out << patlas::table_to_json(t->table);
  });
}

patlas_status patlas_probability_table_load(const char* path, patlas_probability_table** out) {
  return guarded([&] {
    require(path && out, "null argument");
    std::ifstream in(path, std::ios::binary);
    if (!in) patlas::fail(patlas::ErrorCode::kIo, std::string("cannot open ") + path);
    std::stringstream ss;
    ss << in.rdbuf();
    *out = new patlas_probability_table{patlas::table_from_json(ss.str())};
  });
}

void patlas_probability_table_free(patlas_probability_table* t) { delete t; }

patlas_status patlas_classify(const patlas_feature_set* test, const patlas_cluster_model* model,
                              const patlas_probability_table* table, const char* lesion_list,
                              unsigned threads, patlas_predictions** out) {
  return guarded([&] {
    require(test && model && table && out, "null argument");
    std::vector<patlas::LesionRef> lesions;
    if (lesion_list) lesions = patlas::load_lesion_list(lesion_list);
    *out = new patlas_predictions{
        patlas::classify(test->fs, model->model, table->table, lesions, threads),
        table->table.labels};
  });
}

size_t patlas_predictions_size(const patlas_predictions* p) {
  return p ? p->predictions.size() : 0;
}

patlas_status patlas_predictions_save(const patlas_predictions* p, const char* path) {
  return guarded([&] {
    require(p && path, "null argument");
    patlas::save_predictions(p->predictions, p->labels, path);
  });
}

patlas_status patlas_predictions_load(const char* path, patlas_predictions** out) {
  return guarded([&] {
    require(path && out, "null argument");
    auto* p = new patlas_predictions{};
    try {
      p->predictions = patlas::load_predictions(path, p->labels);
    } catch (...) {
      delete p;
      throw;
    }
    *out = p;
  });
}

void patlas_predictions_free(patlas_predictions* p) { delete p; }

patlas_status patlas_evaluate(const patlas_predictions* p, const char* json_path,
                              patlas_evaluation_summary* summary) {
  return guarded([&] {
    require(p, "null argument");
    const auto r = patlas::evaluate(p->predictions, p->labels);
    if (json_path) {
      std::ofstream out(json_path, std::ios::binary | std::ios::trunc);
      if (!out) patlas::fail(patlas::ErrorCode::kIo, std::string("cannot write ") + json_path);
      out << patlas::evaluation_to_json(r);
    }
    if (summary)
      *summary = {r.n_lesions, r.n_excluded,     r.n_scored,     r.accuracy,
                  r.accuracy_ci_lo, r.accuracy_ci_hi, r.mean_recall};
  });
}

// ---- statistics -----------------------------------------------------------

patlas_status patlas_one_sample_t(const double* d, size_t n, patlas_t_test* out) {
  return guarded([&] {
    require((d || n == 0) && out, "null argument");
    const auto r = patlas::stats::one_sample_t({d, n});
    *out = {r.mean_diff, r.ci95.first, r.ci95.second, r.t_statistic,
            r.df,        r.p_value,    r.normality_advisory ? 1 : 0};
  });
}

patlas_status patlas_holm_correct(const double* p, size_t n, double* adjusted) {
  return guarded([&] {
    require((p && adjusted) || n == 0, "null argument");
    const auto r = patlas::stats::holm_correct({p, n});
    std::copy(r.begin(), r.end(), adjusted);
  });
}

}  // extern "C"
