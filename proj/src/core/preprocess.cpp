#include "preprocess.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <fstream>
#include <numeric>

#include <png.h>

#include "error.hpp"
#include "parallel.hpp"
#include "text_util.hpp"

namespace patlas {
namespace {

std::uint8_t quantize(double v) {
  // nearbyint honours the current rounding mode; FE_TONEAREST is ties-to-even.
  const double r = std::nearbyint(v);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

RgbImage crop(const RgbImage& img, int x0, int y0, int size) {
  RgbImage out(size, size);
  for (int y = 0; y < size; ++y) {
    const auto* src = &img.pixels[(static_cast<std::size_t>(y0 + y) * img.width + x0) * 3];
    std::copy(src, src + static_cast<std::size_t>(size) * 3,
              &out.pixels[static_cast<std::size_t>(y) * size * 3]);
  }
  return out;
}

struct Origin {
  int x;
  int y;
  double fraction;
};

// Kept window origins for a mask, row-major; uses a summed-area table.
std::vector<Origin> kept_origins(const Mask& mask, const TileSpec& spec) {
  const int stride = spec.stride();
  const int t = spec.tile_size;
  std::vector<Origin> out;
  if (mask.width < t || mask.height < t) return out;

  const std::size_t w1 = static_cast<std::size_t>(mask.width) + 1;
  std::vector<std::uint32_t> sat(w1 * (static_cast<std::size_t>(mask.height) + 1), 0);
  for (int y = 0; y < mask.height; ++y) {
    std::uint32_t row = 0;
    for (int x = 0; x < mask.width; ++x) {
      row += mask.at(x, y) != 0 ? 1u : 0u;
      sat[(y + 1) * w1 + (x + 1)] = sat[y * w1 + (x + 1)] + row;
    }
  }
  const double area = static_cast<double>(t) * t;
  for (int y = 0; y + t <= mask.height; y += stride) {
    for (int x = 0; x + t <= mask.width; x += stride) {
      const std::uint32_t count = sat[(y + t) * w1 + (x + t)] - sat[y * w1 + (x + t)] -
                                  sat[(y + t) * w1 + x] + sat[y * w1 + x];
      const double fraction = static_cast<double>(count) / area;
      if (fraction >= spec.min_lesion_fraction) out.push_back({x, y, fraction});
    }
  }
  return out;
}

void check_p(double p) {
  if (!(p >= 1.0) || !std::isfinite(p))
    fail(ErrorCode::kInvalidArgument, "Minkowski norm order must be a finite value >= 1");
}

}  // namespace

int TileSpec::stride() const {
  if (tile_size < 1) fail(ErrorCode::kInvalidArgument, "tile_size must be positive");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
    fail(ErrorCode::kInvalidArgument, "overlap_fraction must lie in [0, 1)");
  if (!(min_lesion_fraction >= 0.0 && min_lesion_fraction <= 1.0))
    fail(ErrorCode::kInvalidArgument, "min_lesion_fraction must lie in [0, 1]");
  const int s = static_cast<int>(std::lround(tile_size * (1.0 - overlap_fraction)));
  if (s < 1) fail(ErrorCode::kInvalidArgument, "tile stride rounds to zero");
  return s;
}

std::vector<Tile> extract_tiles(const MaskedImage& img, const TileSpec& spec) {
  if (img.mask.width != img.pixels.width || img.mask.height != img.pixels.height)
    fail(ErrorCode::kInvalidArgument,
         "image '" + img.image_id + "': mask size differs from pixel size");
  std::vector<Tile> tiles;
  for (const auto& o : kept_origins(img.mask, spec))
    tiles.push_back({o.x, o.y, o.fraction, crop(img.pixels, o.x, o.y, spec.tile_size)});
  return tiles;
}

std::array<double, 3> illuminant_estimate(const RgbImage& img, double p) {
  check_p(p);
  std::array<double, 3> sum{0.0, 0.0, 0.0};
  const std::size_t n = img.pixels.size() / 3;
  if (n == 0) return sum;
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) sum[c] += std::pow(img.pixels[i * 3 + c] / 255.0, p);
  for (double& s : sum) s = std::pow(s / static_cast<double>(n), 1.0 / p);
  return sum;
}

ColorCorrection shades_of_gray_gains(const RgbImage& img, double p) {
  const auto e = illuminant_estimate(img, p);
  ColorCorrection cc;
  if (e[0] <= 0.0 || e[1] <= 0.0 || e[2] <= 0.0) {
    cc.degenerate = true;
    return cc;
  }
  const double target = (e[0] + e[1] + e[2]) / 3.0;
  for (int c = 0; c < 3; ++c) cc.gains[c] = target / e[c];
  return cc;
}

std::vector<double> apply_gains_unquantized(const RgbImage& img, const ColorCorrection& cc) {
  std::vector<double> out(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    out[i] = img.pixels[i] * cc.gains[i % 3];
  return out;
}

RgbImage apply_gains(const RgbImage& img, const ColorCorrection& cc) {
  if (cc.degenerate) return img;
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  RgbImage out = img;
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    out.pixels[i] = quantize(img.pixels[i] * cc.gains[i % 3]);
  std::fesetround(saved);
  return out;
}

ColorConstancyResult color_constancy(const RgbImage& img, double p) {
  const auto cc = shades_of_gray_gains(img, p);
  return {apply_gains(img, cc), cc.degenerate};
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t cap, std::uint64_t seed,
                                        const std::string& label) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (cap >= n) return idx;
  Rng rng(seed ^ fnv1a(label));
  // Partial Fisher-Yates: the first `cap` slots become a uniform sample.
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// --- PNG ------------------------------------------------------------------

namespace {

std::vector<std::uint8_t> read_png(const std::filesystem::path& path, png_uint_32 format,
                                   int& width, int& height) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    fail(ErrorCode::kIo, "cannot read PNG " + path.string() + ": " + image.message);
  image.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::kIo, "cannot decode PNG " + path.string() + ": " + msg);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  return buf;
}

}  // namespace

RgbImage read_png_rgb(const std::filesystem::path& path) {
  RgbImage img;
  img.pixels = read_png(path, PNG_FORMAT_RGB, img.width, img.height);
  return img;
}

Mask read_png_mask(const std::filesystem::path& path) {
  Mask m;
  m.values = read_png(path, PNG_FORMAT_GRAY, m.width, m.height);
  return m;
}

void write_png_rgb(const RgbImage& img, const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels.data(), 0, nullptr))
    fail(ErrorCode::kIo, "cannot write PNG " + path.string() + ": " + image.message);
}

// --- corpus ---------------------------------------------------------------

namespace {

struct ManifestRow {
  std::string image_id;
  std::string diagnosis;
  std::filesystem::path image_path;
  std::filesystem::path mask_path;
};

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      text::trim(line) != "image_id,diagnosis,image_path,mask_path")
    fail(ErrorCode::kFormat,
         path.string() + ": header must be image_id,diagnosis,image_path,mask_path");
  const auto base = path.parent_path();
  std::vector<ManifestRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = text::trim(line);
    if (row.empty() || row.front() == '#') continue;
    const auto f = text::split(row, ',');
    if (f.size() != 4 || f[0].empty() || f[1].empty())
      fail(ErrorCode::kFormat, path.string() + ":" + std::to_string(line_no) +
                                   ": expected image_id,diagnosis,image_path,mask_path");
    auto resolve = [&](std::string_view p) {
      std::filesystem::path fp{std::string(p)};
      return fp.is_absolute() ? fp : base / fp;
    };
    rows.push_back({std::string(f[0]), std::string(f[1]), resolve(f[2]), resolve(f[3])});
  }
  return rows;
}

struct PlannedTile {
  std::size_t image;  // index into rows
  int x;
  int y;
};

}  // namespace

TilingReport tile_corpus(const std::filesystem::path& manifest,
                         const std::filesystem::path& out_dir, const TilingOptions& opts) {
  namespace fs = std::filesystem;
  opts.spec.stride();
  if (opts.color_scope != ColorScope::kNone) check_p(opts.minkowski_p);

  auto rows = read_manifest(manifest);
  TilingReport report;
  report.images_in = rows.size();

  // Images first.
  std::map<std::string, std::vector<ManifestRow>> by_class;
  for (auto& r : rows) by_class[r.diagnosis].push_back(std::move(r));
  apply_caps(by_class, opts.caps.max_images_per_class, opts.caps.seed);
  std::vector<ManifestRow> images;
  for (auto& [label, list] : by_class)
    for (auto& r : list) images.push_back(std::move(r));
  std::sort(images.begin(), images.end(),
            [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
  for (std::size_t i = 1; i < images.size(); ++i)
    if (images[i].image_id == images[i - 1].image_id)
      fail(ErrorCode::kFormat, "duplicate image_id '" + images[i].image_id + "' in manifest");
  report.images_used = images.size();

  // Pass 1: window origins from masks only.
  std::vector<std::vector<Origin>> origins(images.size());
  parallel_for(images.size(), opts.threads, [&](std::size_t i) {
    const Mask mask = read_png_mask(images[i].mask_path);
    origins[i] = kept_origins(mask, opts.spec);
  });

  // Then tiles.
  std::map<std::string, std::vector<PlannedTile>> planned;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (origins[i].empty()) ++report.images_without_tiles;
    for (const auto& o : origins[i]) planned[images[i].diagnosis].push_back({i, o.x, o.y});
  }
  std::map<std::string, std::size_t> tile_caps;
  for (const auto& [label, cap] : opts.caps.max_tiles_per_class) tile_caps["tiles/" + label] = cap;
  {
    std::map<std::string, std::vector<PlannedTile>> keyed;
    for (auto& [label, list] : planned) keyed["tiles/" + label] = std::move(list);
    apply_caps(keyed, tile_caps, opts.caps.seed);
    planned.clear();
    for (auto& [key, list] : keyed) planned[key.substr(6)] = std::move(list);
  }
  std::vector<std::vector<std::pair<int, int>>> chosen(images.size());
  for (const auto& [label, list] : planned) {
    report.tiles_per_class[label] = list.size();
    for (const auto& t : list) chosen[t.image].push_back({t.y, t.x});
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + out_dir.string());

  // Pass 2: pixels, correction and output.
  std::vector<std::size_t> warnings(images.size(), 0);
  parallel_for(images.size(), opts.threads, [&](std::size_t i) {
    if (chosen[i].empty()) return;
    std::sort(chosen[i].begin(), chosen[i].end());
    const RgbImage img = read_png_rgb(images[i].image_path);
    const Mask mask = read_png_mask(images[i].mask_path);
    if (mask.width != img.width || mask.height != img.height)
      fail(ErrorCode::kFormat, "image '" + images[i].image_id + "': mask size differs");
    ColorCorrection image_cc;
    if (opts.color_scope == ColorScope::kImage) {
      image_cc = shades_of_gray_gains(img, opts.minkowski_p);
      if (image_cc.degenerate) ++warnings[i];
    }
    for (const auto& [y, x] : chosen[i]) {
      RgbImage tile = crop(img, x, y, opts.spec.tile_size);
      if (opts.color_scope == ColorScope::kTile) {
        auto cc = color_constancy(tile, opts.minkowski_p);
        if (cc.warning) ++warnings[i];
        tile = std::move(cc.image);
      } else if (opts.color_scope == ColorScope::kImage) {
        tile = apply_gains(tile, image_cc);
      }
      const std::string tile_id =
          images[i].image_id + "_" + std::to_string(x) + "_" + std::to_string(y);
      write_png_rgb(tile, out_dir / (tile_id + ".png"));
    }
  });

  std::ofstream csv(out_dir / "tiles.csv", std::ios::binary | std::ios::trunc);
  if (!csv) fail(ErrorCode::kIo, "cannot write tile manifest in " + out_dir.string());
  csv << "tile_id,image_id,diagnosis,x,y,path\n";
  for (std::size_t i = 0; i < images.size(); ++i) {
    report.color_warnings += warnings[i];
    for (const auto& [y, x] : chosen[i]) {
      const std::string tile_id =
          images[i].image_id + "_" + std::to_string(x) + "_" + std::to_string(y);
      csv << tile_id << ',' << images[i].image_id << ',' << images[i].diagnosis << ',' << x
          << ',' << y << ',' << tile_id << ".png\n";
      ++report.tiles_written;
    }
  }
  if (!csv) fail(ErrorCode::kIo, "write failed for tile manifest");
  return report;
}

}  // namespace patlas
