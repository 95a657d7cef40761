#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "random.hpp"

namespace patlas {

/// Interleaved 8-bit RGB image.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // size width * height * 3

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool operator==(const RgbImage&) const = default;
};

/// Binary lesion mask; nonzero marks lesion.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0) {}
  std::uint8_t& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct MaskedImage {
  std::string image_id;
  std::string diagnosis;
  RgbImage pixels;
  Mask mask;
};

struct TileSpec {
  int tile_size = 128;
  double overlap_fraction = 0.25;
  double min_lesion_fraction = 0.60;

  /// round(tile_size * (1 - overlap)); throws if the spec is invalid.
  int stride() const;
};

struct Tile {
  int x = 0;
  int y = 0;
  double lesion_fraction = 0.0;
  RgbImage pixels;
};

/// Sliding-window tiles whose origins are stride multiples with the window
/// fully inside the image, kept when the lesion fraction reaches the minimum.
/// Row-major order. An image smaller than the tile yields no tiles.
std::vector<Tile> extract_tiles(const MaskedImage& img, const TileSpec& spec);

/// Per-channel Shades-of-Gray illuminant estimate (mean of (v/255)^p)^(1/p).
std::array<double, 3> illuminant_estimate(const RgbImage& img, double p);

struct ColorCorrection {
  std::array<double, 3> gains{1.0, 1.0, 1.0};
  bool degenerate = false;  // some channel estimate was zero; image untouched
};

/// Gains that bring all three illuminant estimates to their mean.
ColorCorrection shades_of_gray_gains(const RgbImage& img, double p);

/// Corrected values before clipping and quantization (3 doubles per pixel).
std::vector<double> apply_gains_unquantized(const RgbImage& img,
                                            const ColorCorrection& cc);

struct ColorConstancyResult {
  RgbImage image;
  bool warning = false;  // degenerate input returned unchanged
};

/// Shades-of-Gray correction; round-half-to-even then clip to [0, 255].
ColorConstancyResult color_constancy(const RgbImage& img, double p = 6.0);

/// Applies precomputed gains with the same quantization.
RgbImage apply_gains(const RgbImage& img, const ColorCorrection& cc);

struct ClassCaps {
  std::map<std::string, std::size_t> max_images_per_class;
  std::map<std::string, std::size_t> max_tiles_per_class;
  std::uint64_t seed = 0;
};

/// Indices kept when `n` items are capped at `cap`, sorted ascending.
/// Uniform sampling without replacement from a stream seeded by
/// (seed, label), so every class draws independently of the others.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t cap,
                                        std::uint64_t seed, const std::string& label);

/// Caps each class list in place. Classes without a cap, or under it, are
/// left untouched; order within a class is preserved.
template <typename T>
void apply_caps(std::map<std::string, std::vector<T>>& items,
                const std::map<std::string, std::size_t>& caps, std::uint64_t seed) {
  for (auto& [label, list] : items) {
    const auto cap = caps.find(label);
    if (cap == caps.end() || list.size() <= cap->second) continue;
    std::vector<T> kept;
    kept.reserve(cap->second);
    for (std::size_t i : sample_indices(list.size(), cap->second, seed, label))
      kept.push_back(std::move(list[i]));
    list = std::move(kept);
  }
}

// --- PNG I/O -------------------------------------------------------------

RgbImage read_png_rgb(const std::filesystem::path& path);
Mask read_png_mask(const std::filesystem::path& path);
void write_png_rgb(const RgbImage& img, const std::filesystem::path& path);

// --- corpus tiling -------------------------------------------------------

enum class ColorScope { kTile, kImage, kNone };

struct TilingOptions {
  TileSpec spec;
  double minkowski_p = 6.0;
  ColorScope color_scope = ColorScope::kTile;
  ClassCaps caps;
  unsigned threads = 1;
};

struct TilingReport {
  std::size_t images_in = 0;
  std::size_t images_used = 0;
  std::size_t images_without_tiles = 0;
  std::size_t tiles_written = 0;
  std::size_t color_warnings = 0;
  std::map<std::string, std::size_t> tiles_per_class;
};

/// Reads an ingestion manifest (image_id,diagnosis,image_path,mask_path),
/// caps images per class, tiles, color-corrects, caps tiles per class and
/// writes <out_dir>/<image_id>_<x>_<y>.png plus <out_dir>/tiles.csv
/// (tile_id,image_id,diagnosis,x,y,path) ordered by (image_id, y, x).
/// Relative image paths resolve against the manifest's directory.
TilingReport tile_corpus(const std::filesystem::path& manifest,
                         const std::filesystem::path& out_dir, const TilingOptions& opts);

}  // namespace patlas
