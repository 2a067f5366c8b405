#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sarseg/tensor.hpp"

namespace sarseg {

/// Grayscale raster with intensities in [0, 1].
struct SarImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // row-major

  double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  double& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
};

/// Per-pixel class labels in {0, ..., num_classes-1}.
struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  int num_classes = 2;
  std::vector<std::uint8_t> labels;  // row-major

  std::uint8_t at(std::size_t y, std::size_t x) const { return labels[y * width + x]; }
  std::uint8_t& at(std::size_t y, std::size_t x) { return labels[y * width + x]; }
};

enum class ClickPolarity { Positive, Negative };

struct Click {
  std::size_t row = 0;
  std::size_t col = 0;
  ClickPolarity polarity = ClickPolarity::Positive;
};

struct Box {
  std::size_t row_min = 0, col_min = 0, row_max = 0, col_max = 0;
};

struct PromptSpec {
  std::vector<Click> clicks;
  std::vector<Box> boxes;

  bool empty() const { return clicks.empty() && boxes.empty(); }
  /// Throws std::invalid_argument when any coordinate falls outside an
  /// height x width raster or a box is inverted.
  void validate(std::size_t height, std::size_t width) const;
};

/// Sea-state parameters for one synthesis segment.
struct SceneRegime {
  std::string name = "calm";
  double sea_mean = 0.60;      // mean sea backscatter
  int looks = 8;               // multiplicative gamma speckle shape L
  int slick_min = 1;           // slick count range (inclusive)
  int slick_max = 3;
  double slick_depth = 0.65;   // fractional darkening inside a slick
  double eccentricity = 3.5;   // slick ellipse axis ratio
  double lookalike_prob = 0.35;
  double lookalike_depth = 0.30;
  double area_min = 0.02;      // accepted class-1 pixel fraction band
  double area_max = 0.30;
};

struct StreamSegment {
  int count = 0;
  SceneRegime regime;
};

struct StreamEntry {
  std::string image_id;
  std::string image_path;
  std::string mask_path;   // empty when no ground truth
  std::string prompt_id;   // empty when unprompted
};

/// An ordered processing list plus the synthesis schedule that produced it.
/// The order is a processing order only; nothing downstream assumes temporal
/// coherence between consecutive entries.
struct StreamSpec {
  std::uint64_t seed = 0;
  int num_classes = 2;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<StreamSegment> segments;  // empty for ingested (non-synthetic) data
  std::vector<StreamEntry> entries;
  std::string prompts_path;  // JSON-lines, relative to base_dir
  std::string base_dir;      // set on load; not serialized
};

// --- PGM P5 (maxval 255), the only raster format ---
SarImage load_pgm(const std::string& path);
void save_pgm(const SarImage& img, const std::string& path);

/// Mask bytes are raw class indices; any byte >= num_classes is rejected
/// with the offending pixel position.
LabelMap load_mask(const std::string& path, int num_classes);
void save_mask(const LabelMap& mask, const std::string& path);

/// Deterministic synthetic SAR-like scene: dark elongated slick ellipses
/// (class 1), optional look-alike patches (darkened but class 0), and
/// multiplicative L-look gamma speckle. Resamples geometry until the class-1
/// area fraction lies inside the regime band (when at least one slick is
/// requested).
std::pair<SarImage, LabelMap> synth_scene(std::uint64_t seed,
                                          const SceneRegime& regime,
                                          std::size_t height, std::size_t width);

/// Prompt derivation used by the synthesis harness: one positive click at the
/// largest slick component plus its bounding box, or a single negative click
/// at the image center when the mask has no slick.
PromptSpec derive_prompt(const LabelMap& mask);

// --- prompts: JSON-lines, one record per image ---
std::map<std::string, PromptSpec> load_prompts(const std::string& path,
                                               std::size_t height,
                                               std::size_t width);
void save_prompts(const std::map<std::string, PromptSpec>& prompts,
                  const std::string& path);

// --- stream spec: JSON config file ---
StreamSpec load_stream_spec(const std::string& path);
void save_stream_spec(const StreamSpec& spec, const std::string& path);

/// Joins base_dir and a relative path from a stream spec.
std::string resolve_path(const StreamSpec& spec, const std::string& rel);

}  // namespace sarseg
