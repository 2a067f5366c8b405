#pragma once

#include <cstddef>
#include <vector>

#include "sarseg/scene.hpp"
#include "sarseg/tensor.hpp"

namespace sarseg {

/// Three-level feature hierarchy: texture at half resolution, structure at
/// quarter, semantic at eighth. Each level carries 3 channels.
struct FeaturePyramid {
  Tensor tex;  // {downsampled intensity, local 3x3 mean, local 3x3 std}
  Tensor str;  // {|dx|, |dy|, gradient magnitude} of the quarter-res image
  Tensor sem;  // {8x8 block mean, block variance, block dark fraction}
};

enum class TokenKind { PositiveClick, NegativeClick, BoxCorner };

struct PromptEmbedding {
  Tensor tokens;  // k x d, k == 0 when unprompted (empty tensor)
  std::vector<TokenKind> kinds;

  std::size_t count() const { return kinds.size(); }
  bool empty() const { return kinds.empty(); }
};

/// Deterministic hand-designed stand-in for a hierarchical image encoder.
/// Requires height, width >= 8.
FeaturePyramid encode_image(const SarImage& img);

/// Each click yields one token, each box two corner tokens. A token is the
/// sinusoidal encoding of its normalized (row/H, col/W) position over d-4
/// dims, concatenated with a 4-dim one-hot kind code. Requires d >= 6.
PromptEmbedding encode_prompt(const PromptSpec& prompt, std::size_t height,
                              std::size_t width, std::size_t dim);

}  // namespace sarseg
