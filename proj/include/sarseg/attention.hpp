#pragma once

#include <cstdint>
#include <utility>

#include "sarseg/encoders.hpp"
#include "sarseg/memory_bank.hpp"
#include "sarseg/tensor.hpp"

namespace sarseg {

/// Per-pixel affine map into the shared embedding space.
class Adapter {
 public:
  Adapter(Level level, Tensor projection, Vector bias);

  /// Fixed random adapter: projection columns are orthonormal (the map is an
  /// isometric embedding of the level's channel space), bias is zero.
  static Adapter seeded(Level level, std::size_t out_dim, std::size_t in_dim,
                        std::uint64_t seed);

  Level level() const { return level_; }
  const Tensor& projection() const { return projection_; }  // d x c
  const Vector& bias() const { return bias_; }

 private:
  Level level_;
  Tensor projection_;
  Vector bias_;
};

/// out[:, y, x] = projection * f[:, y, x] + bias
Tensor adapt(const Adapter& adapter, const Tensor& f);

/// Residual scale-wise memory attention. Queries are the spatial tokens of
/// `adapted`; keys and values are the flattened spatial tokens of every
/// retrieved entry value followed by the prompt tokens (which serve as their
/// own values). With no memory and no prompt the input is returned bit-equal,
/// so a cold start never perturbs features.
Tensor attend_level(const Tensor& adapted, const RetrievedSet& retrieved,
                    const PromptEmbedding& prompt);

/// Level response score: mean absolute value of the attended feature.
double response_score(const Tensor& f_tilde);

struct FusionWeights {
  double tex = 0.0, str = 0.0, sem = 0.0;

  double sum() const { return tex + str + sem; }
  static FusionWeights uniform() { return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}; }
};

struct FusionResult {
  Tensor fused;            // d x H_f x W_f at the texture-level resolution
  FusionWeights weights;   // gamma, positive, sums to 1
  FusionWeights response;  // per-level response scores on the aligned tensors
};

/// Scale-adaptive fusion: aligns all levels to the texture resolution,
/// softmax-normalizes the per-level response scores into weights, and returns
/// the weighted sum.
FusionResult fuse(const Tensor& f_tex, const Tensor& f_str, const Tensor& f_sem);

/// Fusion with fixed uniform weights (the ablation baseline); the response
/// scores are still computed for logging.
FusionResult fuse_uniform(const Tensor& f_tex, const Tensor& f_str,
                          const Tensor& f_sem);

}  // namespace sarseg
