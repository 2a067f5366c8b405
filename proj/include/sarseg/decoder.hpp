#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sarseg/scene.hpp"
#include "sarseg/tensor.hpp"

namespace sarseg {

/// Per-pixel affine mask head: logits[:, y, x] = weights * f[:, y, x] + bias.
struct DecoderParams {
  Tensor weights;  // C x d
  Vector bias;     // C

  std::size_t num_classes() const { return weights.rows(); }
  std::size_t feature_dim() const { return weights.cols(); }

  static DecoderParams zeros(std::size_t num_classes, std::size_t dim);
  static DecoderParams seeded(std::size_t num_classes, std::size_t dim,
                              std::uint64_t seed, double scale = 0.1);

  void save(const std::string& path) const;  // plain textual matrix dump
  static DecoderParams load(const std::string& path);
};

struct Prediction {
  Tensor probs;   // C x H x W, per-pixel simplex
  LabelMap hard;  // argmax, ties toward the lower class index
};

/// Affine head at the feature resolution, logits bilinearly resized to
/// H x W, per-pixel softmax, then argmax.
Prediction decode(const Tensor& fused, const DecoderParams& params,
                  std::size_t out_h, std::size_t out_w);

/// Weighted binary cross-entropy (C == 2 only): the mean over pixels of
/// -w[y(p)] * log(probs[y(p), p]) with probabilities clamped to
/// [1e-12, 1-1e-12].
double weighted_bce(const Prediction& pred, const LabelMap& truth,
                    std::span<const double> class_weights);

struct DecoderGradient {
  Tensor weights;  // C x d
  Vector bias;     // C
};

/// Closed-form gradient of decode->weighted_bce with respect to the affine
/// head. Per output pixel: (probs - onehot(y)) * w[y], outer-producted with
/// the (bilinearly upsampled) feature vector at that pixel, averaged over
/// pixels. Resizing and the affine map commute, so this matches central
/// finite differences of the full forward path.
DecoderGradient bce_gradient(const Tensor& fused, const LabelMap& truth,
                             const DecoderParams& params,
                             std::span<const double> class_weights);

/// Full-batch gradient descent on the weighted BCE over (feature, truth)
/// pairs. Returns the updated parameters after `steps` updates.
DecoderParams train_decoder(
    const std::vector<std::pair<Tensor, LabelMap>>& batch, DecoderParams params,
    std::span<const double> class_weights, double learning_rate, int steps);

/// Mean weighted BCE of the current params over a batch (training diagnostic).
double batch_loss(const std::vector<std::pair<Tensor, LabelMap>>& batch,
                  const DecoderParams& params,
                  std::span<const double> class_weights);

}  // namespace sarseg
