#include "sarseg/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "sarseg/rng.hpp"

namespace sarseg {

namespace {

constexpr double kProbFloor = 1e-12;

void check_binary(std::span<const double> class_weights, std::size_t channels) {
  if (channels != 2)
    throw std::invalid_argument("weighted BCE supports exactly 2 classes");
  if (class_weights.size() != 2)
    throw std::invalid_argument("class_weights must have 2 entries");
  for (double w : class_weights)
    if (!(w > 0.0)) throw std::invalid_argument("class weights must be positive");
}

Tensor affine_logits(const Tensor& fused, const DecoderParams& params) {
  if (fused.rank() != 3)
    throw std::invalid_argument("decode: rank-3 feature required");
  const std::size_t d = params.feature_dim(), c = params.num_classes();
  if (fused.channels() != d)
    throw std::invalid_argument("decode: feature dim " +
                                std::to_string(fused.channels()) +
                                " does not match decoder dim " + std::to_string(d));
  const std::size_t plane = fused.height() * fused.width();
  Tensor logits({c, fused.height(), fused.width()});
  for (std::size_t cls = 0; cls < c; ++cls) {
    double* lp = logits.values().data() + cls * plane;
    const double b = params.bias[cls];
    for (std::size_t i = 0; i < plane; ++i) lp[i] = b;
    for (std::size_t k = 0; k < d; ++k) {
      const double wgt = params.weights.at(cls, k);
      const double* fp = fused.values().data() + k * plane;
      for (std::size_t i = 0; i < plane; ++i) lp[i] += wgt * fp[i];
    }
  }
  return logits;
}

}  // namespace

DecoderParams DecoderParams::zeros(std::size_t num_classes, std::size_t dim) {
  return {Tensor({num_classes, dim}), Vector(num_classes, 0.0)};
}

DecoderParams DecoderParams::seeded(std::size_t num_classes, std::size_t dim,
                                    std::uint64_t seed, double scale) {
  Rand rng(seed);
  DecoderParams p = zeros(num_classes, dim);
  for (double& v : p.weights.values()) v = rng.uniform(-scale, scale);
  for (double& v : p.bias) v = rng.uniform(-scale, scale);
  return p;
}

void DecoderParams::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "sarseg-decoder 1\n"
      << num_classes() << " " << feature_dim() << "\n";
  char buf[32];
  for (std::size_t c = 0; c < num_classes(); ++c) {
    for (std::size_t k = 0; k < feature_dim(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", weights.at(c, k));
      out << buf << (k + 1 < feature_dim() ? " " : "\n");
    }
  }
  for (std::size_t c = 0; c < num_classes(); ++c) {
    std::snprintf(buf, sizeof(buf), "%.17g", bias[c]);
    out << buf << (c + 1 < num_classes() ? " " : "\n");
  }
}

DecoderParams DecoderParams::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::string magic;
  int version = 0;
  std::size_t c = 0, d = 0;
  if (!(in >> magic >> version >> c >> d) || magic != "sarseg-decoder" ||
      version != 1)
    throw std::runtime_error(path + ": bad decoder params header");
  DecoderParams p = zeros(c, d);
  for (double& v : p.weights.values())
    if (!(in >> v)) throw std::runtime_error(path + ": truncated weights");
  for (double& v : p.bias)
    if (!(in >> v)) throw std::runtime_error(path + ": truncated bias");
  return p;
}

Prediction decode(const Tensor& fused, const DecoderParams& params,
                  std::size_t out_h, std::size_t out_w) {
  const Tensor logits = bilinear_resize(affine_logits(fused, params), out_h, out_w);
  const std::size_t c = params.num_classes(), plane = out_h * out_w;

  Prediction pred;
  pred.probs = Tensor({c, out_h, out_w});
  pred.hard.height = out_h;
  pred.hard.width = out_w;
  pred.hard.num_classes = static_cast<int>(c);
  pred.hard.labels.assign(plane, 0);

  std::vector<double> pixel(c);
  for (std::size_t i = 0; i < plane; ++i) {
    double m = logits.values()[i];
    for (std::size_t cls = 1; cls < c; ++cls)
      m = std::max(m, logits.values()[cls * plane + i]);
    double sum = 0.0;
    for (std::size_t cls = 0; cls < c; ++cls) {
      pixel[cls] = std::exp(logits.values()[cls * plane + i] - m);
      sum += pixel[cls];
    }
    std::size_t best = 0;
    for (std::size_t cls = 0; cls < c; ++cls) {
      const double p = pixel[cls] / sum;
      pred.probs.values()[cls * plane + i] = p;
      if (p > pred.probs.values()[best * plane + i]) best = cls;
    }
    pred.hard.labels[i] = static_cast<std::uint8_t>(best);
  }
  return pred;
}

double weighted_bce(const Prediction& pred, const LabelMap& truth,
                    std::span<const double> class_weights) {
  check_binary(class_weights, pred.probs.channels());
  if (pred.probs.height() != truth.height || pred.probs.width() != truth.width)
    throw std::invalid_argument("weighted_bce: prediction/truth dims differ");
  const std::size_t plane = truth.height * truth.width;
  double loss = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    const std::uint8_t y = truth.labels[i];
    const double p = std::clamp(pred.probs.values()[y * plane + i], kProbFloor,
                                1.0 - kProbFloor);
    loss -= class_weights[y] * std::log(p);
  }
  return loss / static_cast<double>(plane);
}

DecoderGradient bce_gradient(const Tensor& fused, const LabelMap& truth,
                             const DecoderParams& params,
                             std::span<const double> class_weights) {
  check_binary(class_weights, params.num_classes());
  const std::size_t h = truth.height, w = truth.width, plane = h * w;
  const std::size_t d = params.feature_dim();

  // the affine map and bilinear resize commute, so the gradient can be taken
  // against the upsampled feature directly
  const Tensor up = bilinear_resize(fused, h, w);
  const Tensor logits = affine_logits(up, params);

  DecoderGradient grad{Tensor({2, d}), Vector(2, 0.0)};
  const double inv = 1.0 / static_cast<double>(plane);
  for (std::size_t i = 0; i < plane; ++i) {
    const double l0 = logits.values()[i], l1 = logits.values()[plane + i];
    const double m = std::max(l0, l1);
    const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
    const double p0 = e0 / (e0 + e1);
    const std::uint8_t y = truth.labels[i];
    const double wy = class_weights[y] * inv;
    const double g0 = wy * (p0 - (y == 0 ? 1.0 : 0.0));
    const double g1 = wy * ((1.0 - p0) - (y == 1 ? 1.0 : 0.0));
    grad.bias[0] += g0;
    grad.bias[1] += g1;
    for (std::size_t k = 0; k < d; ++k) {
      const double f = up.values()[k * plane + i];
      grad.weights.at(0, k) += g0 * f;
      grad.weights.at(1, k) += g1 * f;
    }
  }
  return grad;
}

DecoderParams train_decoder(
    const std::vector<std::pair<Tensor, LabelMap>>& batch, DecoderParams params,
    std::span<const double> class_weights, double learning_rate, int steps) {
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("train_decoder: learning rate must be > 0");
  if (steps <= 0 || batch.empty()) return params;
  check_binary(class_weights, params.num_classes());

  // resize once; the gradient only needs features at the truth resolution
  std::vector<std::pair<Tensor, const LabelMap*>> upsampled;
  upsampled.reserve(batch.size());
  for (const auto& [feature, truth] : batch)
    upsampled.emplace_back(bilinear_resize(feature, truth.height, truth.width),
                           &truth);

  const std::size_t d = params.feature_dim();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (int step = 0; step < steps; ++step) {
    DecoderGradient total{Tensor({2, d}), Vector(2, 0.0)};
    for (const auto& [feature, truth] : upsampled) {
      const DecoderGradient g = bce_gradient(feature, *truth, params, class_weights);
      for (std::size_t i = 0; i < total.weights.size(); ++i)
        total.weights[i] += g.weights[i];
      total.bias[0] += g.bias[0];
      total.bias[1] += g.bias[1];
    }
    for (std::size_t i = 0; i < params.weights.size(); ++i)
      params.weights[i] -= learning_rate * total.weights[i] * inv_batch;
    params.bias[0] -= learning_rate * total.bias[0] * inv_batch;
    params.bias[1] -= learning_rate * total.bias[1] * inv_batch;
  }
  return params;
}

double batch_loss(const std::vector<std::pair<Tensor, LabelMap>>& batch,
                  const DecoderParams& params,
                  std::span<const double> class_weights) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [feature, truth] : batch) {
    const Prediction pred = decode(feature, params, truth.height, truth.width);
    total += weighted_bce(pred, truth, class_weights);
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace sarseg
