#include "sarseg/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sarseg {

namespace {

// block-mean downsample by an integer factor; trailing partial blocks dropped
Tensor block_mean(const SarImage& img, std::size_t factor) {
  const std::size_t oh = img.height / factor, ow = img.width / factor;
  Tensor out({1, oh, ow});
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double sum = 0.0;
      for (std::size_t dy = 0; dy < factor; ++dy)
        for (std::size_t dx = 0; dx < factor; ++dx)
          sum += img.at(y * factor + dy, x * factor + dx);
      out.at(0, y, x) = sum * inv;
    }
  return out;
}

// population variance via the pairwise form; exactly zero for constant input
double pairwise_variance(const double* v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = v[i] - v[j];
      acc += d * d;
    }
  return acc / (2.0 * static_cast<double>(n) * static_cast<double>(n));
}

Tensor texture_level(const SarImage& img) {
  const Tensor down = block_mean(img, 2);
  const std::size_t h = down.height(), w = down.width();
  Tensor out({3, h, w});
  std::vector<double> window;
  window.reserve(9);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      out.at(0, y, x) = down.at(0, y, x);
      window.clear();
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const long yy = static_cast<long>(y) + dy, xx = static_cast<long>(x) + dx;
          if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w))
            continue;
          window.push_back(down.at(0, static_cast<std::size_t>(yy),
                                   static_cast<std::size_t>(xx)));
        }
      double sum = 0.0;
      for (double v : window) sum += v;
      out.at(1, y, x) = sum / static_cast<double>(window.size());
      out.at(2, y, x) = std::sqrt(pairwise_variance(window.data(), window.size()));
    }
  return out;
}

Tensor structure_level(const SarImage& img) {
  const Tensor down = block_mean(img, 4);
  const std::size_t h = down.height(), w = down.width();
  Tensor out({3, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double dx = (x + 1 < w) ? down.at(0, y, x + 1) - down.at(0, y, x) : 0.0;
      const double dy = (y + 1 < h) ? down.at(0, y + 1, x) - down.at(0, y, x) : 0.0;
      out.at(0, y, x) = std::abs(dx);
      out.at(1, y, x) = std::abs(dy);
      out.at(2, y, x) = std::sqrt(dx * dx + dy * dy);
    }
  return out;
}

Tensor semantic_level(const SarImage& img) {
  const std::size_t oh = img.height / 8, ow = img.width / 8;
  double global_sum = 0.0;
  for (double p : img.pixels) global_sum += p;
  const double global_mean = global_sum / static_cast<double>(img.pixels.size());

  Tensor out({3, oh, ow});
  std::vector<double> block(64);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      std::size_t dark = 0;
      double sum = 0.0;
      for (std::size_t dy = 0; dy < 8; ++dy)
        for (std::size_t dx = 0; dx < 8; ++dx) {
          const double v = img.at(y * 8 + dy, x * 8 + dx);
          block[dy * 8 + dx] = v;
          sum += v;
          if (v < global_mean) ++dark;
        }
      out.at(0, y, x) = sum / 64.0;
      out.at(1, y, x) = pairwise_variance(block.data(), block.size());
      out.at(2, y, x) = static_cast<double>(dark) / 64.0;
    }
  return out;
}

}  // namespace

FeaturePyramid encode_image(const SarImage& img) {
  if (img.height < 8 || img.width < 8)
    throw std::invalid_argument("encode_image: image must be at least 8x8");
  if (img.pixels.size() != img.height * img.width)
    throw std::invalid_argument("encode_image: pixel buffer size mismatch");
  FeaturePyramid pyr;
  pyr.tex = texture_level(img);
  pyr.str = structure_level(img);
  pyr.sem = semantic_level(img);
  return pyr;
}

namespace {

// sin/cos pairs at geometric frequencies of a normalized coordinate
void positional_block(double u, double* out, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double angle =
        u * 3.14159265358979323846 * std::pow(2.0, static_cast<double>(j / 2));
    out[j] = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
  }
}

}  // namespace

PromptEmbedding encode_prompt(const PromptSpec& prompt, std::size_t height,
                              std::size_t width, std::size_t dim) {
  if (dim < 6) throw std::invalid_argument("encode_prompt: dim must be >= 6");
  prompt.validate(height, width);

  struct Raw {
    double row, col;
    TokenKind kind;
  };
  std::vector<Raw> raws;
  for (const Click& c : prompt.clicks)
    raws.push_back({static_cast<double>(c.row), static_cast<double>(c.col),
                    c.polarity == ClickPolarity::Positive
                        ? TokenKind::PositiveClick
                        : TokenKind::NegativeClick});
  for (const Box& b : prompt.boxes) {
    raws.push_back({static_cast<double>(b.row_min),
                    static_cast<double>(b.col_min), TokenKind::BoxCorner});
    raws.push_back({static_cast<double>(b.row_max),
                    static_cast<double>(b.col_max), TokenKind::BoxCorner});
  }

  PromptEmbedding emb;
  if (raws.empty()) return emb;

  const std::size_t pe = dim - 4;
  const std::size_t row_dims = (pe + 1) / 2, col_dims = pe - row_dims;
  emb.tokens = Tensor({raws.size(), dim});
  for (std::size_t i = 0; i < raws.size(); ++i) {
    double* tok = emb.tokens.values().data() + i * dim;
    positional_block(raws[i].row / static_cast<double>(height), tok, row_dims);
    positional_block(raws[i].col / static_cast<double>(width), tok + row_dims,
                     col_dims);
    tok[pe + static_cast<std::size_t>(raws[i].kind)] = 1.0;
    emb.kinds.push_back(raws[i].kind);
  }
  return emb;
}

}  // namespace sarseg
