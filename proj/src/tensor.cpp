#include "sarseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sarseg {

namespace {

std::size_t shape_count(const std::vector<std::size_t>& shape) {
  if (shape.empty()) return 0;
  std::size_t n = 1;
  for (std::size_t s : shape) {
    if (s == 0) throw std::invalid_argument("tensor shape has a zero extent");
    n *= s;
  }
  return n;
}

// a + t*(b - a): exact for t == 0 and for a == b.
inline double lerp1(double a, double b, double t) { return a + t * (b - a); }

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_count(shape_), 0.0) {
  if (shape_.size() > 3) throw std::invalid_argument("tensor rank exceeds 3");
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_.size() > 3) throw std::invalid_argument("tensor rank exceeds 3");
  if (shape_count(shape_) != data_.size())
    throw std::invalid_argument("tensor data length does not match shape");
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

std::size_t Tensor::channels() const {
  if (rank() != 3) throw std::logic_error("channels(): tensor is not rank-3");
  return shape_[0];
}
std::size_t Tensor::height() const {
  if (rank() != 3) throw std::logic_error("height(): tensor is not rank-3");
  return shape_[1];
}
std::size_t Tensor::width() const {
  if (rank() != 3) throw std::logic_error("width(): tensor is not rank-3");
  return shape_[2];
}

double& Tensor::at(std::size_t c, std::size_t y, std::size_t x) {
  return data_[(c * shape_[1] + y) * shape_[2] + x];
}
double Tensor::at(std::size_t c, std::size_t y, std::size_t x) const {
  return data_[(c * shape_[1] + y) * shape_[2] + x];
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw std::logic_error("rows(): tensor is not rank-2");
  return shape_[0];
}
std::size_t Tensor::cols() const {
  if (rank() != 2) throw std::logic_error("cols(): tensor is not rank-2");
  return shape_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
  return data_[r * shape_[1] + c];
}
double Tensor::at(std::size_t r, std::size_t c) const {
  return data_[r * shape_[1] + c];
}

bool Tensor::bit_equal(const Tensor& other) const {
  return shape_ == other.shape_ &&
         std::memcmp(data_.data(), other.data_.data(),
                     data_.size() * sizeof(double)) == 0;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Vector softmax(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("softmax of an empty vector");
  const double m = *std::max_element(v.begin(), v.end());
  Vector out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         bool* degenerate) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  if (a.empty())
    throw std::invalid_argument("cosine_similarity: empty vectors");
  if (degenerate) *degenerate = false;

  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    // cold prototypes are all-zero; gating must stay total
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  if (std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0)
    return 1.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double mean_abs(const Tensor& t) {
  if (t.empty()) throw std::invalid_argument("mean_abs of an empty tensor");
  double sum = 0.0;
  for (double v : t.values()) sum += std::abs(v);
  return sum / static_cast<double>(t.size());
}

Tensor grad_field(const Tensor& t) {
  if (t.rank() != 3) throw std::invalid_argument("grad_field: rank-3 required");
  const std::size_t c = t.channels(), h = t.height(), w = t.width();
  if (h < 2 || w < 2)
    throw std::invalid_argument("grad_field: spatial dims must be >= 2");
  Tensor out({2 * c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        out.at(2 * ch, y, x) = (x + 1 < w) ? t.at(ch, y, x + 1) - t.at(ch, y, x) : 0.0;
        out.at(2 * ch + 1, y, x) = (y + 1 < h) ? t.at(ch, y + 1, x) - t.at(ch, y, x) : 0.0;
      }
    }
  }
  return out;
}

Vector gap(const Tensor& t) {
  if (t.rank() != 3) throw std::invalid_argument("gap: rank-3 required");
  const std::size_t c = t.channels(), n = t.height() * t.width();
  Vector out(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    const double* p = t.values().data() + ch * n;
    for (std::size_t i = 0; i < n; ++i) sum += p[i];
    out[ch] = sum / static_cast<double>(n);
  }
  return out;
}

Tensor bilinear_resize(const Tensor& t, std::size_t out_h, std::size_t out_w) {
  if (t.rank() != 3)
    throw std::invalid_argument("bilinear_resize: rank-3 required");
  if (out_h == 0 || out_w == 0)
    throw std::invalid_argument("bilinear_resize: output dims must be >= 1");
  const std::size_t c = t.channels(), in_h = t.height(), in_w = t.width();
  if (out_h == in_h && out_w == in_w) return t;

  const double sy = (out_h > 1 && in_h > 1)
                        ? static_cast<double>(in_h - 1) / static_cast<double>(out_h - 1)
                        : 0.0;
  const double sx = (out_w > 1 && in_w > 1)
                        ? static_cast<double>(in_w - 1) / static_cast<double>(out_w - 1)
                        : 0.0;

  Tensor out({c, out_h, out_w});
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = sy * static_cast<double>(y);
    const std::size_t y0 = std::min(static_cast<std::size_t>(fy), in_h - 1);
    const std::size_t y1 = std::min(y0 + 1, in_h - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = sx * static_cast<double>(x);
      const std::size_t x0 = std::min(static_cast<std::size_t>(fx), in_w - 1);
      const std::size_t x1 = std::min(x0 + 1, in_w - 1);
      const double tx = fx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double top = lerp1(t.at(ch, y0, x0), t.at(ch, y0, x1), tx);
        const double bot = lerp1(t.at(ch, y1, x0), t.at(ch, y1, x1), tx);
        out.at(ch, y, x) = lerp1(top, bot, ty);
      }
    }
  }
  return out;
}

Tensor scaled_dot_attention(const Tensor& queries, const Tensor& keys,
                            const Tensor& values) {
  if (queries.rank() != 2 || keys.rank() != 2 || values.rank() != 2)
    throw std::invalid_argument("scaled_dot_attention: rank-2 inputs required");
  const std::size_t n = queries.rows(), d = queries.cols(), m = keys.rows();
  if (m == 0)
    throw std::invalid_argument("scaled_dot_attention: empty key/value set");
  if (keys.cols() != d || values.cols() != d || values.rows() != m)
    throw std::invalid_argument("scaled_dot_attention: dimension mismatch");

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor out({n, d});
  std::vector<double> scores(m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* qi = queries.values().data() + i * d;
    double smax = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      const double* kj = keys.values().data() + j * d;
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += qi[k] * kj[k];
      scores[j] = s * scale;
      smax = std::max(smax, scores[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      scores[j] = std::exp(scores[j] - smax);
      sum += scores[j];
    }
    double* oi = out.values().data() + i * d;
    for (std::size_t j = 0; j < m; ++j) {
      const double wj = scores[j] / sum;
      const double* vj = values.values().data() + j * d;
      for (std::size_t k = 0; k < d; ++k) oi[k] += wj * vj[k];
    }
  }
  return out;
}

}  // namespace sarseg
