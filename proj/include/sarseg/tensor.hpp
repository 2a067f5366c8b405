#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sarseg {

/// Dense row-major tensor of 64-bit floats, rank 1..3.
/// Rank-3 layout is channels x height x width; rank-2 is rows x cols.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor full(std::vector<std::size_t> shape, double value);

  std::size_t rank() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // rank-3 accessors
  std::size_t channels() const;
  std::size_t height() const;
  std::size_t width() const;
  double& at(std::size_t c, std::size_t y, std::size_t x);
  double at(std::size_t c, std::size_t y, std::size_t x) const;

  // rank-2 accessors
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool bit_equal(const Tensor& other) const;
  bool all_finite() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

using Vector = std::vector<double>;

/// Numerically stable softmax (max-subtraction). Throws on an empty input.
Vector softmax(std::span<const double> v);

/// Cosine similarity clamped to [-1, 1]. A zero-norm operand yields 0 and,
/// when `degenerate` is non-null, sets *degenerate. Bitwise-identical inputs
/// return exactly 1.0.
double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         bool* degenerate = nullptr);

/// Mean of absolute values (L1 norm divided by element count).
double mean_abs(const Tensor& t);

/// Forward-difference gradient field of a rank-3 tensor. Input channel c maps
/// to output channels 2c (x-difference) and 2c+1 (y-difference); the last
/// column / row of each plane is zero-padded. Requires height, width >= 2.
Tensor grad_field(const Tensor& t);

/// Global average pooling: per-channel spatial mean of a rank-3 tensor.
Vector gap(const Tensor& t);

/// Bilinear resize with the align-corners convention (corner pixels map
/// exactly). Identity (bit-equal copy) when the output dims equal the input.
Tensor bilinear_resize(const Tensor& t, std::size_t out_h, std::size_t out_w);

/// Single-head scaled dot-product attention over rank-2 token matrices.
/// Row i of the result is sum_j softmax_j(q_i . k_j / sqrt(d)) v_j.
/// Throws when the key/value set is empty.
Tensor scaled_dot_attention(const Tensor& queries, const Tensor& keys,
                            const Tensor& values);

}  // namespace sarseg
