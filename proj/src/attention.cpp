#include "sarseg/attention.hpp"

#include <cmath>
#include <stdexcept>

#include "sarseg/rng.hpp"

namespace sarseg {

Adapter::Adapter(Level level, Tensor projection, Vector bias)
    : level_(level), projection_(std::move(projection)), bias_(std::move(bias)) {
  if (projection_.rank() != 2)
    throw std::invalid_argument("adapter projection must be rank-2");
  if (bias_.size() != projection_.rows())
    throw std::invalid_argument("adapter bias dim must equal output dim");
}

Adapter Adapter::seeded(Level level, std::size_t out_dim, std::size_t in_dim,
                        std::uint64_t seed) {
  if (in_dim > out_dim)
    throw std::invalid_argument("adapter requires out_dim >= in_dim");
  Rand rng(seed);
  // Gram-Schmidt over in_dim random columns of length out_dim
  std::vector<Vector> cols(in_dim, Vector(out_dim));
  for (std::size_t c = 0; c < in_dim; ++c) {
    for (;;) {
      for (std::size_t r = 0; r < out_dim; ++r) cols[c][r] = rng.uniform(-1.0, 1.0);
      for (std::size_t p = 0; p < c; ++p) {
        double dot = 0.0;
        for (std::size_t r = 0; r < out_dim; ++r) dot += cols[c][r] * cols[p][r];
        for (std::size_t r = 0; r < out_dim; ++r) cols[c][r] -= dot * cols[p][r];
      }
      double norm = 0.0;
      for (double v : cols[c]) norm += v * v;
      norm = std::sqrt(norm);
      if (norm > 1e-6) {
        for (double& v : cols[c]) v /= norm;
        break;
      }
    }
  }
  Tensor proj({out_dim, in_dim});
  for (std::size_t r = 0; r < out_dim; ++r)
    for (std::size_t c = 0; c < in_dim; ++c) proj.at(r, c) = cols[c][r];
  return Adapter(level, std::move(proj), Vector(out_dim, 0.0));
}

Tensor adapt(const Adapter& adapter, const Tensor& f) {
  if (f.rank() != 3) throw std::invalid_argument("adapt: rank-3 feature required");
  const Tensor& proj = adapter.projection();
  const std::size_t d = proj.rows(), c = proj.cols();
  if (f.channels() != c)
    throw std::invalid_argument("adapt: feature has " +
                                std::to_string(f.channels()) +
                                " channels, adapter expects " + std::to_string(c));
  const std::size_t h = f.height(), w = f.width(), plane = h * w;
  Tensor out({d, h, w});
  for (std::size_t r = 0; r < d; ++r) {
    double* op = out.values().data() + r * plane;
    const double b = adapter.bias()[r];
    for (std::size_t i = 0; i < plane; ++i) op[i] = b;
    for (std::size_t k = 0; k < c; ++k) {
      const double wgt = proj.at(r, k);
      const double* fp = f.values().data() + k * plane;
      for (std::size_t i = 0; i < plane; ++i) op[i] += wgt * fp[i];
    }
  }
  return out;
}

Tensor attend_level(const Tensor& adapted, const RetrievedSet& retrieved,
                    const PromptEmbedding& prompt) {
  if (adapted.rank() != 3)
    throw std::invalid_argument("attend_level: rank-3 feature required");
  if (retrieved.empty() && prompt.empty()) return adapted;  // cold start

  const std::size_t d = adapted.channels(), h = adapted.height(),
                    w = adapted.width(), plane = h * w;

  std::size_t m = prompt.count();
  for (const MemoryEntry* e : retrieved.entries) {
    if (e->value.channels() != d)
      throw std::invalid_argument("attend_level: entry channel dim mismatch");
    m += e->value.height() * e->value.width();
  }
  if (!prompt.empty() && prompt.tokens.cols() != d)
    throw std::invalid_argument("attend_level: prompt token dim mismatch");

  // memory tokens first (retrieval order), then prompt tokens
  Tensor kv({m, d});
  std::size_t row = 0;
  for (const MemoryEntry* e : retrieved.entries) {
    const std::size_t ep = e->value.height() * e->value.width();
    for (std::size_t i = 0; i < ep; ++i, ++row)
      for (std::size_t k = 0; k < d; ++k)
        kv.at(row, k) = e->value.values()[k * ep + i];
  }
  for (std::size_t i = 0; i < prompt.count(); ++i, ++row)
    for (std::size_t k = 0; k < d; ++k) kv.at(row, k) = prompt.tokens.at(i, k);

  Tensor queries({plane, d});
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t k = 0; k < d; ++k)
      queries.at(i, k) = adapted.values()[k * plane + i];

  const Tensor ctx = scaled_dot_attention(queries, kv, kv);

  Tensor out = adapted;
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t k = 0; k < d; ++k)
      out.values()[k * plane + i] += ctx.at(i, k);
  return out;
}

double response_score(const Tensor& f_tilde) { return mean_abs(f_tilde); }

namespace {

FusionResult fuse_impl(const Tensor& f_tex, const Tensor& f_str,
                       const Tensor& f_sem, bool adaptive) {
  if (f_tex.rank() != 3 || f_str.rank() != 3 || f_sem.rank() != 3)
    throw std::invalid_argument("fuse: rank-3 inputs required");
  if (f_str.channels() != f_tex.channels() || f_sem.channels() != f_tex.channels())
    throw std::invalid_argument("fuse: channel dims must agree");

  const std::size_t h = f_tex.height(), w = f_tex.width();
  const Tensor str_up = bilinear_resize(f_str, h, w);
  const Tensor sem_up = bilinear_resize(f_sem, h, w);

  FusionResult result;
  result.response = {mean_abs(f_tex), mean_abs(str_up), mean_abs(sem_up)};
  if (adaptive) {
    const Vector g = softmax(std::vector<double>{
        result.response.tex, result.response.str, result.response.sem});
    result.weights = {g[0], g[1], g[2]};
  } else {
    result.weights = FusionWeights::uniform();
  }

  result.fused = Tensor({f_tex.channels(), h, w});
  const std::size_t n = result.fused.size();
  for (std::size_t i = 0; i < n; ++i)
    result.fused[i] = result.weights.tex * f_tex[i] +
                      result.weights.str * str_up[i] +
                      result.weights.sem * sem_up[i];
  return result;
}

}  // namespace

FusionResult fuse(const Tensor& f_tex, const Tensor& f_str, const Tensor& f_sem) {
  return fuse_impl(f_tex, f_str, f_sem, true);
}

FusionResult fuse_uniform(const Tensor& f_tex, const Tensor& f_str,
                          const Tensor& f_sem) {
  return fuse_impl(f_tex, f_str, f_sem, false);
}

}  // namespace sarseg
