#include "sarseg/update_policy.hpp"

#include <cmath>
#include <stdexcept>

namespace sarseg {

void UpdateThresholds::validate() const {
  if (!(tau_sem >= 0.0) || !(tau_str >= 0.0))
    throw std::invalid_argument("thresholds must be nonnegative");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("alpha must lie in [0, 1]");
}

double semantic_discrepancy(std::span<const double> z_t,
                            std::span<const double> z_mem, bool* degenerate) {
  return 1.0 - cosine_similarity(z_t, z_mem, degenerate);
}

double structural_discrepancy(const Tensor& f_t, const Tensor& f_mem) {
  if (!f_t.same_shape(f_mem))
    throw std::invalid_argument("structural_discrepancy: shape mismatch");
  const Tensor gt = grad_field(f_t);
  const Tensor gm = grad_field(f_mem);
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) sum += std::abs(gt[i] - gm[i]);
  return sum / static_cast<double>(f_t.height() * f_t.width());
}

UpdateDecision decide(double delta_sem, double delta_str,
                      const UpdateThresholds& thresholds) {
  if (!std::isfinite(delta_sem) || !std::isfinite(delta_str))
    throw std::invalid_argument("decide: non-finite discrepancy");
  UpdateDecision d;
  d.delta_sem = delta_sem;
  d.delta_str = delta_str;
  d.update_sem = delta_sem > thresholds.tau_sem;
  d.update_str = delta_str > thresholds.tau_str;
  d.update_tex = d.update_sem || d.update_str;
  return d;
}

namespace {

// new_state <- (1-alpha)*old + alpha*incoming, with exact endpoints
void ema_span(std::span<double> state, std::span<const double> incoming,
              double alpha) {
  if (alpha == 0.0) return;
  if (alpha == 1.0) {
    std::copy(incoming.begin(), incoming.end(), state.begin());
    return;
  }
  const double keep = 1.0 - alpha;
  for (std::size_t i = 0; i < state.size(); ++i)
    state[i] = keep * state[i] + alpha * incoming[i];
}

}  // namespace

void commit(MemoryBank& bank, const UpdateDecision& decision,
            std::map<Level, MemoryEntry> new_entries, const Vector& z_t,
            const Tensor& f_str_t, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("commit: alpha must lie in [0, 1]");
  if (!decision.any()) return;

  const bool first = !bank.proto_initialized;
  auto flagged = [&](Level level) {
    switch (level) {
      case Level::Tex: return decision.update_tex;
      case Level::Str: return decision.update_str;
      case Level::Sem: return decision.update_sem;
    }
    return false;
  };

  for (Level level : kLevels) {
    if (!flagged(level)) continue;
    if (new_entries.find(level) == new_entries.end())
      throw std::invalid_argument(std::string("commit: no entry supplied for "
                                              "flagged level ") +
                                  level_name(level));
  }
  if (decision.update_sem && z_t.empty())
    throw std::invalid_argument("commit: semantic update without descriptor");
  if (decision.update_str && f_str_t.empty())
    throw std::invalid_argument("commit: structural update without feature map");

  if (decision.update_sem) {
    if (first || bank.proto_sem.empty()) {
      bank.proto_sem = z_t;
    } else {
      if (bank.proto_sem.size() != z_t.size())
        throw std::invalid_argument("commit: semantic prototype dim mismatch");
      ema_span(bank.proto_sem, z_t, alpha);
    }
  }
  if (decision.update_str) {
    if (first || bank.proto_str.empty()) {
      bank.proto_str = f_str_t;
    } else {
      if (!bank.proto_str.same_shape(f_str_t))
        throw std::invalid_argument("commit: structural prototype shape mismatch");
      ema_span(bank.proto_str.values(), f_str_t.values(), alpha);
    }
  }

  for (Level level : kLevels) {
    if (!flagged(level)) continue;
    MemoryEntry entry = std::move(new_entries.at(level));
    MemoryGroup& group = bank.group(level);
    if (!group.empty()) {
      MemoryEntry& anchor = group.entry(0);
      // merged-bank anchors may hold a different level; skip incompatible shapes
      if (anchor.key.size() == entry.key.size() &&
          anchor.value.same_shape(entry.value)) {
        ema_span(anchor.key, entry.key, alpha);
        ema_span(anchor.value.values(), entry.value.values(), alpha);
      }
    }
    group.insert(std::move(entry));
  }

  bank.proto_initialized = true;
}

}  // namespace sarseg
