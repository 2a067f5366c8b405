#pragma once

#include <map>
#include <span>

#include "sarseg/memory_bank.hpp"
#include "sarseg/tensor.hpp"

namespace sarseg {

struct UpdateThresholds {
  double tau_sem = 0.15;
  double tau_str = 0.10;
  double alpha = 0.3;  // EMA update rate

  void validate() const;
};

struct UpdateDecision {
  bool update_sem = false;
  bool update_str = false;
  bool update_tex = false;  // always update_sem || update_str
  double delta_sem = 0.0;
  double delta_str = 0.0;
  bool bootstrap = false;  // gate bypassed on the first-ever commit

  bool any() const { return update_sem || update_str || update_tex; }
};

/// 1 - cos(z_t, z_mem); in [0, 2]. Zero-vector handling comes from
/// cosine_similarity (degenerate inputs give discrepancy 1).
double semantic_discrepancy(std::span<const double> z_t,
                            std::span<const double> z_mem,
                            bool* degenerate = nullptr);

/// Mean L1 distance between the gradient fields of two equal-shape maps,
/// normalized by the spatial pixel count H*W only (channel and dx/dy planes
/// are summed).
double structural_discrepancy(const Tensor& f_t, const Tensor& f_mem);

/// Strict-inequality threshold gate; the texture flag follows the others.
UpdateDecision decide(double delta_sem, double delta_str,
                      const UpdateThresholds& thresholds);

/// Applies a decision to the bank. For each flagged level: the matching
/// prototype is EMA-blended toward the new content (copied exactly on the
/// first-ever commit), the group's anchor entry (index 0, when present and
/// shape-compatible) is EMA-merged with the new entry, and the new entry is
/// inserted with FIFO eviction. alpha == 0 leaves prototypes and anchors
/// bit-unchanged; alpha == 1 copies exactly. Unflagged levels are untouched.
void commit(MemoryBank& bank, const UpdateDecision& decision,
            std::map<Level, MemoryEntry> new_entries, const Vector& z_t,
            const Tensor& f_str_t, double alpha);

}  // namespace sarseg
