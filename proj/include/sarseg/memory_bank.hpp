#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "sarseg/tensor.hpp"

namespace sarseg {

enum class Level { Tex, Str, Sem };

constexpr std::array<Level, 3> kLevels{Level::Tex, Level::Str, Level::Sem};

const char* level_name(Level level);
Level level_from_name(const std::string& name);

struct MemoryEntry {
  Vector key;        // dim d, equals gap(value)
  Tensor value;      // d x h_s x w_s
  long source_step = 0;
  Level level = Level::Tex;
};

/// Ordered key-value store with FIFO eviction (smallest source_step leaves
/// first). A group normally holds one level only; a merged group (level()
/// empty) accepts entries from all levels.
class MemoryGroup {
 public:
  MemoryGroup(Level level, std::size_t capacity);
  static MemoryGroup merged(std::size_t capacity);

  std::optional<Level> level() const { return level_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<MemoryEntry>& entries() const { return entries_; }
  MemoryEntry& entry(std::size_t i) { return entries_[i]; }
  const MemoryEntry& entry(std::size_t i) const { return entries_[i]; }

  /// Appends e; when the capacity is exceeded the entry with the smallest
  /// source_step is evicted. Throws on a level mismatch.
  void insert(MemoryEntry e);

 private:
  MemoryGroup() = default;
  std::optional<Level> level_;
  std::size_t capacity_ = 0;
  std::vector<MemoryEntry> entries_;
};

struct RetrievedSet {
  Level level = Level::Tex;
  std::vector<const MemoryEntry*> entries;  // cosine-descending
  std::vector<double> similarities;

  bool empty() const { return entries.empty(); }
  std::optional<double> top_similarity() const {
    if (similarities.empty()) return std::nullopt;
    return similarities.front();
  }
};

/// Top-k entries by cosine similarity against the query key; ties broken by
/// the more recent source_step. An empty group yields an empty set.
RetrievedSet retrieve(const MemoryGroup& group, std::span<const double> query_key,
                      int k);

/// Memory encoder stand-in: the entry value is the adapted feature with its
/// first channel replaced by an even blend of the original first channel and
/// the class-1 probability resized to the feature resolution. The key is the
/// GAP of the value, so retrieval similarity reflects both feature content
/// and the prediction that produced it.
MemoryEntry make_entry(Level level, const Tensor& adapted_feature,
                       const Tensor& mask_probs, long source_step);

enum class BankMode { Multi, Merged };

/// Three level-isolated groups (or one merged group) plus the gating
/// prototypes. proto_initialized is false until the first commit.
class MemoryBank {
 public:
  MemoryBank(BankMode mode, std::size_t cap_tex, std::size_t cap_str,
             std::size_t cap_sem);

  BankMode mode() const { return mode_; }
  MemoryGroup& group(Level level);
  const MemoryGroup& group(Level level) const;

  RetrievedSet retrieve(Level level, std::span<const double> query_key, int k) const;

  Vector proto_sem;     // semantic descriptor summary
  Tensor proto_str;     // structure-level feature map summary
  bool proto_initialized = false;

  std::size_t total_entries() const;

  /// Plain-text state dump / restore for test fixtures.
  void dump(std::ostream& out) const;
  static MemoryBank restore(std::istream& in);

 private:
  BankMode mode_;
  std::vector<MemoryGroup> groups_;
};

}  // namespace sarseg
