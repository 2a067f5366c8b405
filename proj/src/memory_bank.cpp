#include "sarseg/memory_bank.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace sarseg {

const char* level_name(Level level) {
  switch (level) {
    case Level::Tex: return "tex";
    case Level::Str: return "str";
    case Level::Sem: return "sem";
  }
  return "?";
}

Level level_from_name(const std::string& name) {
  if (name == "tex") return Level::Tex;
  if (name == "str") return Level::Str;
  if (name == "sem") return Level::Sem;
  throw std::invalid_argument("unknown memory level '" + name + "'");
}

MemoryGroup::MemoryGroup(Level level, std::size_t capacity)
    : level_(level), capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("group capacity must be >= 1");
}

MemoryGroup MemoryGroup::merged(std::size_t capacity) {
  if (capacity == 0) throw std::invalid_argument("group capacity must be >= 1");
  MemoryGroup g;
  g.capacity_ = capacity;
  return g;
}

void MemoryGroup::insert(MemoryEntry e) {
  if (level_ && e.level != *level_)
    throw std::invalid_argument(std::string("entry level ") +
                                level_name(e.level) +
                                " does not match group level " +
                                level_name(*level_));
  entries_.push_back(std::move(e));
  if (entries_.size() > capacity_) {
    auto oldest = std::min_element(
        entries_.begin(), entries_.end(),
        [](const MemoryEntry& a, const MemoryEntry& b) {
          return a.source_step < b.source_step;
        });
    entries_.erase(oldest);
  }
}

RetrievedSet retrieve(const MemoryGroup& group, std::span<const double> query_key,
                      int k) {
  if (k < 1) throw std::invalid_argument("retrieve: k must be >= 1");
  RetrievedSet out;
  if (group.level()) out.level = *group.level();
  if (group.empty()) return out;

  struct Scored {
    double sim;
    const MemoryEntry* entry;
  };
  std::vector<Scored> scored;
  scored.reserve(group.size());
  for (const MemoryEntry& e : group.entries())
    scored.push_back({cosine_similarity(query_key, e.key), &e});
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) {
                     if (a.sim != b.sim) return a.sim > b.sim;
                     return a.entry->source_step > b.entry->source_step;
                   });
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                 scored.size());
  for (std::size_t i = 0; i < take; ++i) {
    out.entries.push_back(scored[i].entry);
    out.similarities.push_back(scored[i].sim);
  }
  return out;
}

MemoryEntry make_entry(Level level, const Tensor& adapted_feature,
                       const Tensor& mask_probs, long source_step) {
  if (adapted_feature.rank() != 3 || mask_probs.rank() != 3)
    throw std::invalid_argument("make_entry: rank-3 inputs required");
  const std::size_t h = adapted_feature.height(), w = adapted_feature.width();

  const std::size_t mh = mask_probs.height(), mw = mask_probs.width();
  Tensor class1({1, mh, mw});
  const std::size_t plane = mh * mw;
  const std::size_t cls = mask_probs.channels() > 1 ? 1 : 0;
  std::copy_n(mask_probs.values().data() + cls * plane, plane,
              class1.values().data());
  const Tensor prior = bilinear_resize(class1, h, w);

  MemoryEntry e;
  e.level = level;
  e.source_step = source_step;
  e.value = adapted_feature;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      e.value.at(0, y, x) = 0.5 * adapted_feature.at(0, y, x) + 0.5 * prior.at(0, y, x);
  e.key = gap(e.value);
  return e;
}

MemoryBank::MemoryBank(BankMode mode, std::size_t cap_tex, std::size_t cap_str,
                       std::size_t cap_sem)
    : mode_(mode) {
  if (mode == BankMode::Multi) {
    groups_.emplace_back(MemoryGroup(Level::Tex, cap_tex));
    groups_.emplace_back(MemoryGroup(Level::Str, cap_str));
    groups_.emplace_back(MemoryGroup(Level::Sem, cap_sem));
  } else {
    groups_.emplace_back(MemoryGroup::merged(cap_tex + cap_str + cap_sem));
  }
}

MemoryGroup& MemoryBank::group(Level level) {
  return mode_ == BankMode::Multi ? groups_[static_cast<std::size_t>(level)]
                                  : groups_[0];
}

const MemoryGroup& MemoryBank::group(Level level) const {
  return mode_ == BankMode::Multi ? groups_[static_cast<std::size_t>(level)]
                                  : groups_[0];
}

RetrievedSet MemoryBank::retrieve(Level level, std::span<const double> query_key,
                                  int k) const {
  RetrievedSet out = sarseg::retrieve(group(level), query_key, k);
  out.level = level;
  return out;
}

std::size_t MemoryBank::total_entries() const {
  std::size_t n = 0;
  for (const MemoryGroup& g : groups_) n += g.size();
  return n;
}

namespace {

void dump_values(std::ostream& out, std::span<const double> values) {
  char buf[32];
  for (double v : values) {
    std::snprintf(buf, sizeof(buf), " %.17g", v);
    out << buf;
  }
}

std::vector<double> read_values(std::istream& in, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!(in >> v[i])) throw std::runtime_error("bank restore: truncated values");
  return v;
}

}  // namespace

void MemoryBank::dump(std::ostream& out) const {
  out << "sarseg-bank 1\n";
  out << "mode " << (mode_ == BankMode::Multi ? "multi" : "merged") << "\n";
  out << "proto_initialized " << (proto_initialized ? 1 : 0) << "\n";
  out << "proto_sem " << proto_sem.size();
  dump_values(out, proto_sem);
  out << "\n";
  out << "proto_str";
  if (proto_str.rank() == 3) {
    out << " " << proto_str.channels() << " " << proto_str.height() << " "
        << proto_str.width();
    dump_values(out, proto_str.values());
  } else {
    out << " 0 0 0";
  }
  out << "\n";
  for (const MemoryGroup& g : groups_) {
    out << "group " << (g.level() ? level_name(*g.level()) : "merged") << " "
        << g.capacity() << " " << g.size() << "\n";
    for (const MemoryEntry& e : g.entries()) {
      out << "entry " << level_name(e.level) << " " << e.source_step << " "
          << e.key.size();
      dump_values(out, e.key);
      out << " " << e.value.channels() << " " << e.value.height() << " "
          << e.value.width();
      dump_values(out, e.value.values());
      out << "\n";
    }
  }
  out << "end\n";
}

MemoryBank MemoryBank::restore(std::istream& in) {
  std::string word;
  std::size_t version = 0;
  if (!(in >> word >> version) || word != "sarseg-bank" || version != 1)
    throw std::runtime_error("bank restore: bad magic");
  std::string mode_name;
  if (!(in >> word >> mode_name) || word != "mode")
    throw std::runtime_error("bank restore: missing mode");
  const BankMode mode = mode_name == "multi" ? BankMode::Multi : BankMode::Merged;

  int initialized = 0;
  if (!(in >> word >> initialized) || word != "proto_initialized")
    throw std::runtime_error("bank restore: missing proto_initialized");

  std::size_t sem_dim = 0;
  if (!(in >> word >> sem_dim) || word != "proto_sem")
    throw std::runtime_error("bank restore: missing proto_sem");
  Vector proto_sem = read_values(in, sem_dim);

  std::size_t pc = 0, ph = 0, pw = 0;
  if (!(in >> word >> pc >> ph >> pw) || word != "proto_str")
    throw std::runtime_error("bank restore: missing proto_str");
  Tensor proto_str;
  if (pc > 0) proto_str = Tensor({pc, ph, pw}, read_values(in, pc * ph * pw));

  // groups are reconstructed from scratch so capacities come from the dump
  std::vector<MemoryGroup> groups;
  while (in >> word) {
    if (word == "end") break;
    if (word != "group") throw std::runtime_error("bank restore: expected group");
    std::string gname;
    std::size_t capacity = 0, count = 0;
    if (!(in >> gname >> capacity >> count))
      throw std::runtime_error("bank restore: bad group header");
    MemoryGroup g = gname == "merged" ? MemoryGroup::merged(capacity)
                                      : MemoryGroup(level_from_name(gname), capacity);
    for (std::size_t i = 0; i < count; ++i) {
      std::string ename, lname;
      long step = 0;
      std::size_t key_dim = 0;
      if (!(in >> ename >> lname >> step >> key_dim) || ename != "entry")
        throw std::runtime_error("bank restore: bad entry header");
      MemoryEntry e;
      e.level = level_from_name(lname);
      e.source_step = step;
      e.key = read_values(in, key_dim);
      std::size_t c = 0, h = 0, w = 0;
      if (!(in >> c >> h >> w))
        throw std::runtime_error("bank restore: bad value shape");
      e.value = Tensor({c, h, w}, read_values(in, c * h * w));
      g.insert(std::move(e));
    }
    groups.push_back(std::move(g));
  }

  const std::size_t cap0 = groups.size() > 0 ? groups[0].capacity() : 1;
  const std::size_t cap1 = groups.size() > 1 ? groups[1].capacity() : 1;
  const std::size_t cap2 = groups.size() > 2 ? groups[2].capacity() : 1;
  MemoryBank bank(mode, cap0, cap1, cap2);
  bank.groups_ = std::move(groups);
  bank.proto_sem = std::move(proto_sem);
  bank.proto_str = std::move(proto_str);
  bank.proto_initialized = initialized != 0;
  return bank;
}

}  // namespace sarseg
