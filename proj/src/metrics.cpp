#include "sarseg/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sarseg {

ConfusionCounts::ConfusionCounts(int num_classes)
    : num_classes_(num_classes),
      counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
  if (num_classes < 2)
    throw std::invalid_argument("ConfusionCounts: num_classes must be >= 2");
}

std::int64_t ConfusionCounts::at(int truth, int pred) const {
  return counts_[static_cast<std::size_t>(truth) * num_classes_ + pred];
}

std::int64_t& ConfusionCounts::at(int truth, int pred) {
  return counts_[static_cast<std::size_t>(truth) * num_classes_ + pred];
}

std::int64_t ConfusionCounts::total() const {
  std::int64_t n = 0;
  for (std::int64_t v : counts_) n += v;
  return n;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  if (other.num_classes_ != num_classes_)
    throw std::invalid_argument("ConfusionCounts: class count mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

void accumulate(ConfusionCounts& counts, const LabelMap& pred,
                const LabelMap& truth) {
  if (pred.height != truth.height || pred.width != truth.width)
    throw std::invalid_argument("accumulate: mask dims differ");
  if (pred.num_classes != counts.num_classes() ||
      truth.num_classes != counts.num_classes())
    throw std::invalid_argument("accumulate: class count mismatch");
  for (std::size_t i = 0; i < truth.labels.size(); ++i)
    ++counts.at(truth.labels[i], pred.labels[i]);
}

namespace {

struct ClassTallies {
  std::int64_t tp = 0, fp = 0, fn = 0;
};

ClassTallies tallies(const ConfusionCounts& counts, int cls) {
  ClassTallies t;
  t.tp = counts.at(cls, cls);
  for (int other = 0; other < counts.num_classes(); ++other) {
    if (other == cls) continue;
    t.fp += counts.at(other, cls);
    t.fn += counts.at(cls, other);
  }
  return t;
}

}  // namespace

std::optional<double> iou(const ConfusionCounts& counts, int cls) {
  const ClassTallies t = tallies(counts, cls);
  const std::int64_t denom = t.tp + t.fp + t.fn;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(t.tp) / static_cast<double>(denom);
}

double miou(const ConfusionCounts& counts, UndefinedPolicy policy) {
  double sum = 0.0;
  int defined = 0;
  for (int cls = 0; cls < counts.num_classes(); ++cls) {
    if (const auto v = iou(counts, cls)) {
      sum += *v;
      ++defined;
    } else if (policy == UndefinedPolicy::CountAsZero) {
      ++defined;
    }
  }
  if (defined == 0)
    throw std::runtime_error("miou: every class has an empty union");
  return sum / static_cast<double>(defined);
}

ClassScores precision_recall_f1(const ConfusionCounts& counts, int cls) {
  const ClassTallies t = tallies(counts, cls);
  ClassScores s;
  if (t.tp + t.fp > 0)
    s.precision = static_cast<double>(t.tp) / static_cast<double>(t.tp + t.fp);
  if (t.tp + t.fn > 0)
    s.recall = static_cast<double>(t.tp) / static_cast<double>(t.tp + t.fn);
  if (s.precision && s.recall && *s.precision + *s.recall > 0.0)
    s.f1 = 2.0 * *s.precision * *s.recall / (*s.precision + *s.recall);
  return s;
}

namespace {

std::string fmt(const std::optional<double>& v) {
  if (!v) return "   --  ";
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%7.4f", *v);
  return buf;
}

}  // namespace

std::string metrics_table(const ConfusionCounts& counts) {
  std::ostringstream out;
  out << "class      iou     prec    recall  f1\n";
  for (int cls = 0; cls < counts.num_classes(); ++cls) {
    const ClassScores s = precision_recall_f1(counts, cls);
    out << cls << "        " << fmt(iou(counts, cls)) << "  " << fmt(s.precision)
        << "  " << fmt(s.recall) << "  " << fmt(s.f1) << "\n";
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "miou     %7.4f\n",
                miou(counts, UndefinedPolicy::Exclude));
  out << buf;
  return out.str();
}

std::string metrics_json(const ConfusionCounts& counts) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
  };
  json per_class = json::array();
  for (int cls = 0; cls < counts.num_classes(); ++cls) {
    const ClassScores s = precision_recall_f1(counts, cls);
    per_class.push_back({{"class", cls},
                         {"iou", opt(iou(counts, cls))},
                         {"precision", opt(s.precision)},
                         {"recall", opt(s.recall)},
                         {"f1", opt(s.f1)}});
  }
  json report{{"num_classes", counts.num_classes()},
              {"pixels", counts.total()},
              {"per_class", per_class},
              {"miou", miou(counts, UndefinedPolicy::Exclude)}};
  return report.dump();
}

}  // namespace sarseg
