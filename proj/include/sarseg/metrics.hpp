#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sarseg/scene.hpp"

namespace sarseg {

/// C x C pixel counts; entry (i, j) counts pixels of true class i predicted
/// as class j.
class ConfusionCounts {
 public:
  explicit ConfusionCounts(int num_classes);

  int num_classes() const { return num_classes_; }
  std::int64_t at(int truth, int pred) const;
  std::int64_t& at(int truth, int pred);
  std::int64_t total() const;

  ConfusionCounts& operator+=(const ConfusionCounts& other);

 private:
  int num_classes_;
  std::vector<std::int64_t> counts_;
};

void accumulate(ConfusionCounts& counts, const LabelMap& pred,
                const LabelMap& truth);

/// Whether classes with an empty union are dropped from the mean or scored 0.
enum class UndefinedPolicy { Exclude, CountAsZero };

/// TP / (TP + FP + FN); nullopt when the denominator is zero.
std::optional<double> iou(const ConfusionCounts& counts, int cls);

/// Mean IoU over defined classes. Throws when no class is defined.
double miou(const ConfusionCounts& counts,
            UndefinedPolicy policy = UndefinedPolicy::Exclude);

struct ClassScores {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

ClassScores precision_recall_f1(const ConfusionCounts& counts, int cls);

/// Human-readable per-class metric table.
std::string metrics_table(const ConfusionCounts& counts);

/// Machine-readable report (serialized JSON object) with per-class and
/// aggregate fields; undefined values are emitted as null.
std::string metrics_json(const ConfusionCounts& counts);

}  // namespace sarseg
