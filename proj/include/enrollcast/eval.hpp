#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "enrollcast/dataset.hpp"
#include "enrollcast/logreg.hpp"

namespace enrollcast {

// Positive class is `enrolled`.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  // Same counts with `not_enrolled` treated as the positive class.
  ConfusionMatrix swapped() const { return {tn, fn, tp, fp}; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassMetrics {
  double tp_rate = 0.0;
  double fp_rate = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  double accuracy = 0.0;
  // Set when any ratio was 0/0 and reported as 0.
  bool degenerate = false;

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

/// Per-class rows for both classes plus the support-weighted average.
struct DetailedMetrics {
  ClassMetrics enrolled;
  ClassMetrics not_enrolled;
  ClassMetrics weighted;

  friend bool operator==(const DetailedMetrics&, const DetailedMetrics&) = default;
};

struct RocCurve {
  // (fpr, tpr), from (0,0) to (1,1).
  std::vector<std::pair<double, double>> points;
  double auc = 0.0;

  friend bool operator==(const RocCurve&, const RocCurve&) = default;
};

ConfusionMatrix confusion(std::span<const Outcome> truth, std::span<const Outcome> predicted);

// Harmonic mean; 0 when precision + recall == 0.
double f_measure(double precision, double recall) noexcept;
ClassMetrics class_metrics(const ConfusionMatrix& cm);
DetailedMetrics detailed_metrics(const ConfusionMatrix& cm);

RocCurve roc_auc(std::span<const double> scores, std::span<const Outcome> truth);

std::vector<Outcome> outcomes_of(const Eigen::VectorXd& y);
std::vector<Outcome> threshold_labels(std::span<const double> scores, double threshold = 0.5);

/// Stratified fold assignment. Each class is shuffled with the seed and
/// dealt round-robin into the folds, continuing from where the previous
/// class stopped, so per-class and total fold sizes each differ by <= 1.
struct FoldPlan {
  int k = 0;
  std::vector<int> fold_of;

  /// Throws Error(TooFewPerClass) when a class has fewer than k rows.
  static FoldPlan stratified(const Eigen::VectorXd& y, int k, std::uint64_t seed);
};

struct CvReport {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<ConfusionMatrix> fold_confusion;
  std::vector<ClassMetrics> per_fold;
  ConfusionMatrix pooled_confusion;
  ClassMetrics pooled;
  double pooled_auc = 0.0;
  // Out-of-fold probability and fold index for every input row.
  std::vector<double> scores;
  std::vector<int> fold_of;
};

CvReport cross_validate(const DesignMatrix& m, int k, const FitConfig& config, std::uint64_t seed,
                        double threshold = 0.5);
CvReport cross_validate(const DesignMatrix& m, const FoldPlan& plan, const FitConfig& config,
                        std::uint64_t seed = 0, double threshold = 0.5);

/// Number of rows classified correctly out of fold; the numerator of the
/// pooled accuracy. Skips ROC bookkeeping.
std::size_t cv_correct(const DesignMatrix& m, const FoldPlan& plan, const FitConfig& config);

/// Pooled k-fold accuracy on the intercept plus `subset` columns.
double cv_accuracy(const DesignMatrix& m, const std::vector<std::size_t>& subset, int k, const FitConfig& config,
                   std::uint64_t seed);

}  // namespace enrollcast
