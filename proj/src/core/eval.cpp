#include "enrollcast/eval.hpp"

#include <algorithm>
#include <numeric>

#include "enrollcast/error.hpp"
#include "enrollcast/random.hpp"

namespace enrollcast {

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

ConfusionMatrix confusion(std::span<const Outcome> truth, std::span<const Outcome> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::LengthMismatch, "truth has " + std::to_string(truth.size()) + " labels, predictions have " +
                                               std::to_string(predicted.size()));
  }
  if (truth.empty()) throw Error(ErrorCode::Empty, "no labels to score");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] == Outcome::enrolled;
    const bool guess = predicted[i] == Outcome::enrolled;
    if (actual && guess) ++cm.tp;
    else if (actual) ++cm.fn;
    else if (guess) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

double f_measure(double precision, double recall) noexcept {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

ClassMetrics class_metrics(const ConfusionMatrix& cm) {
  ClassMetrics m;
  auto ratio = [&m](std::size_t num, std::size_t den) {
    if (den == 0) {
      m.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.tp_rate = ratio(cm.tp, cm.tp + cm.fn);
  m.fp_rate = ratio(cm.fp, cm.fp + cm.tn);
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = m.tp_rate;
  if (m.precision + m.recall > 0.0) {
    m.f_measure = f_measure(m.precision, m.recall);
  } else {
    m.degenerate = true;
  }
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  return m;
}

DetailedMetrics detailed_metrics(const ConfusionMatrix& cm) {
  DetailedMetrics d;
  d.enrolled = class_metrics(cm);
  d.not_enrolled = class_metrics(cm.swapped());
  const double pos = static_cast<double>(cm.tp + cm.fn);
  const double neg = static_cast<double>(cm.tn + cm.fp);
  const double total = pos + neg;
  auto blend = [&](double a, double b) { return total > 0.0 ? (pos * a + neg * b) / total : 0.0; };
  d.weighted.tp_rate = blend(d.enrolled.tp_rate, d.not_enrolled.tp_rate);
  d.weighted.fp_rate = blend(d.enrolled.fp_rate, d.not_enrolled.fp_rate);
  d.weighted.precision = blend(d.enrolled.precision, d.not_enrolled.precision);
  d.weighted.recall = blend(d.enrolled.recall, d.not_enrolled.recall);
  d.weighted.f_measure = blend(d.enrolled.f_measure, d.not_enrolled.f_measure);
  d.weighted.accuracy = d.enrolled.accuracy;
  d.weighted.degenerate = d.enrolled.degenerate || d.not_enrolled.degenerate;
  return d;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const Outcome> truth) {
  if (scores.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
  }
  const auto positives = static_cast<std::size_t>(std::ranges::count(truth, Outcome::enrolled));
  const std::size_t negatives = truth.size() - positives;
  if (positives == 0 || negatives == 0) throw Error(ErrorCode::SingleClass, "ROC needs both classes present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  // Twice the area, in units of one positive-negative pair, kept integral so
  // the result is exactly the Mann-Whitney count.
  std::uint64_t doubled_area = 0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::uint64_t group_tp = 0;
    std::uint64_t group_fp = 0;
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      (truth[order[i]] == Outcome::enrolled ? group_tp : group_fp)++;
    }
    doubled_area += group_fp * (2 * tp + group_tp);
    tp += group_tp;
    fp += group_fp;
    curve.points.emplace_back(static_cast<double>(fp) / static_cast<double>(negatives),
                              static_cast<double>(tp) / static_cast<double>(positives));
  }
  curve.auc = static_cast<double>(doubled_area) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
  return curve;
}

std::vector<Outcome> outcomes_of(const Eigen::VectorXd& y) {
  std::vector<Outcome> out(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    out[static_cast<std::size_t>(i)] = y(i) > 0.5 ? Outcome::enrolled : Outcome::not_enrolled;
  }
  return out;
}

std::vector<Outcome> threshold_labels(std::span<const double> scores, double threshold) {
  std::vector<Outcome> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(s >= threshold ? Outcome::enrolled : Outcome::not_enrolled);
  return out;
}

FoldPlan FoldPlan::stratified(const Eigen::VectorXd& y, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::BadRequest, "k must be >= 2", "k");
  std::vector<std::size_t> classes[2];
  for (Eigen::Index i = 0; i < y.size(); ++i) classes[y(i) > 0.5 ? 1 : 0].push_back(static_cast<std::size_t>(i));
  for (const auto& c : classes) {
    if (c.size() < static_cast<std::size_t>(k)) {
      throw Error(ErrorCode::TooFewPerClass, "each class needs at least " + std::to_string(k) + " rows, found " +
                                                 std::to_string(c.size()));
    }
  }
  FoldPlan plan;
  plan.k = k;
  plan.fold_of.assign(static_cast<std::size_t>(y.size()), 0);
  Rng rng(seed);
  std::size_t dealt = 0;
  for (auto& c : classes) {
    rng.shuffle(std::span(c));
    for (std::size_t row : c) plan.fold_of[row] = static_cast<int>(dealt++ % static_cast<std::size_t>(k));
  }
  return plan;
}

namespace {

struct FoldRows {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

FoldRows fold_rows(const FoldPlan& plan, int fold) {
  FoldRows r;
  for (std::size_t i = 0; i < plan.fold_of.size(); ++i) (plan.fold_of[i] == fold ? r.test : r.train).push_back(i);
  return r;
}

void check_plan(const DesignMatrix& m, const FoldPlan& plan) {
  if (plan.fold_of.size() != m.rows()) throw Error(ErrorCode::LengthMismatch, "fold plan does not match the matrix");
}

}  // namespace

CvReport cross_validate(const DesignMatrix& m, int k, const FitConfig& config, std::uint64_t seed,
                        double threshold) {
  return cross_validate(m, FoldPlan::stratified(m.y, k, seed), config, seed, threshold);
}

CvReport cross_validate(const DesignMatrix& m, const FoldPlan& plan, const FitConfig& config, std::uint64_t seed,
                        double threshold) {
  check_plan(m, plan);
  CvReport report;
  report.k = plan.k;
  report.seed = seed;
  report.scores.assign(m.rows(), 0.0);
  report.fold_of = plan.fold_of;
  const auto truth = outcomes_of(m.y);

  for (int f = 0; f < plan.k; ++f) {
    const auto rows = fold_rows(plan, f);
    const auto model = fit(select_rows(m, rows.train), config);
    const auto probs = predict_proba(model, select_rows(m, rows.test));
    std::vector<Outcome> fold_truth;
    for (std::size_t i = 0; i < rows.test.size(); ++i) {
      report.scores[rows.test[i]] = probs[i];
      fold_truth.push_back(truth[rows.test[i]]);
    }
    const auto cm = confusion(fold_truth, threshold_labels(probs, threshold));
    report.fold_confusion.push_back(cm);
    report.per_fold.push_back(class_metrics(cm));
    report.pooled_confusion += cm;
  }
  report.pooled = class_metrics(report.pooled_confusion);
  report.pooled_auc = roc_auc(report.scores, truth).auc;
  return report;
}

std::size_t cv_correct(const DesignMatrix& m, const FoldPlan& plan, const FitConfig& config) {
  check_plan(m, plan);
  std::size_t correct = 0;
  for (int f = 0; f < plan.k; ++f) {
    const auto rows = fold_rows(plan, f);
    const auto model = fit(select_rows(m, rows.train), config);
    const auto probs = predict_proba(model, select_rows(m, rows.test));
    for (std::size_t i = 0; i < rows.test.size(); ++i) {
      const bool guess = probs[i] >= 0.5;
      const bool actual = m.y(static_cast<Eigen::Index>(rows.test[i])) > 0.5;
      if (guess == actual) ++correct;
    }
  }
  return correct;
}

double cv_accuracy(const DesignMatrix& m, const std::vector<std::size_t>& subset, int k, const FitConfig& config,
                   std::uint64_t seed) {
  if (subset.empty()) throw Error(ErrorCode::EmptySubset, "feature subset is empty");
  auto sorted = subset;
  std::ranges::sort(sorted);
  if (std::ranges::adjacent_find(sorted) != sorted.end() || sorted.back() >= m.features()) {
    throw Error(ErrorCode::BadIndex, "feature subset has an invalid or repeated index");
  }
  const auto plan = FoldPlan::stratified(m.y, k, seed);
  const auto restricted = select_columns(m, sorted);
  return static_cast<double>(cv_correct(restricted, plan, config)) / static_cast<double>(m.rows());
}

}  // namespace enrollcast
