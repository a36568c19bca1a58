#include <gtest/gtest.h>

#include <map>

#include "enrollcast/error.hpp"
#include "enrollcast/eval.hpp"
#include "helpers.hpp"

using namespace enrollcast;
using testing_util::make_matrix;
using testing_util::random_logistic;

namespace {

constexpr Outcome E = Outcome::enrolled;
constexpr Outcome N = Outcome::not_enrolled;

double mann_whitney(const std::vector<double>& s, const std::vector<Outcome>& t) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (t[i] != E) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (t[j] != N) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

}  // namespace

TEST(Confusion, HandCounts) {
  const std::vector<Outcome> all_e{E, E, E};
  EXPECT_EQ(confusion(all_e, all_e), (ConfusionMatrix{3, 0, 0, 0}));
  const std::vector<Outcome> truth{E, E, N, N};
  const std::vector<Outcome> pred{E, N, E, N};
  const auto cm = confusion(truth, pred);
  EXPECT_EQ(cm.tp, 1u);
  EXPECT_EQ(cm.fn, 1u);
  EXPECT_EQ(cm.fp, 1u);
  EXPECT_EQ(cm.tn, 1u);
  const std::vector<Outcome> four{E, E, N, N};
  const std::vector<Outcome> three{E, E, N};
  try {
    confusion(three, four);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
}

TEST(ClassMetrics, HarmonicMeanRounding) {
  EXPECT_NEAR(f_measure(0.772, 0.840), 0.805, 0.0005);
}

TEST(ClassMetrics, HandArithmetic) {
  const auto m = class_metrics({.tp = 8, .fp = 3, .tn = 7, .fn = 2});
  EXPECT_DOUBLE_EQ(m.tp_rate, 0.8);
  EXPECT_DOUBLE_EQ(m.fp_rate, 0.3);
  EXPECT_DOUBLE_EQ(m.precision, 8.0 / 11.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.8);
  EXPECT_DOUBLE_EQ(m.f_measure, 16.0 / 21.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
  EXPECT_FALSE(m.degenerate);

  const auto d = class_metrics({.tp = 0, .fp = 0, .tn = 5, .fn = 0});
  EXPECT_EQ(d.precision, 0.0);
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.accuracy, 1.0);
}

TEST(ClassMetrics, DetailedRowsAndWeightedAverage) {
  const ConfusionMatrix cm{.tp = 8, .fp = 3, .tn = 7, .fn = 2};
  const auto d = detailed_metrics(cm);
  EXPECT_DOUBLE_EQ(d.not_enrolled.tp_rate, 0.7);
  EXPECT_DOUBLE_EQ(d.not_enrolled.precision, 7.0 / 9.0);
  EXPECT_DOUBLE_EQ(d.weighted.tp_rate, (10 * 0.8 + 10 * 0.7) / 20.0);
  EXPECT_DOUBLE_EQ(d.weighted.f_measure, 0.5 * d.enrolled.f_measure + 0.5 * d.not_enrolled.f_measure);
}

TEST(RocAuc, SmallCases) {
  EXPECT_EQ(roc_auc(std::vector<double>{0.9, 0.1}, std::vector<Outcome>{E, N}).auc, 1.0);
  EXPECT_EQ(roc_auc(std::vector<double>{0.3, 0.3, 0.3}, std::vector<Outcome>{E, N, N}).auc, 0.5);
  const auto c = roc_auc(std::vector<double>{0.8, 0.4, 0.6, 0.2}, std::vector<Outcome>{E, E, N, N});
  EXPECT_EQ(c.auc, 0.75);
  EXPECT_EQ(c.points.front(), std::make_pair(0.0, 0.0));
  EXPECT_EQ(c.points.back(), std::make_pair(1.0, 1.0));
  EXPECT_THROW(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<Outcome>{E, E}), Error);
  EXPECT_THROW(roc_auc(std::vector<double>{0.1}, std::vector<Outcome>{E, N}), Error);
}

TEST(RocAuc, MatchesPairCountingWithTies) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(200);
    const std::size_t distinct = 1 + rng.below(trial % 2 ? 5 : 1000);
    std::vector<double> s(n);
    std::vector<Outcome> t(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(distinct)) / static_cast<double>(distinct);
      t[i] = rng.bernoulli(0.4) ? E : N;
    }
    t[0] = E;
    t[1] = N;
    const double auc = roc_auc(s, t).auc;
    EXPECT_NEAR(auc, mann_whitney(s, t), 1e-12);

    // Negating scores alone reflects the AUC; also swapping labels restores it.
    std::vector<double> neg(s);
    for (auto& v : neg) v = -v;
    std::vector<Outcome> flipped(t);
    for (auto& v : flipped) v = v == E ? N : E;
    EXPECT_NEAR(roc_auc(neg, t).auc, 1.0 - auc, 1e-12);
    EXPECT_NEAR(roc_auc(neg, flipped).auc, auc, 1e-12);

    // Strictly increasing transforms leave it unchanged.
    std::vector<double> squashed(s);
    for (auto& v : squashed) v = std::exp(3.0 * v) - 7.0;
    EXPECT_EQ(roc_auc(squashed, t).auc, auc);
  }
}

TEST(Folds, BalancedHundredGivesFivePlusFive) {
  std::vector<double> y(100);
  for (std::size_t i = 0; i < 100; ++i) y[i] = i % 2;
  const Eigen::VectorXd yv = Eigen::Map<Eigen::VectorXd>(y.data(), 100);
  const auto plan = FoldPlan::stratified(yv, 10, 4);
  std::map<int, std::pair<int, int>> counts;
  for (std::size_t i = 0; i < 100; ++i) (y[i] > 0.5 ? counts[plan.fold_of[i]].first : counts[plan.fold_of[i]].second)++;
  ASSERT_EQ(counts.size(), 10u);
  for (const auto& [fold, c] : counts) {
    EXPECT_EQ(c.first, 5) << fold;
    EXPECT_EQ(c.second, 5) << fold;
  }
}

TEST(Folds, UnevenSizesDifferByAtMostOne) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const std::size_t n = 30 + rng.below(100);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (auto& v : y) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
    if (y.sum() < 7) y.head(7).setOnes();
    if (y.sum() > static_cast<double>(n) - 7) y.tail(7).setZero();
    const int k = 2 + static_cast<int>(rng.below(6));
    const auto plan = FoldPlan::stratified(y, k, seed);
    std::vector<int> total(k), pos(k);
    for (std::size_t i = 0; i < n; ++i) {
      total[plan.fold_of[i]]++;
      pos[plan.fold_of[i]] += y(static_cast<Eigen::Index>(i)) > 0.5;
    }
    EXPECT_LE(*std::max_element(total.begin(), total.end()) - *std::min_element(total.begin(), total.end()), 1);
    EXPECT_LE(*std::max_element(pos.begin(), pos.end()) - *std::min_element(pos.begin(), pos.end()), 1);
  }
}

TEST(Folds, TooFewPerClass) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(10);
  y(3) = 1.0;
  try {
    FoldPlan::stratified(y, 2, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewPerClass);
  }
  EXPECT_THROW(FoldPlan::stratified(y, 1, 1), Error);
}

TEST(CrossValidate, DeterministicAndPooled) {
  const auto m = random_logistic(120, 3, 8);
  const auto a = cross_validate(m, 5, {}, 3);
  const auto b = cross_validate(m, 5, {}, 3);
  EXPECT_EQ(a.fold_confusion, b.fold_confusion);
  EXPECT_EQ(a.scores, b.scores);
  EXPECT_EQ(a.pooled_auc, b.pooled_auc);
  ConfusionMatrix sum;
  for (const auto& cm : a.fold_confusion) sum += cm;
  EXPECT_EQ(sum, a.pooled_confusion);
  EXPECT_EQ(a.pooled_confusion.total(), m.rows());

  std::vector<std::size_t> all{0, 1, 2};
  EXPECT_DOUBLE_EQ(cv_accuracy(m, all, 5, {}, 3), a.pooled.accuracy);
  EXPECT_THROW(cv_accuracy(m, {}, 5, {}, 3), Error);
  EXPECT_THROW(cv_accuracy(m, {0, 7}, 5, {}, 3), Error);
}

TEST(CrossValidate, DeterminingFeatureGivesPerfectMerit) {
  Rng rng(2);
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 60; ++i) {
    const double label = i % 2;
    rows.push_back({label, rng.uniform(), static_cast<double>(rng.below(3))});
    y.push_back(label);
  }
  const auto m = make_matrix(rows, y);
  for (const std::vector<std::size_t>& subset : {std::vector<std::size_t>{0}, {0, 1}, {0, 2}, {0, 1, 2}}) {
    EXPECT_EQ(cv_accuracy(m, subset, 5, {}, 9), 1.0);
  }
}
