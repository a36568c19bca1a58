#include "enrollcast/featsel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <set>
#include <thread>

#include "enrollcast/error.hpp"
#include "enrollcast/eval.hpp"

namespace enrollcast {

void SearchConfig::validate() const {
  if (stale_limit < 1) throw Error(ErrorCode::BadRequest, "stale_limit must be >= 1", "stale_limit");
  if (merit_folds < 2) throw Error(ErrorCode::BadRequest, "merit_folds must be >= 2", "merit_folds");
  fit.validate();
}

bool ranks_before(double merit_a, const FeatureSubset& a, double merit_b, const FeatureSubset& b) {
  if (merit_a != merit_b) return merit_a > merit_b;
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

DesignMatrix apply_subset(const DesignMatrix& m, const FeatureSubset& subset) {
  if (subset.empty()) throw Error(ErrorCode::EmptySubset, "feature subset is empty");
  auto sorted = subset;
  std::ranges::sort(sorted);
  if (std::ranges::adjacent_find(sorted) != sorted.end()) throw Error(ErrorCode::BadIndex, "repeated feature index");
  if (sorted.back() >= m.features()) {
    throw Error(ErrorCode::BadIndex, "feature index " + std::to_string(sorted.back()) + " out of range");
  }
  return select_columns(m, sorted);
}

namespace {

// Scores subsets against one fixed fold plan, so every subset is compared on
// identical partitions.
class MeritEvaluator {
 public:
  MeritEvaluator(const DesignMatrix& m, const SearchConfig& config)
      : matrix_(m), plan_(FoldPlan::stratified(m.y, config.merit_folds, config.seed)), config_(config) {}

  double merit(const FeatureSubset& subset) const {
    const auto restricted = select_columns(matrix_, subset);
    return static_cast<double>(cv_correct(restricted, plan_, config_.fit)) / static_cast<double>(matrix_.rows());
  }

  std::vector<double> merits(const std::vector<FeatureSubset>& batch) const {
    std::vector<double> out(batch.size());
    const unsigned workers = std::min<unsigned>(std::max(config_.threads, 1u), static_cast<unsigned>(batch.size()));
    if (workers <= 1) {
      for (std::size_t i = 0; i < batch.size(); ++i) out[i] = merit(batch[i]);
      return out;
    }
    std::vector<std::exception_ptr> errors(batch.size());
    std::atomic<std::size_t> next{0};
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < batch.size(); i = next++) {
            try {
              out[i] = merit(batch[i]);
            } catch (...) {
              errors[i] = std::current_exception();
            }
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    return out;
  }

 private:
  const DesignMatrix& matrix_;
  FoldPlan plan_;
  const SearchConfig& config_;
};

struct Node {
  double merit;
  FeatureSubset subset;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const { return ranks_before(a.merit, a.subset, b.merit, b.subset); }
};

}  // namespace

SubsetSearchResult best_first_search(const DesignMatrix& m, const SearchConfig& config) {
  config.validate();
  const std::size_t d = m.features();
  if (d < 1) throw Error(ErrorCode::EmptySubset, "matrix has no features to select from");

  const MeritEvaluator evaluator(m, config);
  SubsetSearchResult result;
  std::set<FeatureSubset> seen;
  std::set<Node, NodeOrder> open;
  bool have_best = false;

  // Evaluates the unseen members of `batch`; true when the best improved.
  auto visit = [&](std::vector<FeatureSubset> batch) {
    std::erase_if(batch, [&](const FeatureSubset& s) { return seen.contains(s); });
    const auto merits = evaluator.merits(batch);
    bool improved = false;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      seen.insert(batch[i]);
      result.trace.push_back({batch[i], merits[i]});
      open.insert({merits[i], batch[i]});
      if (!have_best || ranks_before(merits[i], batch[i], result.merit, result.selected)) {
        result.selected = batch[i];
        result.merit = merits[i];
        have_best = true;
        improved = true;
      }
    }
    return improved;
  };

  std::vector<FeatureSubset> start;
  if (config.direction == Direction::backward) {
    FeatureSubset all(d);
    for (std::size_t j = 0; j < d; ++j) all[j] = j;
    start.push_back(std::move(all));
  } else {
    for (std::size_t j = 0; j < d; ++j) start.push_back({j});
  }
  visit(std::move(start));

  int stale = 0;
  while (!open.empty()) {
    const Node node = *open.begin();
    open.erase(open.begin());
    ++result.nodes_expanded;

    std::vector<FeatureSubset> neighbours;
    if (config.direction == Direction::backward) {
      if (node.subset.size() > 1) {
        for (std::size_t drop = 0; drop < node.subset.size(); ++drop) {
          FeatureSubset s = node.subset;
          s.erase(s.begin() + static_cast<std::ptrdiff_t>(drop));
          neighbours.push_back(std::move(s));
        }
      }
    } else {
      for (std::size_t j = 0; j < d; ++j) {
        if (std::ranges::binary_search(node.subset, j)) continue;
        FeatureSubset s = node.subset;
        s.insert(std::ranges::upper_bound(s, j), j);
        neighbours.push_back(std::move(s));
      }
    }

    if (visit(std::move(neighbours))) {
      stale = 0;
    } else if (++stale >= config.stale_limit) {
      break;
    }
  }

  result.subsets_evaluated = seen.size();
  return result;
}

SubsetSearchResult exhaustive_search(const DesignMatrix& m, const SearchConfig& config) {
  config.validate();
  const std::size_t d = m.features();
  if (d > 16) {
    throw Error(ErrorCode::TooManyFeatures, "exhaustive search is limited to 16 features, got " + std::to_string(d));
  }
  if (d < 1) throw Error(ErrorCode::EmptySubset, "matrix has no features to select from");

  std::vector<FeatureSubset> all;
  for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
    FeatureSubset s;
    for (std::size_t j = 0; j < d; ++j) {
      if (mask & (1u << j)) s.push_back(j);
    }
    all.push_back(std::move(s));
  }
  const MeritEvaluator evaluator(m, config);
  const auto merits = evaluator.merits(all);

  SubsetSearchResult result;
  for (std::size_t i = 0; i < all.size(); ++i) {
    result.trace.push_back({all[i], merits[i]});
    if (i == 0 || ranks_before(merits[i], all[i], result.merit, result.selected)) {
      result.selected = all[i];
      result.merit = merits[i];
    }
  }
  result.subsets_evaluated = all.size();
  return result;
}

}  // namespace enrollcast
