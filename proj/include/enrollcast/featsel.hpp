#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "enrollcast/dataset.hpp"
#include "enrollcast/logreg.hpp"

namespace enrollcast {

enum class Direction { backward, forward };

struct SearchConfig {
  Direction direction = Direction::backward;
  // Consecutive non-improving node expansions before the search stops.
  int stale_limit = 5;
  int merit_folds = 5;
  std::uint64_t seed = 0;
  FitConfig fit;
  // Worker threads for neighbour evaluation. Results are merged in
  // generation order, so the outcome does not depend on this.
  unsigned threads = 1;

  void validate() const;
};

// Sorted feature indices (0-based, excluding the intercept).
using FeatureSubset = std::vector<std::size_t>;

struct TraceEntry {
  FeatureSubset subset;
  double merit = 0.0;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct SubsetSearchResult {
  FeatureSubset selected;
  double merit = 0.0;
  std::size_t subsets_evaluated = 0;
  std::size_t nodes_expanded = 0;
  std::vector<TraceEntry> trace;
};

/// Total order used everywhere a best subset is chosen: higher merit, then
/// fewer features, then lexicographically smaller indices.
bool ranks_before(double merit_a, const FeatureSubset& a, double merit_b, const FeatureSubset& b);

SubsetSearchResult best_first_search(const DesignMatrix& m, const SearchConfig& config);

/// Scores all 2^d - 1 non-empty subsets. Throws Error(TooManyFeatures) for d > 16.
SubsetSearchResult exhaustive_search(const DesignMatrix& m, const SearchConfig& config);

/// Throws Error(EmptySubset) or Error(BadIndex).
DesignMatrix apply_subset(const DesignMatrix& m, const FeatureSubset& subset);

}  // namespace enrollcast
