#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "enrollcast/dataset.hpp"

namespace enrollcast {

struct SynthConfig {
  std::size_t features = 19;
  std::size_t informative = 11;
  std::size_t rows = 5000;
  std::uint64_t seed = 1;
  // Fraction of feature cells blanked out, to exercise cleaning.
  double missing_rate = 0.0;
};

/// Applicant data drawn from a known logistic model. Informative features
/// carry non-zero true weights; the rest are independent noise.
struct SynthData {
  FeatureSchema schema;
  std::string csv;
  std::vector<std::size_t> planted;
  std::vector<double> true_weights;  // one per schema feature, zero for noise
  double true_intercept = 0.0;
  // True enrolment probability of each generated row, in CSV order.
  std::vector<double> probability;
};

SynthData generate(const SynthConfig& config);

/// The generator's true probability for a fully observed record.
double true_probability(const SynthData& data, const std::vector<CellValue>& values);

}  // namespace enrollcast
