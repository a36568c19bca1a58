#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "enrollcast/dataset.hpp"
#include "enrollcast/random.hpp"

namespace testing_util {

inline enrollcast::DesignMatrix make_matrix(const std::vector<std::vector<double>>& rows, const std::vector<double>& y) {
  enrollcast::DesignMatrix m;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size());
  m.x.resize(n, d + 1);
  m.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.x(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < d; ++j) m.x(i, j + 1) = rows[i][j];
    m.y(i) = y[i];
  }
  for (Eigen::Index j = 0; j < d; ++j) m.feature_names.push_back("f" + std::to_string(j));
  return m;
}

// Gaussian features, labels drawn from a logistic model with the given
// weights. Both classes are guaranteed present.
inline enrollcast::DesignMatrix random_logistic(std::size_t n, std::size_t d, std::uint64_t seed, double scale = 1.0) {
  enrollcast::Rng rng(seed);
  auto normal = [&] {
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };
  std::vector<double> w(d);
  for (auto& v : w) v = scale * normal();
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.1;
    for (std::size_t j = 0; j < d; ++j) {
      rows[i][j] = normal();
      eta += w[j] * rows[i][j];
    }
    y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  y[0] = 0.0;
  y[1] = 1.0;
  return make_matrix(rows, y);
}

}  // namespace testing_util
