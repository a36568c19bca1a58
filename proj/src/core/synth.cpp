#include "enrollcast/synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "enrollcast/csv.hpp"
#include "enrollcast/error.hpp"
#include "enrollcast/logreg.hpp"
#include "enrollcast/random.hpp"

namespace enrollcast {

namespace {

enum class Draw { bernoulli, siblings, birth_order, uniform_0_9 };

struct Column {
  FeatureDef def;
  Draw draw = Draw::bernoulli;
};

// Informative attributes, in planting order.
const std::array<Column, 11>& named_columns() {
  static const std::array<Column, 11> columns = {{
      {FeatureDef::binary("OL_Pursued", "No", "Yes")},
      {FeatureDef::binary("Within_City", "No", "Yes")},
      {FeatureDef::binary("Within_Province", "No", "Yes")},
      {FeatureDef::binary("Religion_Binary", "No", "Yes")},
      {FeatureDef::binary("College_Admitted_To_Binary", "No", "Yes")},
      {FeatureDef::numeric("Total_Number_of_Siblings"), Draw::siblings},
      {FeatureDef::numeric("Ordinal_Position"), Draw::birth_order},
      {FeatureDef::binary("Previous_School_Binary", "No", "Yes")},
      {FeatureDef::binary("Campaign_Binary", "No", "Yes")},
      {FeatureDef::binary("School_Choice", "Other", "First")},
      {FeatureDef::binary("School_Type", "Private", "Public")},
  }};
  return columns;
}

std::vector<std::size_t> planted_positions(std::size_t d, std::size_t k) {
  if (d == 19 && k == 11) return {1, 3, 4, 5, 7, 10, 11, 12, 13, 15, 16};
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(i * d / k);
  return out;
}

std::vector<Column> layout(std::size_t d, const std::vector<std::size_t>& planted) {
  std::vector<Column> columns(d);
  std::vector<bool> is_planted(d, false);
  std::size_t named = 0;
  for (std::size_t pos : planted) {
    is_planted[pos] = true;
    if (named < named_columns().size()) {
      columns[pos] = named_columns()[named];
    } else {
      columns[pos] = {FeatureDef::binary("Informative_" + std::to_string(named + 1), "No", "Yes")};
    }
    ++named;
  }
  std::size_t noise = 0;
  for (std::size_t j = 0; j < d; ++j) {
    if (is_planted[j]) continue;
    if (noise == 0) {
      columns[j] = {FeatureDef::binary("Gender", "Female", "Male")};
    } else if (noise % 3 == 0) {
      columns[j] = {FeatureDef::numeric("Placeholder_" + std::to_string(noise)), Draw::uniform_0_9};
    } else {
      columns[j] = {FeatureDef::binary("Placeholder_" + std::to_string(noise), "No", "Yes")};
    }
    ++noise;
  }
  return columns;
}

std::string integer_text(double v) { return std::to_string(static_cast<long long>(v)); }

}  // namespace

SynthData generate(const SynthConfig& config) {
  if (config.features == 0 || config.informative > config.features) {
    throw Error(ErrorCode::BadRequest, "need 1 <= features and informative <= features");
  }
  if (!(config.missing_rate >= 0.0 && config.missing_rate < 1.0)) {
    throw Error(ErrorCode::BadRequest, "missing_rate must lie in [0, 1)");
  }
  Rng rng(config.seed);
  const std::size_t d = config.features;

  SynthData out;
  out.planted = planted_positions(d, config.informative);
  const auto columns = layout(d, out.planted);
  for (const auto& c : columns) out.schema.features.push_back(c.def);
  out.schema.target_name = "Enrolled";
  out.schema.positive_label = "Yes";

  // Per-feature draw rates and true weights.
  std::vector<double> rate(d, 0.5);
  out.true_weights.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) rate[j] = 0.3 + 0.4 * rng.uniform();
  double centre = 0.0;
  for (std::size_t pos : out.planted) {
    double w = 0.0;
    switch (columns[pos].draw) {
      case Draw::siblings:
        w = 0.3;
        centre += w * 3.0;
        break;
      case Draw::birth_order:
        w = -0.35;
        centre += w * 2.5;
        break;
      default:
        w = (0.8 + 0.7 * rng.uniform()) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
        centre += w * rate[pos];
    }
    out.true_weights[pos] = w;
  }
  out.true_intercept = 0.2 - centre;

  csv::Row header{"id"};
  for (const auto& c : columns) header.push_back(c.def.name);
  header.push_back(out.schema.target_name);
  out.csv = csv::format_row(header);

  out.probability.reserve(config.rows);
  for (std::size_t r = 0; r < config.rows; ++r) {
    std::vector<double> encoded(d, 0.0);
    double siblings = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      switch (columns[j].draw) {
        case Draw::bernoulli:
          encoded[j] = rng.bernoulli(rate[j]) ? 1.0 : 0.0;
          break;
        case Draw::siblings:
          siblings = static_cast<double>(rng.below(7));
          encoded[j] = siblings;
          break;
        case Draw::birth_order:
          encoded[j] = 1.0 + static_cast<double>(rng.below(static_cast<std::uint64_t>(siblings) + 1));
          break;
        case Draw::uniform_0_9:
          encoded[j] = static_cast<double>(rng.below(10));
          break;
      }
    }
    double eta = out.true_intercept;
    for (std::size_t j = 0; j < d; ++j) eta += out.true_weights[j] * encoded[j];
    const double p = sigmoid(eta);
    out.probability.push_back(p);
    const bool enrolled = rng.bernoulli(p);

    char id[32];
    std::snprintf(id, sizeof id, "A%05zu", r + 1);
    csv::Row row{id};
    for (std::size_t j = 0; j < d; ++j) {
      const auto& def = columns[j].def;
      std::string cell = def.kind == FeatureKind::binary_categorical ? (encoded[j] > 0.5 ? def.level1 : def.level0)
                                                                     : integer_text(encoded[j]);
      if (config.missing_rate > 0.0 && rng.bernoulli(config.missing_rate)) cell.clear();
      row.push_back(std::move(cell));
    }
    row.push_back(enrolled ? "Yes" : "No");
    out.csv += csv::format_row(row);
  }
  return out;
}

double true_probability(const SynthData& data, const std::vector<CellValue>& values) {
  std::vector<std::string> names;
  for (const auto& f : data.schema.features) names.push_back(f.name);
  const Eigen::VectorXd x = encode_row(data.schema, names, values);
  double eta = data.true_intercept;
  for (std::size_t j = 0; j < data.true_weights.size(); ++j) eta += data.true_weights[j] * x(static_cast<Eigen::Index>(j));
  return sigmoid(eta);
}

}  // namespace enrollcast
