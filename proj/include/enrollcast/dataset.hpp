#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace enrollcast {

enum class FeatureKind { binary_categorical, numeric };

struct FeatureDef {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  // Only meaningful for binary_categorical. level1 encodes to 1.0.
  std::string level0;
  std::string level1;

  static FeatureDef binary(std::string name, std::string level0, std::string level1);
  static FeatureDef numeric(std::string name);

  friend bool operator==(const FeatureDef&, const FeatureDef&) = default;
};

/// Ordered feature definitions plus the target column. An empty
/// `target_name` marks an auxiliary source that carries no outcome.
struct FeatureSchema {
  std::vector<FeatureDef> features;
  std::string target_name;
  std::string positive_label;

  /// Throws Error(BadSchema) when names collide, are empty, or a binary
  /// feature does not have two distinct levels.
  void validate() const;

  std::optional<std::size_t> index_of(std::string_view name) const;
  /// Throws Error(UnknownFeature).
  const FeatureDef& at(std::string_view name) const;
  bool has_target() const { return !target_name.empty(); }

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

// std::monostate is a missing cell. Binary features hold their level text,
// numeric features hold a double.
using CellValue = std::variant<std::monostate, std::string, double>;

inline bool is_missing(const CellValue& v) { return std::holds_alternative<std::monostate>(v); }
std::string cell_text(const CellValue& v);

enum class Outcome { not_enrolled, enrolled };

std::string_view to_string(Outcome o) noexcept;

struct ApplicantRecord {
  std::string id;
  // Aligned with FeatureSchema::features.
  std::vector<CellValue> values;
  std::optional<Outcome> outcome;
};

struct RawDataset {
  FeatureSchema schema;
  std::vector<ApplicantRecord> rows;
  std::vector<std::string> provenance;
};

enum class MissingPolicy { drop_rows, impute_mode };

struct CleanReport {
  std::size_t input_rows = 0;
  std::size_t duplicates_removed = 0;
  std::size_t missing_outcome_dropped = 0;
  // Every row removed for a missing value, including missing outcomes.
  std::size_t rows_dropped = 0;
  std::size_t cells_imputed = 0;
  std::size_t output_rows = 0;

  friend bool operator==(const CleanReport&, const CleanReport&) = default;
};

struct CleanDataset {
  FeatureSchema schema;
  std::vector<ApplicantRecord> rows;
  std::vector<std::string> provenance;
  CleanReport report;

  RawDataset as_raw() const { return {schema, rows, provenance}; }
};

/// x is n by (d+1) with a leading intercept column of ones; y holds 0/1.
struct DesignMatrix {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> feature_names;

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t features() const { return feature_names.size(); }
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct Split {
  DesignMatrix train;
  DesignMatrix test;
  // Original row indices, ascending.
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

struct GroupCount {
  std::string label;
  std::size_t count = 0;

  friend bool operator==(const GroupCount&, const GroupCount&) = default;
};

struct LoadOptions {
  // Column holding record ids. When absent, ids are 1-based row numbers.
  std::string id_column = "id";
  // Batch prediction input has no outcome column.
  bool require_target = true;
  std::string source = "upload";
};

RawDataset load_csv(std::string_view text, const FeatureSchema& schema, const LoadOptions& options = {});

/// Left join on `key`, which is either the id column name or a feature
/// present in both schemas. Auxiliary features are appended to the schema.
RawDataset join(const RawDataset& primary, const RawDataset& auxiliary, std::string_view key,
                std::string_view id_column = "id");

CleanDataset clean(const RawDataset& data, MissingPolicy policy = MissingPolicy::impute_mode);

DesignMatrix encode(const CleanDataset& data);

/// Encodes one record's values (aligned to `schema`) onto the columns named
/// by `feature_names`. Throws Error(MissingFeature) on a missing cell.
Eigen::VectorXd encode_row(const FeatureSchema& schema, const std::vector<std::string>& feature_names,
                           const std::vector<CellValue>& values);

DesignMatrix select_rows(const DesignMatrix& m, const std::vector<std::size_t>& rows);
/// Keeps the intercept plus the given feature columns, in the order given.
DesignMatrix select_columns(const DesignMatrix& m, const std::vector<std::size_t>& features);

Split split(const DesignMatrix& m, const SplitSpec& spec);

std::vector<GroupCount> summarize(const CleanDataset& data, std::string_view by);

}  // namespace enrollcast
