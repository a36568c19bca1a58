#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "enrollcast/dataset.hpp"
#include "enrollcast/eval.hpp"
#include "enrollcast/featsel.hpp"
#include "enrollcast/logreg.hpp"

namespace enrollcast::service {

inline constexpr int kFormatVersion = 1;

struct TrainOptions {
  bool select_features = false;
  SearchConfig search;
  FitConfig fit;
  SplitSpec split;
  int cv_k = 10;
  std::uint64_t cv_seed = 0;
  double threshold = 0.5;

  /// Uses one seed for the split, the merit folds and the CV folds.
  void set_seed(std::uint64_t seed);
  void validate() const;
};

/// Scores of one model under one protocol: "holdout" (the test part of the
/// split), "cross_validation" (k-fold over all rows) or "external".
struct EvaluationReport {
  std::string protocol;
  std::size_t rows = 0;
  ConfusionMatrix confusion;
  DetailedMetrics metrics;
  RocCurve roc;
  // Set for cross_validation only.
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<ConfusionMatrix> fold_confusion;
  std::vector<ClassMetrics> per_fold;
};

EvaluationReport evaluate_model(const LogisticModel& model, const DesignMatrix& data, double threshold,
                                std::string protocol);
EvaluationReport evaluate_cv(const DesignMatrix& data, int k, const FitConfig& config, std::uint64_t seed,
                             double threshold);

struct StoredModel {
  std::string model_id;
  LogisticModel logistic;
  FeatureSchema schema;
  std::optional<SubsetSearchResult> selection;
  std::vector<EvaluationReport> evaluation;
  std::string dataset_id;
  std::string dataset_fingerprint;
  TrainOptions options;
  // Kept out of the hashed content so identical training runs produce
  // identical model files.
  std::string created_at;
};

std::string fingerprint(const CleanDataset& data);

/// encode -> optional best-first selection -> split -> fit on train ->
/// evaluate on test, plus k-fold cross-validation over all rows.
StoredModel train_pipeline(const CleanDataset& data, const TrainOptions& options, std::string dataset_id = {});

struct PredictionRecord {
  std::string applicant_id;
  double probability = 0.0;
  double percentage = 0.0;
  Outcome label = Outcome::not_enrolled;
  std::vector<std::pair<std::string, CellValue>> feature_values;
};

// 100 * p rounded to one decimal place.
double percentage_of(double probability) noexcept;

PredictionRecord predict_record(const StoredModel& model, const ApplicantRecord& applicant);

/// CSV in (schema columns, optional id, optional target), CSV out with one
/// PredictionRecord per row.
std::string predict_batch_csv(const StoredModel& model, std::string_view csv_text);

/// Model file text: pretty JSON with "format_version" and a content-hash
/// "model_id". Fills in `model.model_id`.
std::string serialize_model(StoredModel& model);
/// Throws Error(VersionUnsupported) or Error(CorruptModel).
StoredModel parse_model(std::string_view text);

}  // namespace enrollcast::service
