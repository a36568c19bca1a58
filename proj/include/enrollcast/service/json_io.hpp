#pragma once

#include <json.hpp>

#include "enrollcast/dataset.hpp"
#include "enrollcast/eval.hpp"
#include "enrollcast/featsel.hpp"
#include "enrollcast/logreg.hpp"
#include "enrollcast/service/pipeline.hpp"

template <>
struct nlohmann::adl_serializer<enrollcast::CellValue> {
  static void to_json(nlohmann::json& j, const enrollcast::CellValue& v);
};

// nlohmann adapters. Readers throw Error(BadRequest/BadSchema) with the
// offending field instead of nlohmann exceptions.
namespace enrollcast {

void to_json(nlohmann::json& j, const FeatureSchema& s);
void from_json(const nlohmann::json& j, FeatureSchema& s);

void to_json(nlohmann::json& j, const CleanReport& r);

void to_json(nlohmann::json& j, const LogisticModel& m);
void from_json(const nlohmann::json& j, LogisticModel& m);

void to_json(nlohmann::json& j, const ConfusionMatrix& cm);
void from_json(const nlohmann::json& j, ConfusionMatrix& cm);
void to_json(nlohmann::json& j, const ClassMetrics& m);
void from_json(const nlohmann::json& j, ClassMetrics& m);
void to_json(nlohmann::json& j, const DetailedMetrics& m);
void from_json(const nlohmann::json& j, DetailedMetrics& m);
void to_json(nlohmann::json& j, const RocCurve& c);
void from_json(const nlohmann::json& j, RocCurve& c);

void to_json(nlohmann::json& j, const SubsetSearchResult& r);
void from_json(const nlohmann::json& j, SubsetSearchResult& r);

FeatureSchema schema_from_text(std::string_view text);

}  // namespace enrollcast

namespace enrollcast::service {

void to_json(nlohmann::json& j, const TrainOptions& o);
void from_json(const nlohmann::json& j, TrainOptions& o);
void to_json(nlohmann::json& j, const EvaluationReport& r);
void from_json(const nlohmann::json& j, EvaluationReport& r);
void to_json(nlohmann::json& j, const PredictionRecord& r);

/// Hashed model content (everything but model_id and created_at).
nlohmann::json model_content(const StoredModel& m);
StoredModel model_from_content(const nlohmann::json& j);

/// Model view for the API: no weight values, full evaluation and trace.
nlohmann::json model_summary(const StoredModel& m);

/// Parses a {feature: value} object against the schema. Values must be a
/// declared level (binary) or a number / numeric string (numeric).
ApplicantRecord applicant_from_json(const FeatureSchema& schema, const nlohmann::json& values, std::string id);

}  // namespace enrollcast::service
