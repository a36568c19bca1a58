#include "enrollcast/service/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <unordered_set>

#include "enrollcast/csv.hpp"
#include "enrollcast/error.hpp"
#include "enrollcast/service/hash.hpp"
#include "enrollcast/service/json_io.hpp"

using nlohmann::json;

namespace enrollcast::service {

void TrainOptions::set_seed(std::uint64_t seed) {
  split.seed = seed;
  search.seed = seed;
  cv_seed = seed;
}

void TrainOptions::validate() const {
  fit.validate();
  search.validate();
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0)) {
    throw Error(ErrorCode::BadRequest, "split must lie in (0, 1)", "split");
  }
  if (cv_k < 2) throw Error(ErrorCode::BadRequest, "folds must be >= 2", "folds");
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorCode::BadRequest, "threshold must lie in (0, 1)", "threshold");
}

EvaluationReport evaluate_model(const LogisticModel& model, const DesignMatrix& data, double threshold,
                                std::string protocol) {
  EvaluationReport report;
  report.protocol = std::move(protocol);
  report.rows = data.rows();
  const auto scores = predict_proba(model, data);
  const auto truth = outcomes_of(data.y);
  report.confusion = confusion(truth, threshold_labels(scores, threshold));
  report.metrics = detailed_metrics(report.confusion);
  // A one-class evaluation set has no ROC curve; points stay empty.
  if (report.confusion.tp + report.confusion.fn > 0 && report.confusion.tn + report.confusion.fp > 0) {
    report.roc = roc_auc(scores, truth);
  }
  return report;
}

EvaluationReport evaluate_cv(const DesignMatrix& data, int k, const FitConfig& config, std::uint64_t seed,
                             double threshold) {
  const auto cv = cross_validate(data, k, config, seed, threshold);
  EvaluationReport report;
  report.protocol = "cross_validation";
  report.rows = data.rows();
  report.confusion = cv.pooled_confusion;
  report.metrics = detailed_metrics(cv.pooled_confusion);
  report.roc = roc_auc(cv.scores, outcomes_of(data.y));
  report.k = cv.k;
  report.seed = cv.seed;
  report.fold_confusion = cv.fold_confusion;
  report.per_fold = cv.per_fold;
  return report;
}

std::string fingerprint(const CleanDataset& data) {
  json rows = json::array();
  for (const auto& r : data.rows) {
    json row = json::array({r.id});
    for (const auto& v : r.values) row.push_back(v);
    row.push_back(r.outcome ? json(to_string(*r.outcome)) : json(nullptr));
    rows.push_back(std::move(row));
  }
  const json content{{"schema", data.schema}, {"rows", std::move(rows)}};
  return sha256_hex(content.dump());
}

StoredModel train_pipeline(const CleanDataset& data, const TrainOptions& options, std::string dataset_id) {
  options.validate();
  const DesignMatrix full = encode(data);
  const double positives = full.y.sum();
  if (positives <= 0.0 || positives >= static_cast<double>(full.rows())) {
    throw Error(ErrorCode::SingleClass, "dataset outcomes contain a single class");
  }

  StoredModel out;
  out.schema = data.schema;
  out.options = options;
  out.options.search.fit = options.fit;
  out.dataset_id = std::move(dataset_id);
  out.dataset_fingerprint = fingerprint(data);

  DesignMatrix matrix = full;
  if (options.select_features) {
    auto result = best_first_search(full, out.options.search);
    matrix = apply_subset(full, result.selected);
    out.selection = std::move(result);
  }

  const auto parts = split(matrix, options.split);
  out.logistic = fit(parts.train, options.fit);
  out.evaluation.push_back(evaluate_model(out.logistic, parts.test, options.threshold, "holdout"));
  out.evaluation.push_back(evaluate_cv(matrix, options.cv_k, options.fit, options.cv_seed, options.threshold));
  return out;
}

double percentage_of(double probability) noexcept { return std::round(probability * 1000.0) / 10.0; }

PredictionRecord predict_record(const StoredModel& model, const ApplicantRecord& applicant) {
  const Eigen::VectorXd row = encode_row(model.schema, model.logistic.feature_names, applicant.values);
  PredictionRecord rec;
  rec.applicant_id = applicant.id;
  rec.probability = predict_proba(model.logistic, row);
  rec.percentage = percentage_of(rec.probability);
  rec.label = rec.probability >= model.options.threshold ? Outcome::enrolled : Outcome::not_enrolled;
  for (std::size_t j = 0; j < model.schema.features.size() && j < applicant.values.size(); ++j) {
    if (!is_missing(applicant.values[j])) rec.feature_values.emplace_back(model.schema.features[j].name, applicant.values[j]);
  }
  return rec;
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string one_decimal(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 1);
  return std::string(buf, end);
}

}  // namespace

std::string predict_batch_csv(const StoredModel& model, std::string_view csv_text) {
  const auto table = csv::parse(csv_text);
  std::unordered_set<std::string> header(table.header.begin(), table.header.end());

  // Load whichever schema columns are present; the model's own features are required.
  FeatureSchema present = model.schema;
  std::erase_if(present.features, [&](const FeatureDef& f) { return !header.contains(f.name); });
  for (const auto& name : model.logistic.feature_names) {
    if (!header.contains(name)) throw Error(ErrorCode::MissingColumn, "batch CSV lacks column " + name, name);
  }
  LoadOptions load;
  load.require_target = false;
  const auto raw = load_csv(csv_text, present, load);

  csv::Row out_header{"applicant_id", "probability", "percentage", "label"};
  for (const auto& f : present.features) out_header.push_back(f.name);
  std::string out = csv::format_row(out_header);

  for (const auto& r : raw.rows) {
    ApplicantRecord aligned;
    aligned.id = r.id;
    aligned.values.assign(model.schema.features.size(), std::monostate{});
    for (std::size_t j = 0; j < present.features.size(); ++j) {
      aligned.values[*model.schema.index_of(present.features[j].name)] = r.values[j];
    }
    PredictionRecord rec;
    try {
      rec = predict_record(model, aligned);
    } catch (const Error& e) {
      throw Error(e.code(), "row " + r.id + ": " + e.what(), e.field());
    }
    csv::Row row{rec.applicant_id, shortest(rec.probability), one_decimal(rec.percentage),
                 std::string(to_string(rec.label))};
    for (const auto& v : r.values) row.push_back(cell_text(v));
    out += csv::format_row(row);
  }
  return out;
}

std::string serialize_model(StoredModel& model) {
  json content = model_content(model);
  model.model_id = sha256_hex(content.dump());
  content["model_id"] = model.model_id;
  return content.dump(2) + "\n";
}

StoredModel parse_model(std::string_view text) {
  json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::CorruptModel, "model file is not a JSON object");
  const auto version = j.find("format_version");
  if (version == j.end() || !version->is_number_integer() || version->get<int>() != kFormatVersion) {
    throw Error(ErrorCode::VersionUnsupported,
                "unsupported model format_version " + (version == j.end() ? std::string("(absent)") : version->dump()),
                "format_version");
  }
  const auto id = j.find("model_id");
  if (id == j.end() || !id->is_string()) throw Error(ErrorCode::CorruptModel, "model file has no model_id");
  const std::string model_id = id->get<std::string>();
  j.erase("model_id");
  if (sha256_hex(j.dump()) != model_id) throw Error(ErrorCode::CorruptModel, "model content does not match its model_id");
  StoredModel model;
  try {
    model = model_from_content(j);
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptModel, std::string("model content is malformed: ") + e.what(), e.field());
  }
  model.model_id = model_id;
  return model;
}

}  // namespace enrollcast::service
