#include "enrollcast/service/json_io.hpp"

#include <charconv>
#include <cmath>

#include "enrollcast/error.hpp"

using nlohmann::json;

namespace enrollcast {

namespace {

template <class T>
T field(const json& j, const char* key, ErrorCode code = ErrorCode::BadRequest) {
  if (!j.is_object() || !j.contains(key)) throw Error(code, std::string("missing field \"") + key + "\"", key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(code, std::string("field \"") + key + "\" has the wrong type", key);
  }
}

std::string_view kind_name(FeatureKind k) { return k == FeatureKind::numeric ? "numeric" : "binary_categorical"; }

}  // namespace

void to_json(json& j, const FeatureSchema& s) {
  json features = json::array();
  for (const auto& f : s.features) {
    json jf{{"name", f.name}, {"kind", kind_name(f.kind)}};
    if (f.kind == FeatureKind::binary_categorical) jf["levels"] = {f.level0, f.level1};
    features.push_back(std::move(jf));
  }
  j = json{{"features", std::move(features)}, {"target", s.target_name}, {"positive_label", s.positive_label}};
}

void from_json(const json& j, FeatureSchema& s) {
  constexpr auto bad = ErrorCode::BadSchema;
  s = {};
  const auto features = field<json>(j, "features", bad);
  if (!features.is_array()) throw Error(bad, "\"features\" must be an array", "features");
  for (const auto& jf : features) {
    FeatureDef f;
    f.name = field<std::string>(jf, "name", bad);
    const auto kind = field<std::string>(jf, "kind", bad);
    if (kind == "numeric") {
      f.kind = FeatureKind::numeric;
    } else if (kind == "binary_categorical") {
      f.kind = FeatureKind::binary_categorical;
      const auto levels = field<std::vector<std::string>>(jf, "levels", bad);
      if (levels.size() != 2) throw Error(bad, "feature " + f.name + " must list exactly two levels", f.name);
      f.level0 = levels[0];
      f.level1 = levels[1];
    } else {
      throw Error(bad, "feature " + f.name + " has unknown kind \"" + kind + "\"", f.name);
    }
    s.features.push_back(std::move(f));
  }
  s.target_name = j.contains("target") ? field<std::string>(j, "target", bad) : std::string{};
  s.positive_label = j.contains("positive_label") ? field<std::string>(j, "positive_label", bad) : std::string{};
  s.validate();
}

FeatureSchema schema_from_text(std::string_view text) {
  json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::BadSchema, "schema is not valid JSON");
  return j.get<FeatureSchema>();
}

void to_json(json& j, const CleanReport& r) {
  j = json{{"input_rows", r.input_rows},
           {"duplicates_removed", r.duplicates_removed},
           {"missing_outcome_dropped", r.missing_outcome_dropped},
           {"rows_dropped", r.rows_dropped},
           {"cells_imputed", r.cells_imputed},
           {"output_rows", r.output_rows}};
}

void to_json(json& j, const LogisticModel& m) {
  j = json{{"intercept", m.intercept},
           {"weights", std::vector<double>(m.weights.begin(), m.weights.end())},
           {"feature_names", m.feature_names},
           {"ridge", m.ridge},
           {"iterations_used", m.iterations_used},
           {"converged", m.converged},
           {"final_objective", m.final_objective},
           {"gradient_norm", m.gradient_norm},
           {"gradient_bound", m.gradient_bound}};
}

void from_json(const json& j, LogisticModel& m) {
  m.intercept = field<double>(j, "intercept");
  const auto w = field<std::vector<double>>(j, "weights");
  m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  m.feature_names = field<std::vector<std::string>>(j, "feature_names");
  if (m.feature_names.size() != w.size()) throw Error(ErrorCode::BadRequest, "weights and feature_names differ");
  m.ridge = field<double>(j, "ridge");
  m.iterations_used = field<int>(j, "iterations_used");
  m.converged = field<bool>(j, "converged");
  m.final_objective = field<double>(j, "final_objective");
  m.gradient_norm = field<double>(j, "gradient_norm");
  m.gradient_bound = field<double>(j, "gradient_bound");
}

void to_json(json& j, const ConfusionMatrix& cm) {
  j = json{{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

void from_json(const json& j, ConfusionMatrix& cm) {
  cm.tp = field<std::size_t>(j, "tp");
  cm.fp = field<std::size_t>(j, "fp");
  cm.tn = field<std::size_t>(j, "tn");
  cm.fn = field<std::size_t>(j, "fn");
}

void to_json(json& j, const ClassMetrics& m) {
  j = json{{"tp_rate", m.tp_rate},     {"fp_rate", m.fp_rate},   {"precision", m.precision},
           {"recall", m.recall},       {"f_measure", m.f_measure}, {"accuracy", m.accuracy},
           {"degenerate", m.degenerate}};
}

void from_json(const json& j, ClassMetrics& m) {
  m.tp_rate = field<double>(j, "tp_rate");
  m.fp_rate = field<double>(j, "fp_rate");
  m.precision = field<double>(j, "precision");
  m.recall = field<double>(j, "recall");
  m.f_measure = field<double>(j, "f_measure");
  m.accuracy = field<double>(j, "accuracy");
  m.degenerate = field<bool>(j, "degenerate");
}

void to_json(json& j, const DetailedMetrics& m) {
  j = json{{"enrolled", m.enrolled}, {"not_enrolled", m.not_enrolled}, {"weighted", m.weighted}};
}

void from_json(const json& j, DetailedMetrics& m) {
  m.enrolled = field<ClassMetrics>(j, "enrolled");
  m.not_enrolled = field<ClassMetrics>(j, "not_enrolled");
  m.weighted = field<ClassMetrics>(j, "weighted");
}

void to_json(json& j, const RocCurve& c) {
  json points = json::array();
  for (const auto& [fpr, tpr] : c.points) points.push_back({fpr, tpr});
  j = json{{"points", std::move(points)}, {"auc", c.auc}};
}

void from_json(const json& j, RocCurve& c) {
  c.points.clear();
  for (const auto& p : field<json>(j, "points")) c.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  c.auc = field<double>(j, "auc");
}

void to_json(json& j, const SubsetSearchResult& r) {
  json trace = json::array();
  for (const auto& t : r.trace) trace.push_back({{"subset", t.subset}, {"merit", t.merit}});
  j = json{{"selected", r.selected},
           {"merit", r.merit},
           {"subsets_evaluated", r.subsets_evaluated},
           {"nodes_expanded", r.nodes_expanded},
           {"trace", std::move(trace)}};
}

void from_json(const json& j, SubsetSearchResult& r) {
  r.selected = field<FeatureSubset>(j, "selected");
  r.merit = field<double>(j, "merit");
  r.subsets_evaluated = field<std::size_t>(j, "subsets_evaluated");
  r.nodes_expanded = field<std::size_t>(j, "nodes_expanded");
  r.trace.clear();
  for (const auto& t : field<json>(j, "trace")) r.trace.push_back({field<FeatureSubset>(t, "subset"), field<double>(t, "merit")});
}

}  // namespace enrollcast

namespace enrollcast::service {

void to_json(json& j, const TrainOptions& o) {
  j = json{{"select_features", o.select_features},
           {"direction", o.search.direction == Direction::backward ? "backward" : "forward"},
           {"stale", o.search.stale_limit},
           {"merit_folds", o.search.merit_folds},
           {"search_seed", o.search.seed},
           {"ridge", o.fit.ridge},
           {"tolerance", o.fit.tolerance},
           {"max_iterations", o.fit.max_iterations},
           {"penalize_intercept", o.fit.penalize_intercept},
           {"split", o.split.train_fraction},
           {"split_seed", o.split.seed},
           {"stratified", o.split.stratified},
           {"folds", o.cv_k},
           {"cv_seed", o.cv_seed},
           {"threshold", o.threshold}};
}

void from_json(const json& j, TrainOptions& o) {
  if (!j.is_object()) throw Error(ErrorCode::BadRequest, "options must be a JSON object", "options");
  o = {};
  // A shared seed first, so specific seeds below can override it.
  if (j.contains("seed")) o.set_seed(field<std::uint64_t>(j, "seed"));
  for (const auto& [key, value] : j.items()) {
    const char* k = key.c_str();
    if (key == "seed") continue;
    if (key == "select_features") o.select_features = field<bool>(j, k);
    else if (key == "direction") {
      const auto d = field<std::string>(j, k);
      if (d != "backward" && d != "forward") throw Error(ErrorCode::BadRequest, "direction must be backward or forward", key);
      o.search.direction = d == "backward" ? Direction::backward : Direction::forward;
    } else if (key == "stale") o.search.stale_limit = field<int>(j, k);
    else if (key == "merit_folds") o.search.merit_folds = field<int>(j, k);
    else if (key == "search_seed") o.search.seed = field<std::uint64_t>(j, k);
    else if (key == "ridge") o.fit.ridge = field<double>(j, k);
    else if (key == "tolerance") o.fit.tolerance = field<double>(j, k);
    else if (key == "max_iterations") o.fit.max_iterations = field<int>(j, k);
    else if (key == "penalize_intercept") o.fit.penalize_intercept = field<bool>(j, k);
    else if (key == "split") o.split.train_fraction = field<double>(j, k);
    else if (key == "split_seed") o.split.seed = field<std::uint64_t>(j, k);
    else if (key == "stratified") o.split.stratified = field<bool>(j, k);
    else if (key == "folds") o.cv_k = field<int>(j, k);
    else if (key == "cv_seed") o.cv_seed = field<std::uint64_t>(j, k);
    else if (key == "threshold") o.threshold = field<double>(j, k);
    else throw Error(ErrorCode::BadRequest, "unknown option \"" + key + "\"", key);
  }
  o.search.fit = o.fit;
  o.validate();
}

void to_json(json& j, const EvaluationReport& r) {
  j = json{{"protocol", r.protocol},
           {"rows", r.rows},
           {"confusion", r.confusion},
           {"metrics", r.metrics},
           {"roc", r.roc}};
  if (r.protocol == "cross_validation") {
    j["k"] = r.k;
    j["seed"] = r.seed;
    j["fold_confusion"] = r.fold_confusion;
    j["per_fold"] = r.per_fold;
  }
}

void from_json(const json& j, EvaluationReport& r) {
  r = {};
  r.protocol = field<std::string>(j, "protocol");
  r.rows = field<std::size_t>(j, "rows");
  r.confusion = field<ConfusionMatrix>(j, "confusion");
  r.metrics = field<DetailedMetrics>(j, "metrics");
  r.roc = field<RocCurve>(j, "roc");
  if (r.protocol == "cross_validation") {
    r.k = field<int>(j, "k");
    r.seed = field<std::uint64_t>(j, "seed");
    r.fold_confusion = field<std::vector<ConfusionMatrix>>(j, "fold_confusion");
    r.per_fold = field<std::vector<ClassMetrics>>(j, "per_fold");
  }
}

void to_json(json& j, const PredictionRecord& r) {
  json values = json::object();
  for (const auto& [name, v] : r.feature_values) values[name] = v;
  j = json{{"applicant_id", r.applicant_id},
           {"probability", r.probability},
           {"percentage", r.percentage},
           {"label", to_string(r.label)},
           {"feature_values", std::move(values)}};
}

json model_content(const StoredModel& m) {
  json j{{"format_version", kFormatVersion},
         {"schema", m.schema},
         {"logistic", m.logistic},
         {"evaluation", m.evaluation},
         {"dataset_id", m.dataset_id},
         {"dataset_fingerprint", m.dataset_fingerprint},
         {"options", m.options}};
  j["selection"] = m.selection ? json(*m.selection) : json(nullptr);
  return j;
}

StoredModel model_from_content(const json& j) {
  StoredModel m;
  m.schema = field<FeatureSchema>(j, "schema");
  m.logistic = field<LogisticModel>(j, "logistic");
  m.evaluation = field<std::vector<EvaluationReport>>(j, "evaluation");
  m.dataset_id = field<std::string>(j, "dataset_id");
  m.dataset_fingerprint = field<std::string>(j, "dataset_fingerprint");
  m.options = field<TrainOptions>(j, "options");
  if (j.contains("selection") && !j.at("selection").is_null()) m.selection = field<SubsetSearchResult>(j, "selection");
  for (const auto& name : m.logistic.feature_names) {
    if (!m.schema.index_of(name)) throw Error(ErrorCode::BadRequest, "model feature " + name + " is not in the schema", name);
  }
  return m;
}

json model_summary(const StoredModel& m) {
  json j = model_content(m);
  j["model_id"] = m.model_id;
  j["created_at"] = m.created_at;
  j["logistic"].erase("weights");
  j["logistic"].erase("intercept");
  if (m.selection) {
    std::vector<std::string> names;
    // Selection indices refer to the full schema feature order.
    for (auto idx : m.selection->selected) names.push_back(m.schema.features.at(idx).name);
    j["selection"]["selected_names"] = names;
  }
  return j;
}

ApplicantRecord applicant_from_json(const FeatureSchema& schema, const json& values, std::string id) {
  if (!values.is_object()) throw Error(ErrorCode::BadRequest, "feature_values must be a JSON object", "feature_values");
  ApplicantRecord rec;
  rec.id = std::move(id);
  rec.values.assign(schema.features.size(), std::monostate{});
  for (const auto& [name, v] : values.items()) {
    const auto idx = schema.index_of(name);
    if (!idx) throw Error(ErrorCode::UnknownFeature, "unknown feature " + name, name);
    if (v.is_null()) continue;
    const auto& f = schema.features[*idx];
    if (f.kind == FeatureKind::binary_categorical) {
      if (!v.is_string() || (v.get<std::string>() != f.level0 && v.get<std::string>() != f.level1)) {
        throw Error(ErrorCode::BadLevel, name + " must be one of {" + f.level0 + ", " + f.level1 + "}, got " + v.dump(),
                    name);
      }
      rec.values[*idx] = v.get<std::string>();
    } else {
      double number = 0.0;
      bool ok = false;
      if (v.is_number()) {
        number = v.get<double>();
        ok = std::isfinite(number);
      } else if (v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), number);
        ok = ec == std::errc{} && ptr == s.data() + s.size() && !s.empty() && std::isfinite(number);
      }
      if (!ok) throw Error(ErrorCode::BadNumber, name + " must be a finite number, got " + v.dump(), name);
      rec.values[*idx] = number;
    }
  }
  return rec;
}

}  // namespace enrollcast::service

void nlohmann::adl_serializer<enrollcast::CellValue>::to_json(json& j, const enrollcast::CellValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) {
    j = *s;
  } else if (const auto* d = std::get_if<double>(&v)) {
    j = *d;
  } else {
    j = nullptr;
  }
}
