#include <gtest/gtest.h>

#include <charconv>
#include <cstdlib>

#include "enrollcast/csv.hpp"
#include "enrollcast/error.hpp"
#include "enrollcast/service/hash.hpp"
#include "enrollcast/service/json_io.hpp"
#include "enrollcast/service/pipeline.hpp"
#include "enrollcast/service/store.hpp"
#include "enrollcast/synth.hpp"
#include "temp_dir.hpp"

using namespace enrollcast;
using namespace enrollcast::service;
using nlohmann::json;

namespace {

SynthData small_synth(std::uint64_t seed = 3, std::size_t rows = 600, std::size_t features = 11,
                      std::size_t informative = 11) {
  return generate({.features = features, .informative = informative, .rows = rows, .seed = seed});
}

CleanDataset as_clean(const SynthData& s) { return clean(load_csv(s.csv, s.schema)); }

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

}  // namespace

TEST(Hash, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Synth, DeterministicAndConsistent) {
  const auto a = small_synth(5, 300, 19, 11);
  const auto b = small_synth(5, 300, 19, 11);
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_NE(a.csv, small_synth(6, 300, 19, 11).csv);
  EXPECT_EQ(a.planted.size(), 11u);
  EXPECT_EQ(a.schema.features.size(), 19u);
  std::size_t nonzero = 0;
  for (double w : a.true_weights) nonzero += w != 0.0;
  EXPECT_EQ(nonzero, 11u);

  const auto raw = load_csv(a.csv, a.schema);
  ASSERT_EQ(raw.rows.size(), 300u);
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    EXPECT_DOUBLE_EQ(true_probability(a, raw.rows[i].values), a.probability[i]);
  }
  const auto gappy = generate({.rows = 200, .seed = 2, .missing_rate = 0.1});
  const auto cleaned = clean(load_csv(gappy.csv, gappy.schema));
  EXPECT_GT(cleaned.report.cells_imputed, 0u);
}

TEST(Store, IdempotentIngestAndLookup) {
  TempDir dir;
  Store store(dir.path());
  const auto s = small_synth();
  const std::string schema = json(s.schema).dump();
  const auto first = store.put_dataset(s.csv, schema);
  EXPECT_TRUE(first.created);
  EXPECT_EQ(first.rows, 600u);
  const auto again = store.put_dataset(s.csv, schema);
  EXPECT_FALSE(again.created);
  EXPECT_EQ(again.id, first.id);
  EXPECT_NE(store.put_dataset(s.csv, schema, MissingPolicy::drop_rows).id, first.id);

  Store reopened(dir.path());
  EXPECT_EQ(reopened.dataset(first.id)->rows.size(), 600u);
  EXPECT_EQ(reopened.dataset_info(first.id).report, first.report);
  EXPECT_EQ(reopened.dataset_ids().size(), 2u);
  EXPECT_EQ(code_of([&] { reopened.dataset("00ff"); }), ErrorCode::NotFound);
  EXPECT_EQ(code_of([&] { reopened.dataset("../etc"); }), ErrorCode::NotFound);
  EXPECT_EQ(code_of([&] { reopened.model("abcd"); }), ErrorCode::NotFound);
  EXPECT_EQ(code_of([&] { store.put_dataset(s.csv, "{\"features\": 3}"); }), ErrorCode::BadSchema);
}

TEST(Store, EnvironmentOverridesFlag) {
  ::setenv("ENROLLCAST_STORE", "/tmp/from-env", 1);
  EXPECT_EQ(Store::resolve_root("flag-dir"), "/tmp/from-env");
  ::unsetenv("ENROLLCAST_STORE");
  EXPECT_EQ(Store::resolve_root("flag-dir"), "flag-dir");
  EXPECT_EQ(Store::resolve_root(""), "enrollcast-store");
}

TEST(ModelFile, RoundTripIsBitIdentical) {
  const auto s = small_synth(4, 800);
  const auto data = as_clean(s);
  TrainOptions options;
  options.set_seed(4);
  auto model = train_pipeline(data, options, "dataset");
  const std::string text = serialize_model(model);
  const auto loaded = parse_model(text);
  EXPECT_EQ(loaded.model_id, model.model_id);
  EXPECT_EQ(loaded.logistic.weights, model.logistic.weights);
  EXPECT_EQ(loaded.logistic.intercept, model.logistic.intercept);
  auto copy = loaded;
  EXPECT_EQ(serialize_model(copy), text);

  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(predict_record(loaded, data.rows[i]).probability, predict_record(model, data.rows[i]).probability);
  }

  TempDir dir;
  Store store(dir.path());
  const auto id = store.put_model(model);
  EXPECT_EQ(id, model.model_id);
  Store reopened(dir.path());
  EXPECT_EQ(reopened.model(id)->logistic.weights, model.logistic.weights);
  EXPECT_FALSE(reopened.model(id)->created_at.empty());
}

TEST(ModelFile, TamperAndVersionChecks) {
  auto model = train_pipeline(as_clean(small_synth()), {}, "d");
  const std::string text = serialize_model(model);

  json j = json::parse(text);
  j["logistic"]["weights"][0] = j["logistic"]["weights"][0].get<double>() + 1e-12;
  EXPECT_EQ(code_of([&] { parse_model(j.dump(2)); }), ErrorCode::CorruptModel);

  std::string flipped = text;
  const auto pos = flipped.find("\"intercept\": ") + 14;
  flipped[pos] = flipped[pos] == '1' ? '2' : '1';
  EXPECT_EQ(code_of([&] { parse_model(flipped); }), ErrorCode::CorruptModel);

  json v = json::parse(text);
  v["format_version"] = 2;
  EXPECT_EQ(code_of([&] { parse_model(v.dump()); }), ErrorCode::VersionUnsupported);
  EXPECT_EQ(code_of([&] { parse_model("not json"); }), ErrorCode::CorruptModel);
}

TEST(Pipeline, ShapeAndRecomputedEvaluation) {
  const auto data = as_clean(small_synth(8, 700));
  TrainOptions options;
  options.set_seed(8);
  const auto model = train_pipeline(data, options, "d");
  EXPECT_EQ(model.logistic.weights.size(), 11);
  ASSERT_EQ(model.evaluation.size(), 2u);
  EXPECT_EQ(model.evaluation[0].protocol, "holdout");
  EXPECT_EQ(model.evaluation[1].protocol, "cross_validation");
  EXPECT_EQ(model.evaluation[1].k, 10);
  EXPECT_FALSE(model.selection.has_value());

  // Holdout: redo the split and fit, then count the confusion cells by hand.
  const auto full = encode(data);
  const auto parts = split(full, options.split);
  const auto refit = fit(parts.train, options.fit);
  EXPECT_EQ(refit.weights, model.logistic.weights);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < parts.test.rows(); ++i) {
    const Eigen::VectorXd row = parts.test.x.row(static_cast<Eigen::Index>(i)).tail(11).transpose();
    const bool guess = predict_proba(refit, row) >= 0.5;
    const bool actual = parts.test.y(static_cast<Eigen::Index>(i)) > 0.5;
    (actual ? (guess ? cm.tp : cm.fn) : (guess ? cm.fp : cm.tn))++;
  }
  EXPECT_EQ(model.evaluation[0].confusion, cm);
  EXPECT_EQ(model.evaluation[0].metrics, detailed_metrics(cm));
  EXPECT_EQ(model.evaluation[0].rows, parts.test.rows());

  const auto cv = cross_validate(full, 10, options.fit, options.cv_seed);
  EXPECT_EQ(model.evaluation[1].confusion, cv.pooled_confusion);
  EXPECT_EQ(model.evaluation[1].roc.auc, cv.pooled_auc);
  EXPECT_EQ(model.evaluation[1].fold_confusion, cv.fold_confusion);
}

TEST(Pipeline, SelectionKeepsPlantedFeatures) {
  const auto s = generate({.features = 19, .informative = 11, .rows = 2000, .seed = 1});
  TrainOptions options;
  options.select_features = true;
  options.set_seed(7);
  const auto model = train_pipeline(as_clean(s), options, "d");
  ASSERT_TRUE(model.selection.has_value());
  for (auto p : s.planted) {
    const auto& name = s.schema.features[p].name;
    EXPECT_NE(std::find(model.logistic.feature_names.begin(), model.logistic.feature_names.end(), name),
              model.logistic.feature_names.end())
        << name;
  }
  EXPECT_FALSE(model.selection->trace.empty());
}

TEST(Pipeline, SingleClassFails) {
  FeatureSchema schema;
  schema.features = {FeatureDef::binary("Within_City", "No", "Yes")};
  schema.target_name = "Enrolled";
  schema.positive_label = "Yes";
  std::string text = "id,Within_City,Enrolled\n";
  for (int i = 0; i < 20; ++i) text += "R" + std::to_string(i) + "," + (i % 2 ? "Yes" : "No") + ",Yes\n";
  EXPECT_EQ(code_of([&] { train_pipeline(clean(load_csv(text, schema)), {}, "d"); }), ErrorCode::SingleClass);
}

TEST(Prediction, PercentageAndZeroModel) {
  EXPECT_EQ(percentage_of(0.5), 50.0);
  EXPECT_EQ(percentage_of(0.81757), 81.8);
  EXPECT_EQ(percentage_of(0.00049), 0.0);

  auto model = train_pipeline(as_clean(small_synth()), {}, "d");
  model.logistic.weights.setZero();
  model.logistic.intercept = 0.0;
  const auto data = as_clean(small_synth());
  const auto rec = predict_record(model, data.rows[0]);
  EXPECT_EQ(rec.percentage, 50.0);
  EXPECT_EQ(rec.label, Outcome::enrolled);
  EXPECT_EQ(rec.feature_values.size(), 11u);
}

TEST(Prediction, BatchAgreesWithSingle) {
  const auto s = small_synth(12, 150);
  auto model = train_pipeline(as_clean(s), {}, "d");
  const auto out = csv::parse(predict_batch_csv(model, s.csv));
  ASSERT_EQ(out.header[0], "applicant_id");
  ASSERT_EQ(out.header[1], "probability");
  const auto raw = load_csv(s.csv, s.schema);
  ASSERT_EQ(out.rows.size(), raw.rows.size());
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    const auto rec = predict_record(model, raw.rows[i]);
    double parsed = 0.0;
    const auto& cell = out.rows[i][1];
    std::from_chars(cell.data(), cell.data() + cell.size(), parsed);
    EXPECT_EQ(parsed, rec.probability);
    EXPECT_EQ(out.rows[i][0], rec.applicant_id);
    EXPECT_EQ(out.rows[i][3], std::string(to_string(rec.label)));
  }

  const std::string missing_col = "id,OL_Pursued\nX,Yes\n";
  EXPECT_EQ(code_of([&] { predict_batch_csv(model, missing_col); }), ErrorCode::MissingColumn);
}

TEST(Prediction, ApplicantJsonValidation) {
  const auto s = small_synth();
  EXPECT_EQ(code_of([&] { applicant_from_json(s.schema, json{{"Nope", "Yes"}}, "a"); }), ErrorCode::UnknownFeature);
  try {
    applicant_from_json(s.schema, json{{"OL_Pursued", "Maybe"}}, "a");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadLevel);
    EXPECT_EQ(e.field(), "OL_Pursued");
  }
  EXPECT_EQ(code_of([&] { applicant_from_json(s.schema, json{{"Total_Number_of_Siblings", "many"}}, "a"); }),
            ErrorCode::BadNumber);
}

TEST(TrainOptionsJson, RoundTripAndUnknownKeys) {
  TrainOptions o;
  o.select_features = true;
  o.fit.ridge = 0.25;
  o.set_seed(9);
  const TrainOptions back = json(o).get<TrainOptions>();
  EXPECT_EQ(json(back), json(o));
  EXPECT_EQ(code_of([] { json{{"bogus", 1}}.get<TrainOptions>(); }), ErrorCode::BadRequest);
  EXPECT_EQ((json{{"seed", 5}}.get<TrainOptions>().split.seed), 5u);
}
