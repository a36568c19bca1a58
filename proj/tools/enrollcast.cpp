#include <filesystem>
#include <iostream>
#include <iterator>
#include <string>

#include <CLI11.hpp>

#include "enrollcast/error.hpp"
#include "enrollcast/service/http.hpp"
#include "enrollcast/service/json_io.hpp"
#include "enrollcast/service/pipeline.hpp"
#include "enrollcast/service/store.hpp"
#include "enrollcast/synth.hpp"

using nlohmann::json;
using namespace enrollcast;
using namespace enrollcast::service;

namespace {

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

std::string read_stdin() {
  return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
}

// A model argument is a file path, or failing that a model id in the store.
StoredModel load_model_arg(const std::string& arg, const std::string& store_flag) {
  if (std::filesystem::exists(arg)) return parse_model(read_file(arg));
  Store store(Store::resolve_root(store_flag));
  return *store.model(arg);
}

struct TrainArgs {
  std::string dataset;
  std::string data;
  std::string schema;
  std::string policy = "impute_mode";
  bool select = false;
  double ridge = 1e-8;
  int folds = 10;
  int merit_folds = 5;
  std::size_t stale = 5;
  std::string direction = "backward";
  double split = 0.8;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  unsigned threads = 1;
  std::string out;
};

int run_train(const TrainArgs& a, const std::string& store_flag) {
  Store store(Store::resolve_root(store_flag));
  std::string dataset_id = a.dataset;
  if (a.dataset == "-") {
    const json bundle = json::parse(read_stdin(), nullptr, false);
    if (bundle.is_discarded() || !bundle.is_object() || !bundle.contains("csv") || !bundle.contains("schema")) {
      throw Error(ErrorCode::BadRequest, "stdin must hold a JSON object with \"csv\" and \"schema\"", "dataset");
    }
    dataset_id = store.put_dataset(bundle.at("csv").get<std::string>(), bundle.at("schema").dump(),
                                   policy_from_string(a.policy)).id;
  } else if (a.dataset.empty()) {
    if (a.data.empty() || a.schema.empty()) {
      throw Error(ErrorCode::BadRequest, "give --dataset, or --data with --schema", "dataset");
    }
    dataset_id = store.put_dataset(read_file(a.data), read_file(a.schema), policy_from_string(a.policy)).id;
  }

  TrainOptions options;
  options.select_features = a.select;
  options.fit.ridge = a.ridge;
  options.cv_k = a.folds;
  options.search.merit_folds = a.merit_folds;
  options.search.stale_limit = a.stale;
  options.search.direction = a.direction == "forward" ? Direction::forward : Direction::backward;
  options.search.threads = a.threads;
  options.split.train_fraction = a.split;
  options.threshold = a.threshold;
  options.set_seed(a.seed);

  StoredModel model = train_pipeline(*store.dataset(dataset_id), options, dataset_id);
  model.created_at = utc_timestamp();
  const std::string text = serialize_model(model);
  if (!a.out.empty()) write_file_atomic(a.out, text);
  store.put_model(model);
  print(model_summary(model));
  return 0;
}

int run_evaluate(const std::string& model_arg, const std::string& data_path, const std::string& policy,
                 const std::string& store_flag) {
  const StoredModel model = load_model_arg(model_arg, store_flag);
  const auto raw = load_csv(read_file(data_path), model.schema, LoadOptions{"id", true, data_path});
  const DesignMatrix full = encode(clean(raw, policy_from_string(policy)));
  std::vector<std::size_t> columns;
  for (const auto& name : model.logistic.feature_names) columns.push_back(*model.schema.index_of(name));
  const auto report = evaluate_model(model.logistic, select_columns(full, columns), model.options.threshold, "external");
  print(json{{"model_id", model.model_id}, {"evaluation", report}});
  return 0;
}

int run_predict(const std::string& model_arg, const std::string& input, const std::string& store_flag) {
  const StoredModel model = load_model_arg(model_arg, store_flag);
  const std::string text = input == "-" ? read_stdin() : read_file(input);
  const json body = json::parse(text, nullptr, false);
  if (body.is_discarded()) throw Error(ErrorCode::BadRequest, "input is not valid JSON", "input");

  auto one = [&](const json& item, std::size_t index) {
    if (!item.is_object()) throw Error(ErrorCode::BadRequest, "each input must be a JSON object", "input");
    // Accept either the API body {feature_values, applicant_id} or a bare {feature: value} object.
    const bool wrapped = item.contains("feature_values");
    const json& values = wrapped ? item.at("feature_values") : item;
    const std::string id = wrapped ? item.value("applicant_id", std::to_string(index + 1)) : std::to_string(index + 1);
    return json(predict_record(model, applicant_from_json(model.schema, values, id)));
  };
  if (body.is_array()) {
    json out = json::array();
    for (std::size_t i = 0; i < body.size(); ++i) out.push_back(one(body[i], i));
    print(out);
  } else {
    print(one(body, 0));
  }
  return 0;
}

int run_synth(const SynthConfig& config, const std::string& csv_out, const std::string& schema_out) {
  const auto data = generate(config);
  json planted_names = json::array();
  for (auto p : data.planted) planted_names.push_back(data.schema.features[p].name);
  if (!csv_out.empty()) write_file_atomic(csv_out, data.csv);
  if (!schema_out.empty()) write_file_atomic(schema_out, json(data.schema).dump(2) + "\n");
  print(json{{"schema", data.schema},
             {"planted", data.planted},
             {"planted_names", planted_names},
             {"true_weights", data.true_weights},
             {"true_intercept", data.true_intercept},
             {"rows", config.rows},
             {"seed", config.seed},
             {"csv", data.csv}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"enrollcast: enrolment prediction from applicant records"};
  app.require_subcommand(1);
  std::string store_flag;

  auto* ingest = app.add_subcommand("ingest", "Register a CSV dataset in the store");
  std::string ingest_data, ingest_schema, ingest_policy = "impute_mode";
  ingest->add_option("--data", ingest_data, "CSV file")->required();
  ingest->add_option("--schema", ingest_schema, "Schema JSON file")->required();
  ingest->add_option("--policy", ingest_policy, "drop_rows or impute_mode");
  ingest->add_option("--store", store_flag, "Store directory");

  auto* train = app.add_subcommand("train", "Train, evaluate and save a model");
  TrainArgs targs;
  train->add_option("--dataset", targs.dataset, "Dataset id, or - for a synth bundle on stdin");
  train->add_option("--data", targs.data, "CSV file to ingest first");
  train->add_option("--schema", targs.schema, "Schema JSON for --data");
  train->add_option("--policy", targs.policy, "Missing-value policy for ingest");
  train->add_flag("--select", targs.select, "Run best-first feature selection");
  train->add_option("--ridge", targs.ridge);
  train->add_option("--folds", targs.folds, "Cross-validation folds");
  train->add_option("--merit-folds", targs.merit_folds, "Folds for the selection merit");
  train->add_option("--stale", targs.stale, "Non-improving expansions before the search stops");
  train->add_option("--direction", targs.direction)->check(CLI::IsMember({"backward", "forward"}));
  train->add_option("--split", targs.split, "Training fraction");
  train->add_option("--seed", targs.seed);
  train->add_option("--threshold", targs.threshold);
  train->add_option("--threads", targs.threads, "Selection worker threads");
  train->add_option("--out", targs.out, "Model file to write");
  train->add_option("--store", store_flag, "Store directory");

  auto* evaluate = app.add_subcommand("evaluate", "Score a model on a labelled CSV");
  std::string eval_model, eval_data, eval_policy = "impute_mode";
  evaluate->add_option("--model", eval_model, "Model file or stored model id")->required();
  evaluate->add_option("--data", eval_data, "Labelled CSV file")->required();
  evaluate->add_option("--policy", eval_policy, "drop_rows or impute_mode");
  evaluate->add_option("--store", store_flag, "Store directory");

  auto* predict = app.add_subcommand("predict", "Predict one applicant, or an array of them");
  std::string pred_model, pred_input;
  predict->add_option("--model", pred_model, "Model file or stored model id")->required();
  predict->add_option("--input", pred_input, "JSON file, or - for stdin")->required();
  predict->add_option("--store", store_flag, "Store directory");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  int port = 8080;
  std::string host = "127.0.0.1";
  unsigned serve_threads = 1;
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--threads", serve_threads, "Selection worker threads per job");
  serve->add_option("--store", store_flag, "Store directory");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic applicant dataset");
  SynthConfig sconfig;
  std::string csv_out, schema_out;
  synth->add_option("--features", sconfig.features);
  synth->add_option("--informative", sconfig.informative);
  synth->add_option("--rows", sconfig.rows);
  synth->add_option("--seed", sconfig.seed);
  synth->add_option("--missing-rate", sconfig.missing_rate);
  synth->add_option("--csv-out", csv_out, "Also write the CSV here");
  synth->add_option("--schema-out", schema_out, "Also write the schema JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*ingest) {
      Store store(Store::resolve_root(store_flag));
      const auto info = store.put_dataset(read_file(ingest_data), read_file(ingest_schema),
                                          policy_from_string(ingest_policy));
      print(json{{"dataset_id", info.id},
                 {"rows", info.rows},
                 {"policy", to_string(info.policy)},
                 {"clean_report", info.report},
                 {"created", info.created}});
      return 0;
    }
    if (*train) return run_train(targs, store_flag);
    if (*evaluate) return run_evaluate(eval_model, eval_data, eval_policy, store_flag);
    if (*predict) return run_predict(pred_model, pred_input, store_flag);
    if (*synth) return run_synth(sconfig, csv_out, schema_out);
    if (*serve) {
      Store store(Store::resolve_root(store_flag));
      HttpService service(store, serve_threads);
      if (service.bind(host, port) < 0) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
      std::cerr << "listening on " << host << ":" << port << ", store " << store.root() << "\n";
      service.run();
      return 0;
    }
  } catch (const Error& e) {
    json body{{"code", to_string(e.code())}, {"message", e.what()}};
    if (!e.field().empty()) body["field"] = e.field();
    print(json{{"error", body}});
    return 2;
  } catch (const std::exception& e) {
    print(json{{"error", {{"code", "Io"}, {"message", e.what()}}}});
    return 2;
  }
  return 1;
}
