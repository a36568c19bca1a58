#include "enrollcast/service/http.hpp"

#include <charconv>
#include <condition_variable>
#include <list>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "enrollcast/service/json_io.hpp"

using nlohmann::json;

namespace enrollcast::service {

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::Conflict:
      return 409;
    case ErrorCode::SingleClass:
    case ErrorCode::TooFewRows:
    case ErrorCode::TooFewPerClass:
    case ErrorCode::EmptyAfterClean:
    case ErrorCode::Degenerate:
    case ErrorCode::Empty:
    case ErrorCode::TooManyFeatures:
      return 422;
    case ErrorCode::CorruptModel:
    case ErrorCode::VersionUnsupported:
    case ErrorCode::Io:
      return 500;
    default:
      return 400;
  }
}

namespace {

json error_body(ErrorCode code, const std::string& message, const std::string& field) {
  json body{{"code", to_string(code)}, {"message", message}};
  if (!field.empty()) body["field"] = field;
  return body;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::BadRequest, "request body is not valid JSON");
  return j;
}

std::size_t query_size(const httplib::Request& req, const char* key, std::size_t fallback) {
  if (!req.has_param(key)) return fallback;
  const auto text = req.get_param_value(key);
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::BadRequest, std::string(key) + " must be a non-negative integer", key);
  }
  return value;
}

json record_json(const FeatureSchema& schema, const ApplicantRecord& r) {
  json values = json::object();
  for (std::size_t j = 0; j < schema.features.size(); ++j) values[schema.features[j].name] = r.values[j];
  return json{{"id", r.id}, {"values", std::move(values)}, {"outcome", r.outcome ? json(to_string(*r.outcome)) : json(nullptr)}};
}

struct Filter {
  std::size_t column;
  CellValue value;
};

std::vector<Filter> parse_filters(const FeatureSchema& schema, const httplib::Request& req) {
  std::vector<Filter> filters;
  const auto count = req.get_param_value_count("filter");
  for (std::size_t i = 0; i < count; ++i) {
    const auto text = req.get_param_value("filter", i);
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::BadRequest, "filter must be feature=level, got " + text, "filter");
    const std::string name = text.substr(0, eq);
    const auto rec = applicant_from_json(schema, json{{name, text.substr(eq + 1)}}, {});
    const auto column = *schema.index_of(name);
    filters.push_back({column, rec.values[column]});
  }
  return filters;
}

}  // namespace

class HttpService::Impl {
 public:
  Impl(Store& store, unsigned search_threads) : store_(store), search_threads_(search_threads) { routes(); }

  ~Impl() {
    stop();
    wait_for_jobs();
  }

  httplib::Server server;

  void stop() { server.stop(); }

  void wait_for_jobs() {
    std::unique_lock lock(jobs_mutex_);
    jobs_done_.wait(lock, [&] { return active_jobs_ == 0; });
  }

 private:
  struct Job {
    std::string id;
    std::string dataset_id;
    std::string request_key;
    std::string status = "queued";
    std::string model_id;
    json error;
  };

  Store& store_;
  unsigned search_threads_;

  std::mutex jobs_mutex_;
  std::condition_variable jobs_done_;
  std::map<std::string, Job> jobs_;
  std::size_t next_job_ = 1;
  std::size_t active_jobs_ = 0;
  std::map<std::string, std::unique_ptr<std::mutex>> dataset_locks_;
  std::list<std::jthread> workers_;

  template <class Handler>
  httplib::Server::Handler guarded(Handler handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const Error& e) {
        send_json(res, http_status(e.code()), error_body(e.code(), e.what(), e.field()));
      } catch (const json::exception& e) {
        send_json(res, 400, error_body(ErrorCode::BadRequest, e.what(), {}));
      } catch (const std::exception& e) {
        send_json(res, 500, error_body(ErrorCode::Io, e.what(), {}));
      }
    };
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server.Post("/datasets", guarded([this](const auto& req, auto& res) { post_dataset(req, res); }));
    server.Get("/datasets", guarded([this](const auto&, auto& res) {
      json list = json::array();
      for (const auto& id : store_.dataset_ids()) {
        const auto info = store_.dataset_info(id);
        list.push_back({{"dataset_id", id}, {"rows", info.rows}});
      }
      send_json(res, 200, list);
    }));
    server.Get(R"(/datasets/([0-9a-f]+))", guarded([this](const auto& req, auto& res) {
      const auto info = store_.dataset_info(req.matches[1]);
      const auto data = store_.dataset(info.id);
      send_json(res, 200, dataset_json(info, *data));
    }));
    server.Get(R"(/datasets/([0-9a-f]+)/rows)", guarded([this](const auto& req, auto& res) {
      const auto data = store_.dataset(req.matches[1]);
      const auto offset = query_size(req, "offset", 0);
      const auto limit = query_size(req, "limit", 50);
      json rows = json::array();
      for (std::size_t i = offset; i < data->rows.size() && i < offset + limit; ++i) {
        rows.push_back(record_json(data->schema, data->rows[i]));
      }
      send_json(res, 200, {{"total", data->rows.size()}, {"offset", offset}, {"rows", std::move(rows)}});
    }));
    server.Get(R"(/datasets/([0-9a-f]+)/summary)", guarded([this](const auto& req, auto& res) {
      const auto data = store_.dataset(req.matches[1]);
      if (!req.has_param("by")) throw Error(ErrorCode::BadRequest, "query parameter \"by\" is required", "by");
      const auto by = req.get_param_value("by");
      json groups = json::array();
      for (const auto& g : summarize(*data, by)) groups.push_back({{"label", g.label}, {"count", g.count}});
      send_json(res, 200, {{"dataset_id", req.matches[1]}, {"by", by}, {"total", data->rows.size()}, {"groups", groups}});
    }));

    server.Post("/models", guarded([this](const auto& req, auto& res) { post_model(req, res); }));
    server.Get(R"(/jobs/([A-Za-z0-9-]+))", guarded([this](const auto& req, auto& res) {
      std::lock_guard lock(jobs_mutex_);
      auto it = jobs_.find(req.matches[1]);
      if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "unknown job " + std::string(req.matches[1]), "job_id");
      send_json(res, 200, job_json(it->second));
    }));
    server.Get("/models", guarded([this](const auto&, auto& res) { send_json(res, 200, store_.model_ids()); }));
    server.Get(R"(/models/([0-9a-f]+))", guarded([this](const auto& req, auto& res) {
      send_json(res, 200, model_summary(*store_.model(req.matches[1])));
    }));
    server.Get(R"(/models/([0-9a-f]+)/predictions)",
               guarded([this](const auto& req, auto& res) { get_predictions(req, res); }));
    server.Post(R"(/models/([0-9a-f]+)/predict)", guarded([this](const auto& req, auto& res) {
      const auto model = store_.model(req.matches[1]);
      const json body = parse_body(req);
      if (!body.is_object() || !body.contains("feature_values")) {
        throw Error(ErrorCode::BadRequest, "body must carry \"feature_values\"", "feature_values");
      }
      const std::string id = body.value("applicant_id", std::string("applicant"));
      const auto applicant = applicant_from_json(model->schema, body.at("feature_values"), id);
      send_json(res, 200, predict_record(*model, applicant));
    }));
    server.Post(R"(/models/([0-9a-f]+)/predict-batch)", guarded([this](const auto& req, auto& res) {
      const auto model = store_.model(req.matches[1]);
      res.status = 200;
      res.set_content(predict_batch_csv(*model, req.body), "text/csv");
    }));
  }

  static json dataset_json(const DatasetInfo& info, const CleanDataset& data) {
    return json{{"dataset_id", info.id},
                {"rows", info.rows},
                {"policy", to_string(info.policy)},
                {"clean_report", info.report},
                {"schema", data.schema}};
  }

  void post_dataset(const httplib::Request& req, httplib::Response& res) {
    std::string csv_text;
    std::string schema_text;
    std::string policy = "impute_mode";
    if (req.is_multipart_form_data()) {
      if (!req.has_file("csv")) throw Error(ErrorCode::BadRequest, "multipart part \"csv\" is required", "csv");
      if (!req.has_file("schema")) throw Error(ErrorCode::BadRequest, "multipart part \"schema\" is required", "schema");
      csv_text = req.get_file_value("csv").content;
      schema_text = req.get_file_value("schema").content;
      if (req.has_file("policy")) policy = req.get_file_value("policy").content;
    } else {
      const json body = parse_body(req);
      if (!body.is_object() || !body.contains("csv") || !body.contains("schema")) {
        throw Error(ErrorCode::BadRequest, "body needs \"csv\" and \"schema\"");
      }
      csv_text = body.at("csv").get<std::string>();
      const auto& schema = body.at("schema");
      schema_text = schema.is_string() ? schema.get<std::string>() : schema.dump();
      policy = body.value("policy", policy);
    }
    const auto info = store_.put_dataset(csv_text, schema_text, policy_from_string(policy));
    const auto data = store_.dataset(info.id);
    send_json(res, info.created ? 201 : 200, dataset_json(info, *data));
  }

  void post_model(const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    if (!body.is_object() || !body.contains("dataset_id") || !body.at("dataset_id").is_string()) {
      throw Error(ErrorCode::BadRequest, "body needs a \"dataset_id\" string", "dataset_id");
    }
    const std::string dataset_id = body.at("dataset_id").get<std::string>();
    TrainOptions options = body.contains("options") ? body.at("options").get<TrainOptions>() : TrainOptions{};
    options.search.threads = search_threads_;
    store_.dataset_info(dataset_id);  // 404 before queueing

    const std::string request_key = dataset_id + json(options).dump();
    std::string job_id;
    {
      std::lock_guard lock(jobs_mutex_);
      for (const auto& [id, job] : jobs_) {
        if (job.request_key == request_key && (job.status == "queued" || job.status == "running")) {
          throw Error(ErrorCode::Conflict, "an identical training job is already " + job.status + ": " + id, "job_id");
        }
      }
      job_id = "job-" + std::to_string(next_job_++);
      Job job;
      job.id = job_id;
      job.dataset_id = dataset_id;
      job.request_key = request_key;
      jobs_[job_id] = std::move(job);
      ++active_jobs_;
      auto& lock_ptr = dataset_locks_[dataset_id];
      if (!lock_ptr) lock_ptr = std::make_unique<std::mutex>();
      workers_.emplace_back([this, job_id, dataset_id, options, dataset_lock = lock_ptr.get()] {
        run_job(job_id, dataset_id, options, *dataset_lock);
      });
    }
    send_json(res, 202, {{"job_id", job_id}, {"status", "queued"}});
  }

  void run_job(const std::string& job_id, const std::string& dataset_id, const TrainOptions& options,
               std::mutex& dataset_lock) {
    auto set = [&](auto&& update) {
      std::lock_guard lock(jobs_mutex_);
      update(jobs_.at(job_id));
    };
    {
      std::lock_guard exclusive(dataset_lock);
      set([](Job& j) { j.status = "running"; });
      try {
        const auto data = store_.dataset(dataset_id);
        const auto model_id = store_.put_model(train_pipeline(*data, options, dataset_id));
        set([&](Job& j) {
          j.status = "done";
          j.model_id = model_id;
        });
      } catch (const Error& e) {
        set([&](Job& j) {
          j.status = "failed";
          j.error = error_body(e.code(), e.what(), e.field());
        });
      } catch (const std::exception& e) {
        set([&](Job& j) {
          j.status = "failed";
          j.error = error_body(ErrorCode::Io, e.what(), {});
        });
      }
    }
    std::lock_guard lock(jobs_mutex_);
    --active_jobs_;
    jobs_done_.notify_all();
  }

  static json job_json(const Job& job) {
    json j{{"job_id", job.id}, {"dataset_id", job.dataset_id}, {"status", job.status}};
    if (!job.model_id.empty()) j["model_id"] = job.model_id;
    if (!job.error.is_null()) j["error"] = job.error;
    return j;
  }

  void get_predictions(const httplib::Request& req, httplib::Response& res) {
    const auto model = store_.model(req.matches[1]);
    const std::string dataset_id = req.has_param("dataset") ? req.get_param_value("dataset") : model->dataset_id;
    if (dataset_id.empty()) throw Error(ErrorCode::BadRequest, "query parameter \"dataset\" is required", "dataset");
    const auto data = store_.dataset(dataset_id);
    if (data->schema.features != model->schema.features) {
      throw Error(ErrorCode::BadRequest, "dataset schema does not match the model schema", "dataset");
    }
    const auto filters = parse_filters(model->schema, req);
    json records = json::array();
    std::size_t enrolled = 0;
    for (const auto& row : data->rows) {
      const bool keep = std::ranges::all_of(filters, [&](const Filter& f) { return row.values[f.column] == f.value; });
      if (!keep) continue;
      const auto rec = predict_record(*model, row);
      if (rec.label == Outcome::enrolled) ++enrolled;
      records.push_back(rec);
    }
    json applied = json::object();
    for (const auto& f : filters) applied[model->schema.features[f.column].name] = f.value;
    const auto count = records.size();
    send_json(res, 200,
              {{"model_id", model->model_id},
               {"dataset_id", dataset_id},
               {"filters", std::move(applied)},
               {"count", count},
               {"predicted_enrolled", enrolled},
               {"predicted_not_enrolled", count - enrolled},
               {"records", std::move(records)}});
  }
};

HttpService::HttpService(Store& store, unsigned search_threads)
    : impl_(std::make_unique<Impl>(store, search_threads)) {}

HttpService::~HttpService() = default;

int HttpService::bind(const std::string& host, int port) {
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

int HttpService::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpService::run() { return impl_->server.listen_after_bind(); }

void HttpService::stop() { impl_->stop(); }

void HttpService::wait_for_jobs() { impl_->wait_for_jobs(); }

}  // namespace enrollcast::service
