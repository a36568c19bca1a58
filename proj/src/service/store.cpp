#include "enrollcast/service/store.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "enrollcast/error.hpp"
#include "enrollcast/service/hash.hpp"
#include "enrollcast/service/json_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace enrollcast::service {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string_view to_string(MissingPolicy policy) noexcept {
  return policy == MissingPolicy::drop_rows ? "drop_rows" : "impute_mode";
}

MissingPolicy policy_from_string(std::string_view name) {
  if (name == "drop_rows") return MissingPolicy::drop_rows;
  if (name == "impute_mode") return MissingPolicy::impute_mode;
  throw Error(ErrorCode::BadRequest, "policy must be drop_rows or impute_mode", "policy");
}

Store::Store(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "datasets");
  fs::create_directories(root_ / "models");
}

fs::path Store::resolve_root(std::string_view flag) {
  if (const char* env = std::getenv("ENROLLCAST_STORE"); env && *env) return env;
  if (!flag.empty()) return fs::path(flag);
  return "enrollcast-store";
}

namespace {

bool valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         id.find_first_not_of("0123456789abcdef") == std::string::npos;
}

DatasetInfo info_from_meta(const std::string& id, const json& meta) {
  DatasetInfo info;
  info.id = id;
  info.rows = meta.at("rows").get<std::size_t>();
  info.policy = policy_from_string(meta.at("policy").get<std::string>());
  const auto& r = meta.at("clean_report");
  info.report.input_rows = r.at("input_rows").get<std::size_t>();
  info.report.duplicates_removed = r.at("duplicates_removed").get<std::size_t>();
  info.report.missing_outcome_dropped = r.at("missing_outcome_dropped").get<std::size_t>();
  info.report.rows_dropped = r.at("rows_dropped").get<std::size_t>();
  info.report.cells_imputed = r.at("cells_imputed").get<std::size_t>();
  info.report.output_rows = r.at("output_rows").get<std::size_t>();
  return info;
}

}  // namespace

DatasetInfo Store::put_dataset(std::string_view csv_text, std::string_view schema_json, MissingPolicy policy) {
  const FeatureSchema schema = schema_from_text(schema_json);
  const std::string canonical_schema = json(schema).dump();
  std::string keyed(csv_text);
  keyed += '\0';
  keyed += canonical_schema;
  keyed += '\0';
  keyed += to_string(policy);
  const std::string id = sha256_hex(keyed);

  const fs::path dir = root_ / "datasets" / id;
  std::lock_guard lock(mutex_);
  if (fs::exists(dir / "meta.json")) {
    auto info = info_from_meta(id, json::parse(read_file(dir / "meta.json")));
    info.created = false;
    return info;
  }

  LoadOptions load;
  load.source = "dataset:" + id.substr(0, 12);
  auto cleaned = std::make_shared<CleanDataset>(clean(load_csv(csv_text, schema, load), policy));

  DatasetInfo info;
  info.id = id;
  info.rows = cleaned->rows.size();
  info.report = cleaned->report;
  info.policy = policy;
  info.created = true;

  write_file_atomic(dir / "data.csv", csv_text);
  write_file_atomic(dir / "schema.json", json(schema).dump(2) + "\n");
  const json meta{{"rows", info.rows},
                  {"policy", to_string(policy)},
                  {"clean_report", info.report},
                  {"created_at", utc_timestamp()}};
  write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");
  datasets_[id] = std::move(cleaned);
  return info;
}

DatasetInfo Store::dataset_info(const std::string& id) {
  const fs::path meta = root_ / "datasets" / id / "meta.json";
  if (!valid_id(id) || !fs::exists(meta)) throw Error(ErrorCode::NotFound, "unknown dataset " + id, "dataset_id");
  return info_from_meta(id, json::parse(read_file(meta)));
}

std::shared_ptr<const CleanDataset> Store::dataset(const std::string& id) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = datasets_.find(id); it != datasets_.end()) return it->second;
  }
  const auto info = dataset_info(id);
  const fs::path dir = root_ / "datasets" / id;
  const auto schema = schema_from_text(read_file(dir / "schema.json"));
  LoadOptions load;
  load.source = "dataset:" + id.substr(0, 12);
  auto cleaned = std::make_shared<const CleanDataset>(clean(load_csv(read_file(dir / "data.csv"), schema, load), info.policy));
  std::lock_guard lock(mutex_);
  return datasets_.try_emplace(id, std::move(cleaned)).first->second;
}

std::vector<std::string> Store::dataset_ids() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_ / "datasets")) {
    if (fs::exists(entry.path() / "meta.json")) ids.push_back(entry.path().filename().string());
  }
  std::ranges::sort(ids);
  return ids;
}

std::string Store::put_model(StoredModel model) {
  const std::string text = serialize_model(model);
  const fs::path file = root_ / "models" / (model.model_id + ".json");
  std::lock_guard lock(mutex_);
  if (!fs::exists(file)) {
    if (model.created_at.empty()) model.created_at = utc_timestamp();
    write_file_atomic(file, text);
    write_file_atomic(root_ / "models" / (model.model_id + ".meta.json"),
                      json{{"created_at", model.created_at}}.dump(2) + "\n");
  }
  models_.erase(model.model_id);
  return model.model_id;
}

std::shared_ptr<const StoredModel> Store::model(const std::string& id) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = models_.find(id); it != models_.end()) return it->second;
  }
  const fs::path file = root_ / "models" / (id + ".json");
  if (!valid_id(id) || !fs::exists(file)) throw Error(ErrorCode::NotFound, "unknown model " + id, "model_id");
  auto loaded = std::make_shared<StoredModel>(parse_model(read_file(file)));
  if (loaded->model_id != id) throw Error(ErrorCode::CorruptModel, "model file name does not match its model_id");
  const fs::path meta = root_ / "models" / (id + ".meta.json");
  if (fs::exists(meta)) loaded->created_at = json::parse(read_file(meta)).value("created_at", std::string{});
  std::lock_guard lock(mutex_);
  return models_.try_emplace(id, std::move(loaded)).first->second;
}

std::vector<std::string> Store::model_ids() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_ / "models")) {
    const auto name = entry.path().filename().string();
    if (name.ends_with(".json") && !name.ends_with(".meta.json")) ids.push_back(name.substr(0, name.size() - 5));
  }
  std::ranges::sort(ids);
  return ids;
}

}  // namespace enrollcast::service
