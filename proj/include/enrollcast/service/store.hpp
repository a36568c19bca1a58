#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "enrollcast/dataset.hpp"
#include "enrollcast/service/pipeline.hpp"

namespace enrollcast::service {

struct DatasetInfo {
  std::string id;
  std::size_t rows = 0;
  CleanReport report;
  MissingPolicy policy = MissingPolicy::impute_mode;
  // False when identical bytes were already registered.
  bool created = false;
};

/// Content-addressed datasets and models under one directory:
///   datasets/<id>/{data.csv,schema.json,meta.json}
///   models/<id>.json, models/<id>.meta.json
/// Entries are immutable once written; loaded entries are cached.
class Store {
 public:
  explicit Store(std::filesystem::path root);

  /// $ENROLLCAST_STORE when set, else `flag`, else "enrollcast-store".
  static std::filesystem::path resolve_root(std::string_view flag);

  const std::filesystem::path& root() const { return root_; }

  DatasetInfo put_dataset(std::string_view csv_text, std::string_view schema_json,
                          MissingPolicy policy = MissingPolicy::impute_mode);
  std::shared_ptr<const CleanDataset> dataset(const std::string& id);
  DatasetInfo dataset_info(const std::string& id);
  std::vector<std::string> dataset_ids() const;

  /// Writes the model file (if new) and returns its content id.
  std::string put_model(StoredModel model);
  std::shared_ptr<const StoredModel> model(const std::string& id);
  std::vector<std::string> model_ids() const;

 private:
  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const CleanDataset>> datasets_;
  std::map<std::string, std::shared_ptr<const StoredModel>> models_;
};

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string utc_timestamp();
std::string_view to_string(MissingPolicy policy) noexcept;
MissingPolicy policy_from_string(std::string_view name);

}  // namespace enrollcast::service
