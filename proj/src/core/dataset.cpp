#include "enrollcast/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "enrollcast/csv.hpp"
#include "enrollcast/error.hpp"
#include "enrollcast/random.hpp"

namespace enrollcast {

FeatureDef FeatureDef::binary(std::string name, std::string level0, std::string level1) {
  return {std::move(name), FeatureKind::binary_categorical, std::move(level0), std::move(level1)};
}

FeatureDef FeatureDef::numeric(std::string name) { return {std::move(name), FeatureKind::numeric, {}, {}}; }

void FeatureSchema::validate() const {
  std::unordered_set<std::string_view> seen;
  for (const auto& f : features) {
    if (f.name.empty()) throw Error(ErrorCode::BadSchema, "feature name must be non-empty");
    if (!seen.insert(f.name).second) throw Error(ErrorCode::BadSchema, "duplicate feature name " + f.name, f.name);
    if (f.kind == FeatureKind::binary_categorical && (f.level0.empty() || f.level1.empty() || f.level0 == f.level1)) {
      throw Error(ErrorCode::BadSchema, "binary feature " + f.name + " needs two distinct non-empty levels", f.name);
    }
  }
  if (has_target()) {
    if (seen.contains(target_name)) {
      throw Error(ErrorCode::BadSchema, "target " + target_name + " is also a feature", target_name);
    }
    if (positive_label.empty()) throw Error(ErrorCode::BadSchema, "positive_label must be non-empty");
  }
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  return std::nullopt;
}

const FeatureDef& FeatureSchema::at(std::string_view name) const {
  if (auto i = index_of(name)) return features[*i];
  throw Error(ErrorCode::UnknownFeature, "unknown feature " + std::string(name), std::string(name));
}

std::string cell_text(const CellValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  if (const auto* d = std::get_if<double>(&v)) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *d);
    return std::string(buf, end);
  }
  return {};
}

std::string_view to_string(Outcome o) noexcept { return o == Outcome::enrolled ? "enrolled" : "not_enrolled"; }

namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

CellValue parse_cell(const FeatureDef& f, std::string_view raw, const std::string& row_id) {
  const auto text = trim(raw);
  if (text.empty()) return std::monostate{};
  if (f.kind == FeatureKind::binary_categorical) {
    if (text != f.level0 && text != f.level1) {
      throw Error(ErrorCode::BadLevel,
                  "row " + row_id + ": " + f.name + "=\"" + std::string(text) + "\" is not one of {" + f.level0 +
                      ", " + f.level1 + "}",
                  f.name);
    }
    return std::string(text);
  }
  auto number = parse_number(text);
  if (!number) {
    throw Error(ErrorCode::BadNumber, "row " + row_id + ": " + f.name + "=\"" + std::string(text) + "\" is not a number",
                f.name);
  }
  return *number;
}

using RowKey = std::tuple<std::string, std::vector<CellValue>, std::optional<Outcome>>;

std::size_t dedupe(std::vector<ApplicantRecord>& rows) {
  std::set<RowKey> seen;
  std::vector<ApplicantRecord> kept;
  kept.reserve(rows.size());
  for (auto& r : rows) {
    if (seen.emplace(r.id, r.values, r.outcome).second) kept.push_back(std::move(r));
  }
  const std::size_t removed = rows.size() - kept.size();
  rows = std::move(kept);
  return removed;
}

CellValue fill_value(const FeatureDef& f, std::size_t column, const std::vector<ApplicantRecord>& rows) {
  if (f.kind == FeatureKind::binary_categorical) {
    std::size_t ones = 0;
    std::size_t zeros = 0;
    for (const auto& r : rows) {
      if (const auto* s = std::get_if<std::string>(&r.values[column])) (*s == f.level1 ? ones : zeros)++;
    }
    return ones > zeros ? f.level1 : f.level0;
  }
  std::vector<double> observed;
  for (const auto& r : rows) {
    if (const auto* d = std::get_if<double>(&r.values[column])) observed.push_back(*d);
  }
  if (observed.empty()) return 0.0;
  // Lower median: always an observed value.
  const auto mid = observed.begin() + static_cast<std::ptrdiff_t>((observed.size() - 1) / 2);
  std::nth_element(observed.begin(), mid, observed.end());
  return *mid;
}

std::string format_double(double v) { return cell_text(CellValue{v}); }

}  // namespace

RawDataset load_csv(std::string_view text, const FeatureSchema& schema, const LoadOptions& options) {
  schema.validate();
  const auto table = csv::parse(text);

  std::unordered_map<std::string, std::size_t> column_of;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const std::string name(trim(table.header[c]));
    if (!column_of.emplace(name, c).second) throw Error(ErrorCode::BadCsv, "duplicate header column " + name, name);
  }

  std::vector<std::size_t> feature_columns;
  feature_columns.reserve(schema.features.size());
  for (const auto& f : schema.features) {
    auto it = column_of.find(f.name);
    if (it == column_of.end()) throw Error(ErrorCode::MissingColumn, "CSV header lacks column " + f.name, f.name);
    feature_columns.push_back(it->second);
  }

  std::optional<std::size_t> target_column;
  if (schema.has_target()) {
    if (auto it = column_of.find(schema.target_name); it != column_of.end()) {
      target_column = it->second;
    } else if (options.require_target) {
      throw Error(ErrorCode::MissingColumn, "CSV header lacks target column " + schema.target_name,
                  schema.target_name);
    }
  }
  std::optional<std::size_t> id_column;
  if (auto it = column_of.find(options.id_column); it != column_of.end()) id_column = it->second;

  RawDataset out;
  out.schema = schema;
  out.provenance = {options.source};
  out.rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    ApplicantRecord rec;
    rec.id = id_column ? std::string(trim(cells[*id_column])) : std::to_string(r + 1);
    rec.values.reserve(schema.features.size());
    for (std::size_t j = 0; j < schema.features.size(); ++j) {
      rec.values.push_back(parse_cell(schema.features[j], cells[feature_columns[j]], rec.id));
    }
    if (target_column) {
      const auto t = trim(cells[*target_column]);
      if (!t.empty()) rec.outcome = t == schema.positive_label ? Outcome::enrolled : Outcome::not_enrolled;
    }
    out.rows.push_back(std::move(rec));
  }
  return out;
}

RawDataset join(const RawDataset& primary, const RawDataset& auxiliary, std::string_view key,
                std::string_view id_column) {
  const bool by_id = key == id_column;
  std::optional<std::size_t> primary_key;
  std::optional<std::size_t> aux_key;
  if (!by_id) {
    primary_key = primary.schema.index_of(key);
    aux_key = auxiliary.schema.index_of(key);
    if (!primary_key || !aux_key) {
      throw Error(ErrorCode::KeyMissing, "join key " + std::string(key) + " is not present in both datasets",
                  std::string(key));
    }
  }
  auto key_of = [&](const ApplicantRecord& r, const std::optional<std::size_t>& col) -> CellValue {
    if (by_id) return r.id;
    return r.values[*col];
  };

  std::vector<std::size_t> carried;  // auxiliary feature indices appended to the schema
  RawDataset out;
  out.schema = primary.schema;
  for (std::size_t j = 0; j < auxiliary.schema.features.size(); ++j) {
    if (aux_key && j == *aux_key) continue;
    const auto& f = auxiliary.schema.features[j];
    if (primary.schema.index_of(f.name)) {
      throw Error(ErrorCode::BadSchema, "auxiliary feature " + f.name + " already exists in the primary dataset",
                  f.name);
    }
    out.schema.features.push_back(f);
    carried.push_back(j);
  }
  out.schema.validate();

  std::map<CellValue, const ApplicantRecord*> lookup;
  for (const auto& r : auxiliary.rows) {
    auto k = key_of(r, aux_key);
    if (is_missing(k)) continue;
    if (!lookup.emplace(k, &r).second) {
      throw Error(ErrorCode::DuplicateKey, "auxiliary dataset has several rows for key " + cell_text(k),
                  std::string(key));
    }
  }

  out.rows.reserve(primary.rows.size());
  for (const auto& r : primary.rows) {
    ApplicantRecord joined = r;
    const ApplicantRecord* match = nullptr;
    if (auto k = key_of(r, primary_key); !is_missing(k)) {
      if (auto it = lookup.find(k); it != lookup.end()) match = it->second;
    }
    for (std::size_t j : carried) joined.values.push_back(match ? match->values[j] : CellValue{});
    out.rows.push_back(std::move(joined));
  }
  out.provenance = primary.provenance;
  out.provenance.insert(out.provenance.end(), auxiliary.provenance.begin(), auxiliary.provenance.end());
  return out;
}

CleanDataset clean(const RawDataset& data, MissingPolicy policy) {
  if (!data.schema.has_target()) throw Error(ErrorCode::BadSchema, "cannot clean a dataset without a target column");
  CleanDataset out;
  out.schema = data.schema;
  out.provenance = data.provenance;
  out.report.input_rows = data.rows.size();
  if (data.rows.empty()) throw Error(ErrorCode::EmptyAfterClean, "dataset has no rows");

  auto rows = data.rows;
  out.report.duplicates_removed = dedupe(rows);

  std::erase_if(rows, [&](const ApplicantRecord& r) {
    if (r.outcome) return false;
    ++out.report.missing_outcome_dropped;
    return true;
  });
  out.report.rows_dropped = out.report.missing_outcome_dropped;

  const auto& features = data.schema.features;
  if (policy == MissingPolicy::drop_rows) {
    std::erase_if(rows, [&](const ApplicantRecord& r) {
      if (std::ranges::none_of(r.values, is_missing)) return false;
      ++out.report.rows_dropped;
      return true;
    });
  } else {
    for (std::size_t j = 0; j < features.size(); ++j) {
      const bool any_missing = std::ranges::any_of(rows, [&](const auto& r) { return is_missing(r.values[j]); });
      if (!any_missing) continue;
      const CellValue fill = fill_value(features[j], j, rows);
      for (auto& r : rows) {
        if (is_missing(r.values[j])) {
          r.values[j] = fill;
          ++out.report.cells_imputed;
        }
      }
    }
    // Imputation can make rows identical.
    out.report.duplicates_removed += dedupe(rows);
  }

  if (rows.empty()) throw Error(ErrorCode::EmptyAfterClean, "no rows survive cleaning");
  out.report.output_rows = rows.size();
  out.rows = std::move(rows);
  return out;
}

Eigen::VectorXd encode_row(const FeatureSchema& schema, const std::vector<std::string>& feature_names,
                           const std::vector<CellValue>& values) {
  Eigen::VectorXd row(static_cast<Eigen::Index>(feature_names.size()));
  for (std::size_t j = 0; j < feature_names.size(); ++j) {
    const auto idx = schema.index_of(feature_names[j]);
    if (!idx) throw Error(ErrorCode::UnknownFeature, "unknown feature " + feature_names[j], feature_names[j]);
    const auto& f = schema.features[*idx];
    const auto& v = values.at(*idx);
    if (is_missing(v)) throw Error(ErrorCode::MissingFeature, "missing value for feature " + f.name, f.name);
    double encoded = 0.0;
    if (f.kind == FeatureKind::binary_categorical) {
      const auto* s = std::get_if<std::string>(&v);
      if (!s || (*s != f.level0 && *s != f.level1)) {
        throw Error(ErrorCode::BadLevel, f.name + "=\"" + cell_text(v) + "\" is not a declared level", f.name);
      }
      encoded = *s == f.level1 ? 1.0 : 0.0;
    } else {
      const auto* d = std::get_if<double>(&v);
      if (!d) throw Error(ErrorCode::BadNumber, f.name + " must be numeric", f.name);
      encoded = *d;
    }
    row(static_cast<Eigen::Index>(j)) = encoded;
  }
  return row;
}

DesignMatrix encode(const CleanDataset& data) {
  const auto& schema = data.schema;
  if (!schema.has_target()) throw Error(ErrorCode::BadSchema, "dataset has no target column");
  if (schema.features.empty()) throw Error(ErrorCode::BadSchema, "schema has no features");
  if (data.rows.empty()) throw Error(ErrorCode::Empty, "dataset has no rows");

  DesignMatrix m;
  for (const auto& f : schema.features) m.feature_names.push_back(f.name);
  const auto n = static_cast<Eigen::Index>(data.rows.size());
  const auto d = static_cast<Eigen::Index>(schema.features.size());
  m.x.resize(n, d + 1);
  m.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = data.rows[static_cast<std::size_t>(i)];
    if (!r.outcome) throw Error(ErrorCode::MissingValue, "row " + r.id + " has no outcome", schema.target_name);
    Eigen::VectorXd encoded;
    try {
      encoded = encode_row(schema, m.feature_names, r.values);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingFeature) throw;
      throw Error(ErrorCode::MissingValue, "row " + r.id + ": " + e.what(), e.field());
    }
    m.x(i, 0) = 1.0;
    m.x.row(i).tail(d) = encoded.transpose();
    m.y(i) = *r.outcome == Outcome::enrolled ? 1.0 : 0.0;
  }
  return m;
}

DesignMatrix select_rows(const DesignMatrix& m, const std::vector<std::size_t>& rows) {
  DesignMatrix out;
  out.feature_names = m.feature_names;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), m.x.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(rows[i]);
    out.x.row(static_cast<Eigen::Index>(i)) = m.x.row(src);
    out.y(static_cast<Eigen::Index>(i)) = m.y(src);
  }
  return out;
}

DesignMatrix select_columns(const DesignMatrix& m, const std::vector<std::size_t>& features) {
  DesignMatrix out;
  out.y = m.y;
  out.x.resize(m.x.rows(), static_cast<Eigen::Index>(features.size()) + 1);
  out.x.col(0) = m.x.col(0);
  for (std::size_t j = 0; j < features.size(); ++j) {
    out.x.col(static_cast<Eigen::Index>(j) + 1) = m.x.col(static_cast<Eigen::Index>(features[j]) + 1);
    out.feature_names.push_back(m.feature_names.at(features[j]));
  }
  return out;
}

Split split(const DesignMatrix& m, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorCode::BadRequest, "train_fraction must lie in (0, 1)");
  }
  const std::size_t n = m.rows();
  if (n < 2) throw Error(ErrorCode::TooFewRows, "split needs at least 2 rows");
  const auto train_total = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  if (train_total == 0 || train_total == n) {
    throw Error(ErrorCode::TooFewRows, "split of " + std::to_string(n) + " rows leaves one side empty");
  }

  std::vector<std::vector<std::size_t>> groups;
  if (spec.stratified) {
    groups.resize(2);
    for (std::size_t i = 0; i < n; ++i) groups[m.y(static_cast<Eigen::Index>(i)) > 0.5 ? 1 : 0].push_back(i);
  } else {
    groups.resize(1);
    for (std::size_t i = 0; i < n; ++i) groups[0].push_back(i);
  }

  // Largest remainder: floor every quota, hand the leftover rows to the
  // groups with the largest fractional parts (lower group first on ties).
  std::vector<std::size_t> take(groups.size());
  std::vector<double> remainder(groups.size());
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double quota = spec.train_fraction * static_cast<double>(groups[g].size());
    take[g] = static_cast<std::size_t>(std::floor(quota + 1e-9));
    remainder[g] = quota - static_cast<double>(take[g]);
    assigned += take[g];
  }
  std::vector<std::size_t> order(groups.size());
  for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t g : order) {
    if (assigned >= train_total) break;
    if (take[g] < groups[g].size()) {
      ++take[g];
      ++assigned;
    }
  }

  Rng rng(spec.seed);
  Split out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    rng.shuffle(std::span(groups[g]));
    out.train_rows.insert(out.train_rows.end(), groups[g].begin(), groups[g].begin() + static_cast<std::ptrdiff_t>(take[g]));
    out.test_rows.insert(out.test_rows.end(), groups[g].begin() + static_cast<std::ptrdiff_t>(take[g]), groups[g].end());
  }
  std::ranges::sort(out.train_rows);
  std::ranges::sort(out.test_rows);
  out.train = select_rows(m, out.train_rows);
  out.test = select_rows(m, out.test_rows);
  return out;
}

std::vector<GroupCount> summarize(const CleanDataset& data, std::string_view by) {
  const auto idx = data.schema.index_of(by);
  if (!idx) throw Error(ErrorCode::UnknownFeature, "unknown feature " + std::string(by), std::string(by));
  const auto& f = data.schema.features[*idx];

  std::map<std::string, std::size_t> counts;
  if (f.kind == FeatureKind::binary_categorical) {
    for (const auto& r : data.rows) ++counts[cell_text(r.values[*idx])];
  } else {
    std::vector<double> values;
    values.reserve(data.rows.size());
    for (const auto& r : data.rows) values.push_back(std::get<double>(r.values[*idx]));
    auto sorted = values;
    std::ranges::sort(sorted);
    // Decile edges by rank, collapsed where neighbouring deciles coincide.
    std::vector<double> edges;
    for (std::size_t k = 0; k < 10 && !sorted.empty(); ++k) {
      const double e = sorted[k * sorted.size() / 10];
      if (edges.empty() || e > edges.back()) edges.push_back(e);
    }
    const double max = sorted.empty() ? 0.0 : sorted.back();
    auto label = [&](std::size_t b) {
      if (b + 1 < edges.size()) return "[" + format_double(edges[b]) + ", " + format_double(edges[b + 1]) + ")";
      return "[" + format_double(edges[b]) + ", " + format_double(max) + "]";
    };
    for (double v : values) {
      const auto b = static_cast<std::size_t>(std::ranges::upper_bound(edges, v) - edges.begin()) - 1;
      ++counts[label(b)];
    }
  }

  std::vector<GroupCount> out;
  for (auto& [label, count] : counts) out.push_back({label, count});
  std::ranges::stable_sort(out, [](const GroupCount& a, const GroupCount& b) { return a.count > b.count; });
  return out;
}

}  // namespace enrollcast
