#include "mabs/pool.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <ostream>
#include <sstream>

namespace mabs {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e && !s.empty();
}

bool parse_id(const std::string& s, SampleId& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e && !s.empty();
}

}  // namespace

SourcePool::SourcePool(std::vector<MetaColumn> schema, std::size_t feature_dim)
    : schema_(std::move(schema)), feature_dim_(feature_dim) {
  if (feature_dim_ == 0) throw std::invalid_argument("feature dimension must be positive");
  categories_.resize(schema_.size());
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    for (std::size_t j = i + 1; j < schema_.size(); ++j) {
      if (schema_[i].name == schema_[j].name)
        throw std::invalid_argument("duplicate metadata column '" + schema_[i].name + "'");
    }
  }
}

bool SourcePool::has_column(std::string_view name) const {
  for (const auto& c : schema_)
    if (c.name == name) return true;
  return false;
}

std::size_t SourcePool::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < schema_.size(); ++i)
    if (schema_[i].name == name) return i;
  throw std::invalid_argument("unknown metadata column '" + std::string(name) + "'");
}

const SourcePool::HiddenSample& SourcePool::at(SampleId id) const {
  auto it = samples_.find(id);
  if (it == samples_.end())
    throw std::invalid_argument("unknown sample id " + std::to_string(id));
  return it->second;
}

bool SourcePool::is_revealed(SampleId id) const { return at(id).revealed; }

double SourcePool::meta_value(SampleId id, std::size_t column) const {
  if (column >= schema_.size()) throw std::invalid_argument("metadata column index out of range");
  return at(id).meta[column];
}

Revealed SourcePool::reveal(SampleId id) {
  auto it = samples_.find(id);
  if (it == samples_.end())
    throw std::invalid_argument("unknown sample id " + std::to_string(id));
  if (it->second.revealed)
    throw std::logic_error("sample " + std::to_string(id) + " already revealed");
  it->second.revealed = true;
  ++reveal_count_;
  return Revealed{it->second.features, it->second.label};
}

SourcePool SourcePool::subset(std::span<const SampleId> keep) const {
  SourcePool out(schema_, feature_dim_);
  out.categories_ = categories_;
  for (SampleId id : keep) {
    const HiddenSample& s = at(id);
    out.order_.push_back(id);
    out.samples_.emplace(id, HiddenSample{s.meta, s.features, s.label, false});
  }
  if (out.order_.size() != out.samples_.size())
    throw std::invalid_argument("subset ids contain duplicates");
  return out;
}

const std::vector<std::string>& SourcePool::categories(std::size_t column) const {
  if (column >= schema_.size()) throw std::invalid_argument("metadata column index out of range");
  return categories_[column];
}

std::optional<double> SourcePool::category_code(std::size_t column,
                                                std::string_view value) const {
  const auto& dict = categories(column);
  for (std::size_t i = 0; i < dict.size(); ++i)
    if (dict[i] == value) return static_cast<double>(i);
  return std::nullopt;
}

std::string SourcePool::format_meta(std::size_t column, double value) const {
  if (column >= schema_.size()) throw std::invalid_argument("metadata column index out of range");
  if (schema_[column].kind == MetaKind::numeric) return fmt_double(value);
  auto idx = static_cast<std::size_t>(value);
  const auto& dict = categories_[column];
  if (value < 0 || idx >= dict.size() || static_cast<double>(idx) != value)
    throw std::invalid_argument("invalid category code in column '" + schema_[column].name + "'");
  return dict[idx];
}

double SourcePool::encode_category(std::size_t column, std::string_view value) {
  if (column >= schema_.size()) throw std::invalid_argument("metadata column index out of range");
  if (schema_[column].kind != MetaKind::categorical)
    throw std::invalid_argument("column '" + schema_[column].name + "' is not categorical");
  auto& dict = categories_[column];
  for (std::size_t i = 0; i < dict.size(); ++i)
    if (dict[i] == value) return static_cast<double>(i);
  dict.emplace_back(value);
  return static_cast<double>(dict.size() - 1);
}

void SourcePool::add_sample(SampleId id, std::vector<double> meta,
                            std::vector<double> features, double label) {
  if (samples_.count(id)) throw std::invalid_argument("duplicate id " + std::to_string(id));
  if (meta.size() != schema_.size())
    throw std::invalid_argument("metadata width mismatch for sample " + std::to_string(id));
  if (features.size() != feature_dim_)
    throw std::invalid_argument("feature width mismatch for sample " + std::to_string(id));
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    if (schema_[c].kind != MetaKind::categorical) continue;
    auto idx = static_cast<std::size_t>(meta[c]);
    if (meta[c] < 0 || idx >= categories_[c].size() || static_cast<double>(idx) != meta[c])
      throw std::invalid_argument("invalid category code in column '" + schema_[c].name +
                                  "' for sample " + std::to_string(id));
  }
  order_.push_back(id);
  samples_.emplace(id, HiddenSample{std::move(meta), std::move(features), label, false});
}

SourcePool generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  std::vector<std::string> problems;
  if (cfg.feature_dim < 1) problems.push_back("feature_dim must be >= 1");
  if (cfg.diagnosis_count < 1) problems.push_back("diagnosis_count must be >= 1");
  if (cfg.datasets.empty()) problems.push_back("at least one dataset is required");
  for (std::size_t k = 0; k < cfg.datasets.size(); ++k) {
    const DatasetSpec& d = cfg.datasets[k];
    std::string who = "dataset '" + d.name + "'";
    if (d.name.empty()) {
      who = "dataset #" + std::to_string(k);
      problems.push_back(who + ": name must be non-empty");
    }
    if (d.samples < 1) problems.push_back(who + ": samples must be >= 1");
    if (!(d.age_hi > d.age_lo)) problems.push_back(who + ": age range must be non-degenerate");
    if (!(d.noise >= 0)) problems.push_back(who + ": noise must be >= 0");
    if (!(d.distortion >= 0 && d.distortion <= 1))
      problems.push_back(who + ": distortion must be in [0, 1]");
    for (std::size_t j = k + 1; j < cfg.datasets.size(); ++j)
      if (!d.name.empty() && d.name == cfg.datasets[j].name)
        problems.push_back("duplicate dataset name '" + d.name + "'");
  }
  if (!problems.empty()) {
    std::string msg = "invalid synthetic config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }

  const auto m = static_cast<std::size_t>(cfg.feature_dim);
  std::vector<MetaColumn> schema = {
      {"dataset", MetaKind::categorical},
      {"sex", MetaKind::categorical},
      {"diagnosis", MetaKind::categorical},
      {"age", MetaKind::numeric},
  };
  SourcePool pool(std::move(schema), m);
  for (const auto& d : cfg.datasets) pool.encode_category(0, d.name);
  pool.encode_category(1, "female");
  pool.encode_category(1, "male");
  for (int i = 0; i < cfg.diagnosis_count; ++i)
    pool.encode_category(2, "dx" + std::to_string(i));

  Rng rng = make_rng(seed, {fnv1a("synthetic")});
  std::normal_distribution<double> stdnorm(0.0, 1.0);

  // Shared ground-truth direction: the label signal lives along w.
  std::vector<double> w(m);
  double wnorm2 = 0.0;
  for (auto& wi : w) {
    wi = stdnorm(rng);
    wnorm2 += wi * wi;
  }
  if (wnorm2 <= 0) wnorm2 = 1.0;

  SampleId id = 0;
  std::vector<double> x(m), z(m);
  for (std::size_t k = 0; k < cfg.datasets.size(); ++k) {
    const DatasetSpec& d = cfg.datasets[k];
    std::uniform_real_distribution<double> age_dist(d.age_lo, d.age_hi);
    std::uniform_int_distribution<int> sex_dist(0, 1);
    std::uniform_int_distribution<int> dx_dist(0, cfg.diagnosis_count - 1);
    const double center = 0.5 * (d.age_lo + d.age_hi);
    // Distorted datasets blend the signal back toward the range center and
    // shrink the whole feature vector, so their rows carry little usable
    // information instead of loud contradictory information.
    const double keep = 1.0 - d.distortion;
    const double amp = 1.0 - 0.8 * d.distortion;
    for (int i = 0; i < d.samples; ++i) {
      const double age = age_dist(rng);
      const double signal = center + keep * (age - center) + d.noise * stdnorm(rng);
      double wz = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        z[j] = stdnorm(rng);
        wz += w[j] * z[j];
      }
      const double along = (signal - center - wz) / wnorm2;
      for (std::size_t j = 0; j < m; ++j) x[j] = amp * (z[j] + along * w[j]);
      const double sex = sex_dist(rng);
      const double dx = dx_dist(rng);
      pool.add_sample(id++, {static_cast<double>(k), sex, dx, age}, x, age);
    }
  }
  return pool;
}

namespace {

struct StagedRow {
  SampleId id;
  std::vector<double> meta_raw;            // numeric values; NaN for categoricals
  std::vector<std::string> meta_category;  // category text; empty for numerics
  std::vector<double> features;
  double label;
};

}  // namespace

SourcePool load_pool_csv(const std::filesystem::path& path,
                         const std::vector<MetaColumn>& schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pool file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw ConfigError("pool file '" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> problems;
  const auto header = split_csv_line(line);
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t id_col = npos, label_col = npos;
  std::vector<std::size_t> meta_cols(schema.size(), npos);
  std::vector<std::size_t> feat_cols;  // feature index -> csv column

  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h == "id") {
      if (id_col != npos) problems.push_back("duplicate column 'id'");
      id_col = c;
    } else if (h == "label") {
      if (label_col != npos) problems.push_back("duplicate column 'label'");
      label_col = c;
    } else if (h.rfind("meta:", 0) == 0) {
      const std::string name = h.substr(5);
      std::size_t s = npos;
      for (std::size_t i = 0; i < schema.size(); ++i)
        if (schema[i].name == name) s = i;
      if (s == npos) {
        problems.push_back("unexpected metadata column '" + name + "'");
      } else if (meta_cols[s] != npos) {
        problems.push_back("duplicate column '" + h + "'");
      } else {
        meta_cols[s] = c;
      }
    } else if (h.rfind("feat:", 0) == 0) {
      const std::string tail = h.substr(5);
      std::size_t k = npos;
      auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), k);
      if (ec != std::errc{} || p != tail.data() + tail.size() || tail.empty() || k >= 100000) {
        problems.push_back("malformed feature column '" + h + "'");
        continue;
      }
      if (feat_cols.size() <= k) feat_cols.resize(k + 1, npos);
      if (feat_cols[k] != npos)
        problems.push_back("duplicate column '" + h + "'");
      else
        feat_cols[k] = c;
    } else {
      problems.push_back("unexpected column '" + h + "'");
    }
  }
  if (id_col == npos) problems.push_back("id column missing");
  if (label_col == npos) problems.push_back("label column missing");
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (meta_cols[i] == npos)
      problems.push_back("metadata column '" + schema[i].name + "' missing");
  if (feat_cols.empty()) problems.push_back("no feature columns (feat:0..feat:k-1)");
  for (std::size_t k = 0; k < feat_cols.size(); ++k)
    if (feat_cols[k] == npos)
      problems.push_back("feature column 'feat:" + std::to_string(k) + "' missing");

  std::vector<StagedRow> rows;
  if (problems.empty()) {
    std::unordered_map<SampleId, bool> ids_seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      const std::string row = "row " + std::to_string(lineno);
      if (fields.size() != header.size()) {
        problems.push_back(row + ": expected " + std::to_string(header.size()) +
                           " fields, got " + std::to_string(fields.size()));
        continue;
      }
      StagedRow staged;
      bool ok = true;
      if (!parse_id(fields[id_col], staged.id)) {
        problems.push_back(row + ": bad id '" + fields[id_col] + "'");
        ok = false;
      } else if (ids_seen.count(staged.id)) {
        problems.push_back(row + ": duplicate id " + std::to_string(staged.id));
        ok = false;
      } else {
        ids_seen.emplace(staged.id, true);
      }
      if (!parse_double(fields[label_col], staged.label)) {
        problems.push_back(row + ": bad label '" + fields[label_col] + "'");
        ok = false;
      }
      staged.meta_raw.assign(schema.size(), 0.0);
      staged.meta_category.assign(schema.size(), "");
      for (std::size_t i = 0; i < schema.size(); ++i) {
        const std::string& cell = fields[meta_cols[i]];
        if (cell.empty()) {
          problems.push_back(row + ": empty value in column 'meta:" + schema[i].name + "'");
          ok = false;
        } else if (schema[i].kind == MetaKind::numeric) {
          if (!parse_double(cell, staged.meta_raw[i])) {
            problems.push_back(row + ": bad value '" + cell + "' in column 'meta:" +
                               schema[i].name + "'");
            ok = false;
          }
        } else {
          staged.meta_category[i] = cell;
        }
      }
      staged.features.resize(feat_cols.size());
      for (std::size_t k = 0; k < feat_cols.size(); ++k) {
        const std::string& cell = fields[feat_cols[k]];
        if (!parse_double(cell, staged.features[k])) {
          problems.push_back(row + ": bad value '" + cell + "' in column 'feat:" +
                             std::to_string(k) + "'");
          ok = false;
        }
      }
      if (ok) rows.push_back(std::move(staged));
    }
    if (problems.empty() && rows.empty())
      problems.push_back("pool file has no data rows");
  }

  if (!problems.empty()) {
    std::string msg = "invalid pool file '" + path.string() + "':";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }

  SourcePool pool(schema, feat_cols.size());
  for (auto& r : rows) {
    std::vector<double> meta(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i)
      meta[i] = schema[i].kind == MetaKind::numeric
                    ? r.meta_raw[i]
                    : pool.encode_category(i, r.meta_category[i]);
    pool.add_sample(r.id, std::move(meta), std::move(r.features), r.label);
  }
  return pool;
}

void write_pool_csv(SourcePool pool, std::ostream& out) {
  out << "id,label";
  for (const auto& c : pool.schema()) out << ",meta:" << c.name;
  for (std::size_t k = 0; k < pool.feature_dim(); ++k) out << ",feat:" << k;
  out << "\n";
  const std::vector<SampleId> ids = pool.ids();
  for (SampleId id : ids) {
    const Revealed r = pool.reveal(id);
    out << id << "," << fmt_double(r.label);
    for (std::size_t c = 0; c < pool.schema().size(); ++c)
      out << "," << pool.format_meta(c, pool.meta_value(id, c));
    for (double f : r.features) out << "," << fmt_double(f);
    out << "\n";
  }
}

}  // namespace mabs
