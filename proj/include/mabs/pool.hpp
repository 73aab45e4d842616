#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mabs/common.hpp"

namespace mabs {

enum class MetaKind { categorical, numeric };

struct MetaColumn {
  std::string name;
  MetaKind kind;
};

using SampleId = std::int64_t;

struct Revealed {
  std::vector<double> features;
  double label;
};

// Pool of samples whose features/label are hidden until explicitly revealed.
// Metadata is free to read; feature vectors and labels are only reachable
// through reveal(), which counts. Revealing twice is an error: acquisition
// cost is paid once per sample, callers must cache what they pulled.
class SourcePool {
 public:
  SourcePool(std::vector<MetaColumn> schema, std::size_t feature_dim);

  const std::vector<MetaColumn>& schema() const { return schema_; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t size() const { return order_.size(); }
  std::size_t reveal_count() const { return reveal_count_; }
  const std::vector<SampleId>& ids() const { return order_; }

  bool has_column(std::string_view name) const;
  // Index into schema(); throws std::invalid_argument for unknown names.
  std::size_t column_index(std::string_view name) const;

  bool contains(SampleId id) const { return samples_.count(id) != 0; }
  bool is_revealed(SampleId id) const;
  std::size_t unrevealed_count() const { return size() - reveal_count_; }

  double meta_value(SampleId id, std::size_t column) const;
  // Reveal features and label; increments the reveal counter. Throws
  // std::invalid_argument on unknown ids, std::logic_error on double reveal.
  Revealed reveal(SampleId id);

  // New pool over the given ids with all reveal state cleared.
  SourcePool subset(std::span<const SampleId> keep) const;

  // Categorical columns store values as dictionary codes; these translate.
  const std::vector<std::string>& categories(std::size_t column) const;
  std::optional<double> category_code(std::size_t column, std::string_view value) const;
  std::string format_meta(std::size_t column, double value) const;

  // Ingest path. Metadata uses dictionary codes for categorical columns;
  // use encode_category to obtain them.
  double encode_category(std::size_t column, std::string_view value);
  void add_sample(SampleId id, std::vector<double> meta, std::vector<double> features,
                  double label);

 private:
  struct HiddenSample {
    std::vector<double> meta;
    std::vector<double> features;
    double label;
    bool revealed;
  };

  const HiddenSample& at(SampleId id) const;

  std::vector<MetaColumn> schema_;
  std::vector<std::vector<std::string>> categories_;  // empty for numeric columns
  std::size_t feature_dim_;
  std::vector<SampleId> order_;
  std::unordered_map<SampleId, HiddenSample> samples_;
  std::size_t reveal_count_ = 0;
};

// One synthetic acquisition site. Labels are uniform on [age_lo, age_hi] and
// features carry the label signal along a shared direction. `distortion` in
// [0,1] controls how much of that link is destroyed: at 1 the feature/label
// correlation is gone and the feature amplitude is attenuated, so such rows
// act as low-signal filler rather than loud noise.
struct DatasetSpec {
  std::string name;
  int samples = 0;
  double age_lo = 20.0;
  double age_hi = 80.0;
  double noise = 6.0;
  double distortion = 0.0;
};

struct SyntheticConfig {
  int feature_dim = 32;
  int diagnosis_count = 3;
  std::vector<DatasetSpec> datasets;
};

// Deterministic for a given (config, seed). Metadata columns are
// dataset/sex/diagnosis (categorical) and age (numeric, equal to the label).
SourcePool generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);

// CSV with header id,label,meta:<name>...,feat:<k>... Strict: unknown or
// missing columns, bad numbers, duplicate ids, and empty cells all throw
// ConfigError naming the offending row/column.
SourcePool load_pool_csv(const std::filesystem::path& path,
                         const std::vector<MetaColumn>& schema);

// Serialization path: takes the pool by value and reveals the copy, so the
// caller's reveal accounting is untouched. Output is byte-deterministic.
void write_pool_csv(SourcePool pool, std::ostream& out);

}  // namespace mabs
