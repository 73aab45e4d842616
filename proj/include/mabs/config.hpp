#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "mabs/harness.hpp"
#include "mabs/pool.hpp"

namespace mabs {

struct DataSource {
  // Exactly one of the two is set.
  std::optional<SyntheticConfig> synthetic;
  std::optional<std::filesystem::path> csv;
  std::vector<MetaColumn> schema;  // required for csv sources
};

struct RunConfig {
  DataSource data;
  ExperimentConfig experiment;
  std::filesystem::path output_dir = ".";
  bool write_ledgers = false;
};

// Parsers validate exhaustively: every problem found is reported in one
// ConfigError message (one line per problem), not just the first.
SyntheticConfig parse_synthetic_config(const nlohmann::json& j);
RunConfig parse_run_config(const nlohmann::json& j);

// The config with every default filled in; what summary.json records.
nlohmann::json resolved_run_config(const RunConfig& cfg);
std::string config_fingerprint(const nlohmann::json& resolved);

}  // namespace mabs
