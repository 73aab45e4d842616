#include "mabs/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace mabs {

namespace {

using nlohmann::json;

class Problems {
 public:
  void add(const std::string& p) { items_.push_back(p); }
  bool empty() const { return items_.empty(); }
  [[noreturn]] void raise(const std::string& what) const {
    std::string msg = "invalid " + what + ":";
    for (const auto& p : items_) msg += "\n  - " + p;
    throw ConfigError(msg);
  }

 private:
  std::vector<std::string> items_;
};

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where, Problems& problems) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      problems.add(where + ": unknown key '" + it.key() + "'");
}

// Readers record a problem and return the fallback when the field is absent
// with required=true, or present with the wrong type/range.

double read_number(const json& j, const std::string& key, double fallback, bool required,
                   const std::string& where, Problems& problems) {
  if (!j.contains(key)) {
    if (required) problems.add(where + ": missing required field '" + key + "'");
    return fallback;
  }
  if (!j[key].is_number()) {
    problems.add(where + ": '" + key + "' must be a number");
    return fallback;
  }
  return j[key].get<double>();
}

std::int64_t read_int(const json& j, const std::string& key, std::int64_t fallback,
                      bool required, const std::string& where, Problems& problems) {
  if (!j.contains(key)) {
    if (required) problems.add(where + ": missing required field '" + key + "'");
    return fallback;
  }
  if (!j[key].is_number_integer()) {
    problems.add(where + ": '" + key + "' must be an integer");
    return fallback;
  }
  return j[key].get<std::int64_t>();
}

std::string read_string(const json& j, const std::string& key, const std::string& fallback,
                        bool required, const std::string& where, Problems& problems) {
  if (!j.contains(key)) {
    if (required) problems.add(where + ": missing required field '" + key + "'");
    return fallback;
  }
  if (!j[key].is_string()) {
    problems.add(where + ": '" + key + "' must be a string");
    return fallback;
  }
  return j[key].get<std::string>();
}

bool read_bool(const json& j, const std::string& key, bool fallback,
               const std::string& where, Problems& problems) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) {
    problems.add(where + ": '" + key + "' must be a boolean");
    return fallback;
  }
  return j[key].get<bool>();
}

SyntheticConfig parse_synthetic_into(const json& j, Problems& problems) {
  SyntheticConfig cfg;
  if (!j.is_object()) {
    problems.add("synthetic config must be an object");
    return cfg;
  }
  check_keys(j, {"feature_dim", "diagnosis_count", "datasets"}, "synthetic", problems);
  cfg.feature_dim =
      static_cast<int>(read_int(j, "feature_dim", 32, false, "synthetic", problems));
  if (cfg.feature_dim < 1) problems.add("synthetic: feature_dim must be >= 1");
  cfg.diagnosis_count =
      static_cast<int>(read_int(j, "diagnosis_count", 3, false, "synthetic", problems));
  if (cfg.diagnosis_count < 1) problems.add("synthetic: diagnosis_count must be >= 1");

  if (!j.contains("datasets") || !j["datasets"].is_array() || j["datasets"].empty()) {
    problems.add("synthetic: 'datasets' must be a non-empty array");
    return cfg;
  }
  std::size_t idx = 0;
  for (const auto& dj : j["datasets"]) {
    const std::string where = "synthetic dataset #" + std::to_string(idx);
    DatasetSpec d;
    d.name = "d" + std::to_string(idx);
    if (!dj.is_object()) {
      problems.add(where + ": must be an object");
      ++idx;
      continue;
    }
    check_keys(dj, {"name", "samples", "age_range", "noise", "distortion"}, where, problems);
    d.name = read_string(dj, "name", d.name, false, where, problems);
    if (d.name.empty()) problems.add(where + ": name must be non-empty");
    d.samples = static_cast<int>(read_int(dj, "samples", 0, true, where, problems));
    if (d.samples < 1) problems.add(where + ": samples must be >= 1");
    if (dj.contains("age_range")) {
      const auto& r = dj["age_range"];
      if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
        problems.add(where + ": age_range must be [low, high]");
      } else {
        d.age_lo = r[0].get<double>();
        d.age_hi = r[1].get<double>();
        if (!(d.age_hi > d.age_lo)) problems.add(where + ": age_range must have high > low");
      }
    }
    d.noise = read_number(dj, "noise", 6.0, false, where, problems);
    if (!(d.noise >= 0)) problems.add(where + ": noise must be >= 0");
    d.distortion = read_number(dj, "distortion", 0.0, false, where, problems);
    if (!(d.distortion >= 0 && d.distortion <= 1))
      problems.add(where + ": distortion must be in [0, 1]");
    cfg.datasets.push_back(std::move(d));
    ++idx;
  }
  for (std::size_t i = 0; i < cfg.datasets.size(); ++i)
    for (std::size_t k = i + 1; k < cfg.datasets.size(); ++k)
      if (cfg.datasets[i].name == cfg.datasets[k].name)
        problems.add("synthetic: duplicate dataset name '" + cfg.datasets[i].name + "'");
  return cfg;
}

const std::vector<MetaColumn> kSyntheticSchema = {
    {"dataset", MetaKind::categorical},
    {"sex", MetaKind::categorical},
    {"diagnosis", MetaKind::categorical},
    {"age", MetaKind::numeric},
};

PolicySpec parse_policy(const std::string& text, const std::vector<MetaColumn>& schema,
                        Problems& problems) {
  PolicySpec p;
  if (text == "random") {
    p.kind = PolicySpec::Kind::random;
    return p;
  }
  if (text == "label_prior") {
    p.kind = PolicySpec::Kind::label_prior;
    return p;
  }
  if (text.rfind("mabs", 0) == 0) {
    p.kind = PolicySpec::Kind::mabs;
    if (text == "mabs" || text == "mabs:all") return p;
    if (text.size() > 5 && text[4] == ':') {
      std::string cols = text.substr(5);
      std::string cur;
      for (char c : cols + "+") {
        if (c == '+') {
          if (cur.empty()) {
            problems.add("policy '" + text + "': empty column name");
          } else {
            bool known = schema.empty();
            for (const auto& sc : schema)
              if (sc.name == cur) known = true;
            if (!known)
              problems.add("policy '" + text + "': unknown metadata column '" + cur + "'");
            p.columns.push_back(cur);
          }
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
      return p;
    }
  }
  problems.add("unknown policy '" + text +
               "' (expected random, label_prior, mabs:all, or mabs:<column>[+<column>...])");
  return p;
}

}  // namespace

SyntheticConfig parse_synthetic_config(const json& j) {
  Problems problems;
  SyntheticConfig cfg = parse_synthetic_into(j, problems);
  if (!problems.empty()) problems.raise("synthetic config");
  return cfg;
}

RunConfig parse_run_config(const json& j) {
  Problems problems;
  RunConfig cfg;
  if (!j.is_object()) {
    problems.add("run config must be a JSON object");
    problems.raise("run config");
  }
  check_keys(j,
             {"data", "split", "partitions", "policies", "label_prior", "lambda", "budget",
              "repeats", "checkpoint_interval", "reward_baseline", "base_seed", "jobs",
              "output_dir", "write_ledgers"},
             "run config", problems);

  std::vector<MetaColumn> schema;
  if (!j.contains("data") || !j["data"].is_object()) {
    problems.add("run config: 'data' must be an object with 'synthetic' or 'csv'");
  } else {
    const auto& dj = j["data"];
    check_keys(dj, {"synthetic", "csv", "schema"}, "data", problems);
    const bool has_syn = dj.contains("synthetic");
    const bool has_csv = dj.contains("csv");
    if (has_syn == has_csv) {
      problems.add("data: exactly one of 'synthetic' or 'csv' is required");
    } else if (has_syn) {
      cfg.data.synthetic = parse_synthetic_into(dj["synthetic"], problems);
      schema = kSyntheticSchema;
      if (dj.contains("schema")) problems.add("data: 'schema' only applies to csv sources");
    } else {
      cfg.data.csv = read_string(dj, "csv", "", true, "data", problems);
      if (!dj.contains("schema") || !dj["schema"].is_array() || dj["schema"].empty()) {
        problems.add("data: csv sources require a non-empty 'schema' array");
      } else {
        for (const auto& cj : dj["schema"]) {
          const std::string where = "data schema entry";
          if (!cj.is_object()) {
            problems.add(where + ": must be an object {name, kind}");
            continue;
          }
          check_keys(cj, {"name", "kind"}, where, problems);
          MetaColumn col;
          col.name = read_string(cj, "name", "", true, where, problems);
          const std::string kind = read_string(cj, "kind", "", true, where, problems);
          if (kind == "categorical") {
            col.kind = MetaKind::categorical;
          } else if (kind == "numeric") {
            col.kind = MetaKind::numeric;
          } else {
            problems.add(where + ": kind must be 'categorical' or 'numeric'");
            continue;
          }
          if (!col.name.empty()) schema.push_back(std::move(col));
        }
        cfg.data.schema = schema;
      }
    }
  }

  auto& exp = cfg.experiment;
  if (j.contains("split")) {
    const auto& sj = j["split"];
    if (!sj.is_object()) {
      problems.add("split: must be an object");
    } else {
      check_keys(sj,
                 {"mode", "validation_fraction", "test_fraction", "hidden_fraction",
                  "target_column", "target"},
                 "split", problems);
      const std::string mode = read_string(sj, "mode", "mixed", false, "split", problems);
      if (mode == "mixed") {
        exp.split.mode = SplitMode::mixed;
      } else if (mode == "target_dataset") {
        exp.split.mode = SplitMode::target_dataset;
      } else {
        problems.add("split: mode must be 'mixed' or 'target_dataset'");
      }
      const bool target_mode = exp.split.mode == SplitMode::target_dataset;
      exp.split.validation_fraction =
          read_number(sj, "validation_fraction", target_mode ? 0.10 : 0.02, false, "split",
                      problems);
      exp.split.test_fraction =
          read_number(sj, "test_fraction", 0.48, false, "split", problems);
      exp.split.hidden_fraction =
          read_number(sj, "hidden_fraction", 0.50, false, "split", problems);
      exp.split.target_column =
          read_string(sj, "target_column", "dataset", false, "split", problems);
      exp.split.target = read_string(sj, "target", "", target_mode, "split", problems);
      if (target_mode) {
        if (sj.contains("test_fraction") || sj.contains("hidden_fraction"))
          problems.add("split: test/hidden fractions do not apply to target_dataset mode");
        if (!(exp.split.validation_fraction > 0 && exp.split.validation_fraction < 1))
          problems.add("split: validation_fraction must be in (0, 1)");
      } else {
        if (sj.contains("target"))
          problems.add("split: 'target' only applies to target_dataset mode");
        if (!(exp.split.validation_fraction > 0) || !(exp.split.test_fraction > 0) ||
            !(exp.split.hidden_fraction > 0))
          problems.add("split: fractions must be positive");
        else if (std::abs(exp.split.validation_fraction + exp.split.test_fraction +
                          exp.split.hidden_fraction - 1.0) > 1e-9)
          problems.add("split: fractions must sum to 1");
      }
    }
  }

  if (j.contains("partitions")) {
    if (!j["partitions"].is_array()) {
      problems.add("partitions: must be an array of {column, bins}");
    } else {
      for (const auto& pj : j["partitions"]) {
        if (!pj.is_object()) {
          problems.add("partitions: entries must be objects {column, bins}");
          continue;
        }
        check_keys(pj, {"column", "bins"}, "partitions", problems);
        PartitionSpec spec;
        spec.column = read_string(pj, "column", "", true, "partitions", problems);
        spec.bins = static_cast<int>(read_int(pj, "bins", 7, false, "partitions", problems));
        if (spec.bins < 1) problems.add("partitions: '" + spec.column + "' bins must be >= 1");
        bool known = schema.empty();
        for (const auto& sc : schema)
          if (sc.name == spec.column) known = true;
        if (!known)
          problems.add("partitions: unknown metadata column '" + spec.column + "'");
        for (const auto& prev : exp.partitions)
          if (prev.column == spec.column)
            problems.add("partitions: duplicate column '" + spec.column + "'");
        exp.partitions.push_back(std::move(spec));
      }
    }
  }

  if (!j.contains("policies") || !j["policies"].is_array() || j["policies"].empty()) {
    problems.add("run config: 'policies' must be a non-empty array of policy names");
  } else {
    for (const auto& pj : j["policies"]) {
      if (!pj.is_string()) {
        problems.add("policies: entries must be strings");
        continue;
      }
      exp.policies.push_back(parse_policy(pj.get<std::string>(), schema, problems));
    }
    for (std::size_t i = 0; i < exp.policies.size(); ++i)
      for (std::size_t k = i + 1; k < exp.policies.size(); ++k)
        if (exp.policies[i].name() == exp.policies[k].name())
          problems.add("policies: duplicate policy '" + exp.policies[i].name() + "'");
  }

  if (j.contains("label_prior")) {
    const auto& lj = j["label_prior"];
    if (!lj.is_object()) {
      problems.add("label_prior: must be an object");
    } else {
      check_keys(lj, {"column", "bins"}, "label_prior", problems);
      exp.label_prior.label_column =
          read_string(lj, "column", "age", false, "label_prior", problems);
      exp.label_prior.bins =
          static_cast<int>(read_int(lj, "bins", 10, false, "label_prior", problems));
      if (exp.label_prior.bins < 1) problems.add("label_prior: bins must be >= 1");
    }
  }

  exp.lambda = read_number(j, "lambda", 1.0, false, "run config", problems);
  if (!(exp.lambda >= 0)) problems.add("run config: lambda must be >= 0");
  exp.budget = static_cast<int>(read_int(j, "budget", 0, true, "run config", problems));
  if (j.contains("budget") && exp.budget < 1) problems.add("run config: budget must be >= 1");
  exp.repeats = static_cast<int>(read_int(j, "repeats", 1, false, "run config", problems));
  if (exp.repeats < 1) problems.add("run config: repeats must be >= 1");
  exp.checkpoint_interval =
      static_cast<int>(read_int(j, "checkpoint_interval", 1, false, "run config", problems));
  if (exp.checkpoint_interval < 1)
    problems.add("run config: checkpoint_interval must be >= 1");
  const std::string baseline =
      read_string(j, "reward_baseline", "best_so_far", false, "run config", problems);
  if (baseline == "best_so_far") {
    exp.baseline = RewardBaseline::best_so_far;
  } else if (baseline == "previous_score") {
    exp.baseline = RewardBaseline::previous_score;
  } else {
    problems.add("run config: reward_baseline must be 'best_so_far' or 'previous_score'");
  }
  const std::int64_t seed = read_int(j, "base_seed", 1, false, "run config", problems);
  if (seed < 0) problems.add("run config: base_seed must be >= 0");
  exp.base_seed = static_cast<std::uint64_t>(seed);
  exp.jobs = static_cast<int>(read_int(j, "jobs", 1, false, "run config", problems));
  if (exp.jobs < 1) problems.add("run config: jobs must be >= 1");
  cfg.output_dir = read_string(j, "output_dir", ".", false, "run config", problems);
  cfg.write_ledgers = read_bool(j, "write_ledgers", false, "run config", problems);

  if (!problems.empty()) problems.raise("run config");
  return cfg;
}

nlohmann::json resolved_run_config(const RunConfig& cfg) {
  json j;
  json data;
  if (cfg.data.synthetic) {
    const auto& s = *cfg.data.synthetic;
    json datasets = json::array();
    for (const auto& d : s.datasets)
      datasets.push_back({{"name", d.name},
                          {"samples", d.samples},
                          {"age_range", {d.age_lo, d.age_hi}},
                          {"noise", d.noise},
                          {"distortion", d.distortion}});
    data["synthetic"] = {{"feature_dim", s.feature_dim},
                         {"diagnosis_count", s.diagnosis_count},
                         {"datasets", std::move(datasets)}};
  } else {
    data["csv"] = cfg.data.csv ? cfg.data.csv->string() : "";
    json schema = json::array();
    for (const auto& c : cfg.data.schema)
      schema.push_back({{"name", c.name},
                        {"kind", c.kind == MetaKind::categorical ? "categorical" : "numeric"}});
    data["schema"] = std::move(schema);
  }
  j["data"] = std::move(data);

  const auto& exp = cfg.experiment;
  json split;
  if (exp.split.mode == SplitMode::mixed) {
    split["mode"] = "mixed";
    split["validation_fraction"] = exp.split.validation_fraction;
    split["test_fraction"] = exp.split.test_fraction;
    split["hidden_fraction"] = exp.split.hidden_fraction;
  } else {
    split["mode"] = "target_dataset";
    split["validation_fraction"] = exp.split.validation_fraction;
    split["target_column"] = exp.split.target_column;
    split["target"] = exp.split.target;
  }
  j["split"] = std::move(split);

  json partitions = json::array();
  for (const auto& p : exp.partitions)
    partitions.push_back({{"column", p.column}, {"bins", p.bins}});
  j["partitions"] = std::move(partitions);

  json policies = json::array();
  for (const auto& p : exp.policies) policies.push_back(p.name());
  j["policies"] = std::move(policies);

  j["label_prior"] = {{"column", exp.label_prior.label_column},
                      {"bins", exp.label_prior.bins}};
  j["lambda"] = exp.lambda;
  j["budget"] = exp.budget;
  j["repeats"] = exp.repeats;
  j["checkpoint_interval"] = exp.checkpoint_interval;
  j["reward_baseline"] =
      exp.baseline == RewardBaseline::best_so_far ? "best_so_far" : "previous_score";
  j["base_seed"] = exp.base_seed;
  j["jobs"] = exp.jobs;
  j["output_dir"] = cfg.output_dir.string();
  j["write_ledgers"] = cfg.write_ledgers;
  return j;
}

std::string config_fingerprint(const nlohmann::json& resolved) {
  const std::uint64_t h = fnv1a(resolved.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace mabs
