#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "mabs/engine.hpp"

namespace mabs {

enum class SplitMode { mixed, target_dataset };

struct SplitSpec {
  SplitMode mode = SplitMode::mixed;
  // mixed: fractions of the whole pool, must be positive and sum to 1;
  // validation/test sizes are round(N * fraction), the remainder is hidden.
  double validation_fraction = 0.02;
  double test_fraction = 0.48;
  double hidden_fraction = 0.50;
  // target_dataset: validation_fraction applies to the target dataset;
  // the rest of the target becomes the test set and every sample from the
  // other datasets becomes the hidden pool.
  std::string target_column = "dataset";
  std::string target;
};

struct SplitIds {
  std::vector<SampleId> validation;
  std::vector<SampleId> test;
  std::vector<SampleId> hidden;
};

// Disjoint uniform shuffle-split of the whole pool per spec (mixed mode).
// Throws std::invalid_argument when fractions are inconsistent or any part
// rounds to empty.
SplitIds split_mixed(const SourcePool& pool, const SplitSpec& spec, std::uint64_t seed);

// Validation and test come from the target dataset only; the hidden pool is
// everything else, so the learner never trains on the distribution it is
// scored against.
SplitIds split_target(const SourcePool& pool, const std::string& target_column,
                      const std::string& target, double validation_fraction,
                      std::uint64_t seed);

struct PolicySpec {
  enum class Kind { mabs, random, label_prior };
  Kind kind = Kind::mabs;
  // mabs: metadata columns whose partitions feed the cluster set (empty
  // means every schema column).
  std::vector<std::string> columns;
  std::string name() const;
};

struct ExperimentConfig {
  SplitSpec split;
  std::vector<PartitionSpec> partitions;  // bin counts per numeric column
  std::vector<PolicySpec> policies;
  LabelPriorParams label_prior;
  double lambda = 1.0;
  int budget = 0;
  int repeats = 1;
  int checkpoint_interval = 1;
  RewardBaseline baseline = RewardBaseline::best_so_far;
  std::uint64_t base_seed = 1;
  int jobs = 1;
  std::string fingerprint;
};

struct PolicyCurve {
  std::string name;
  std::vector<RunLedger> ledgers;       // one per repeat, in repeat order
  std::vector<double> mean_test_r2;     // per step, NaN off-checkpoint
  std::vector<double> sd_test_r2;
};

struct CurveBundle {
  std::vector<PolicyCurve> policies;
  int steps = 0;
  const PolicyCurve& policy(const std::string& name) const;
};

// Runs every policy over `repeats` trials. Trial k uses split seed
// base_seed + k; all policies within a trial share the identical split and
// start from identical copies of the hidden pool, so curves differ only by
// selection behaviour. Trials run in parallel when jobs > 1; results land in
// pre-assigned slots so the output is independent of scheduling.
CurveBundle run_experiment(const SourcePool& pool, const ExperimentConfig& cfg);

// Columns: policy,seed,t,val_r2,test_r2,reward (seed = split seed).
void write_curves_csv(const CurveBundle& bundle, const ExperimentConfig& cfg,
                      std::ostream& out);
nlohmann::json bundle_summary_json(const CurveBundle& bundle,
                                   const ExperimentConfig& cfg,
                                   const nlohmann::json& resolved_config);

// Synthetic Bernoulli testbed for comparing bandit rules head-to-head.
struct BenchConfig {
  std::vector<double> probabilities;
  int pulls = 2000;
  int repeats = 50;
  std::uint64_t seed = 1;
  double epsilon = 0.1;  // epsilon-greedy exploration rate
};

struct RegretRow {
  std::string policy;  // "thompson", "epsilon_greedy", "ucb1"
  double mean_regret = 0.0;
  double sd_regret = 0.0;
  double best_arm_rate = 0.0;  // fraction of pulls on the true best arm
};

std::vector<RegretRow> bandit_bench(const BenchConfig& cfg);

}  // namespace mabs
