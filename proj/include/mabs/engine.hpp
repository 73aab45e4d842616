#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "mabs/bandit.hpp"
#include "mabs/learner.hpp"
#include "mabs/partition.hpp"
#include "mabs/pool.hpp"

namespace mabs {

// Incrementally grown training set; rows are kept in reveal order.
class TrainingSet {
 public:
  explicit TrainingSet(std::size_t feature_dim) : feature_dim_(feature_dim) {}

  void add(const std::vector<double>& features, double label);
  std::size_t size() const { return labels_.size(); }
  Eigen::MatrixXd features() const;
  Eigen::VectorXd labels() const;

 private:
  std::size_t feature_dim_;
  std::vector<double> rows_;  // row-major
  std::vector<double> labels_;
};

enum class RewardBaseline { best_so_far, previous_score };

struct RewardResult {
  int reward = -1;
  double new_best = 0.0;
  bool degenerate = false;  // score was not finite
};

// +1 iff the new score strictly beats the baseline; non-finite scores earn
// -1 and are flagged instead of poisoning the running best.
RewardResult compute_reward(double baseline, double new_score);

struct LedgerStep {
  int t = 0;
  int arm_index = -1;  // -1 for policies without arms
  std::string cluster_label;
  SampleId sample_id = -1;
  int reward = 0;
  double val_r2 = 0.0;
  double test_r2 = std::numeric_limits<double>::quiet_NaN();
  std::string flag;  // "", "nonfinite_val", "uniform_fallback"
};

struct ArmSnapshot {
  std::string label;
  double alpha = 1.0;
  double beta = 1.0;
};

struct RunLedger {
  std::string policy;
  std::uint64_t seed = 0;
  std::string config_fingerprint;
  std::vector<LedgerStep> steps;
  double best_validation = -std::numeric_limits<double>::infinity();
  bool early_stop = false;              // pool ran dry before the budget
  std::vector<ArmSnapshot> final_arms;  // empty for arm-less policies
};

struct RunParams {
  int budget = 0;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  RewardBaseline baseline = RewardBaseline::best_so_far;
  int checkpoint_interval = 1;  // held-out test evaluation cadence
  std::string policy_name;
  std::string fingerprint;
};

// Thompson-sampling selection loop. Each step: sync arm exhaustion with the
// cluster set, sample an arm, draw a member uniformly, reveal it, retrain,
// reward strict validation improvement, update only the chosen arm, and
// remove the sample from every cluster. Two independent RNG streams are
// derived from params.seed: one for arm selection, one for sample draws, so
// a degenerate single-cluster run consumes the draw stream exactly like the
// uniform-random policy does.
RunLedger run_mabs(SourcePool& pool, ClusterSet& clusters, const LabeledData& validation,
                   const RunParams& params, const LabeledData* test = nullptr);

// Uniform sampling without replacement over the unrevealed pool; same
// retrain/reward/ledger pipeline as run_mabs, no arms.
RunLedger run_random(SourcePool& pool, const LabeledData& validation,
                     const RunParams& params, const LabeledData* test = nullptr);

struct LabelPriorParams {
  std::string label_column = "age";
  int bins = 10;
};

// Draws without replacement, weighting each candidate by the frequency of
// its label-proxy metadata bin in the held-out test labels. When every
// remaining candidate has zero weight the step falls back to uniform and is
// flagged.
RunLedger run_label_prior(SourcePool& pool, const LabeledData& validation,
                          const Eigen::VectorXd& test_labels,
                          const LabelPriorParams& prior, const RunParams& params,
                          const LabeledData* test = nullptr);

double evaluate_test(const RidgeModel& model, const LabeledData& test);

// Columns: t,policy,cluster_label,sample_id,reward,val_r2,test_r2
void write_ledger_csv(const RunLedger& ledger, std::ostream& out);
nlohmann::json ledger_summary_json(const RunLedger& ledger);

}  // namespace mabs
