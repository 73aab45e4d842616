#include "mabs/engine.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace mabs {

void TrainingSet::add(const std::vector<double>& features, double label) {
  if (features.size() != feature_dim_)
    throw std::invalid_argument("training row has wrong feature width");
  rows_.insert(rows_.end(), features.begin(), features.end());
  labels_.push_back(label);
}

Eigen::MatrixXd TrainingSet::features() const {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(rows_.data(), static_cast<Eigen::Index>(labels_.size()),
                                    static_cast<Eigen::Index>(feature_dim_));
}

Eigen::VectorXd TrainingSet::labels() const {
  return Eigen::Map<const Eigen::VectorXd>(labels_.data(),
                                           static_cast<Eigen::Index>(labels_.size()));
}

RewardResult compute_reward(double baseline, double new_score) {
  if (!std::isfinite(new_score)) return {-1, baseline, true};
  if (new_score > baseline) return {+1, new_score, false};
  return {-1, baseline, false};
}

double evaluate_test(const RidgeModel& model, const LabeledData& test) {
  return r2_score(test.y, predict(model, test.X));
}

namespace {

constexpr double kNoModelYet = -std::numeric_limits<double>::infinity();

void validate_run_inputs(const LabeledData& validation, const RunParams& params) {
  if (params.budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (params.checkpoint_interval < 1)
    throw std::invalid_argument("checkpoint_interval must be >= 1");
  if (!(params.lambda >= 0)) throw std::invalid_argument("lambda must be >= 0");
  if (validation.y.size() < 2 ||
      (validation.y.array() - validation.y[0]).abs().maxCoeff() == 0.0)
    throw std::invalid_argument("validation set needs at least 2 samples with varying labels");
  if (validation.X.rows() != validation.y.size())
    throw std::invalid_argument("validation X/y row mismatch");
}

// The retrain/score/reward/record tail that every selection policy shares;
// policies differ only in how they pick the next sample.
class StepRecorder {
 public:
  StepRecorder(const LabeledData& validation, const LabeledData* test,
               const RunParams& params, std::size_t feature_dim, RunLedger& ledger)
      : validation_(validation), test_(test), params_(params), ledger_(ledger),
        train_(feature_dim) {}

  int step(const Revealed& rv, int arm_index, std::string cluster_label, SampleId sid,
           std::string flag = "") {
    ++t_;
    train_.add(rv.features, rv.label);
    model_ = fit_ridge(train_.features(), train_.labels(), params_.lambda);
    const double val = r2_score(validation_.y, predict(model_, validation_.X));
    const double baseline =
        params_.baseline == RewardBaseline::best_so_far ? best_ : prev_;
    const RewardResult rr = compute_reward(baseline, val);
    if (std::isfinite(val)) {
      prev_ = val;
      if (val > best_) best_ = val;
    }
    if (rr.degenerate) flag = flag.empty() ? "nonfinite_val" : flag + ";nonfinite_val";
    double test_r2 = std::numeric_limits<double>::quiet_NaN();
    if (test_ && t_ % params_.checkpoint_interval == 0)
      test_r2 = evaluate_test(model_, *test_);
    ledger_.steps.push_back(
        {t_, arm_index, std::move(cluster_label), sid, rr.reward, val, test_r2,
         std::move(flag)});
    return rr.reward;
  }

  void finish() {
    ledger_.best_validation = best_;
    // The curve should always end with a test point even off-cadence.
    if (test_ && !ledger_.steps.empty() && std::isnan(ledger_.steps.back().test_r2))
      ledger_.steps.back().test_r2 = evaluate_test(model_, *test_);
  }

 private:
  const LabeledData& validation_;
  const LabeledData* test_;
  const RunParams& params_;
  RunLedger& ledger_;
  TrainingSet train_;
  RidgeModel model_;
  double best_ = kNoModelYet;
  double prev_ = kNoModelYet;
  int t_ = 0;
};

RunLedger make_ledger(const RunParams& params, const char* default_name) {
  RunLedger ledger;
  ledger.policy = params.policy_name.empty() ? default_name : params.policy_name;
  ledger.seed = params.seed;
  ledger.config_fingerprint = params.fingerprint;
  return ledger;
}

}  // namespace

RunLedger run_mabs(SourcePool& pool, ClusterSet& clusters, const LabeledData& validation,
                   const RunParams& params, const LabeledData* test) {
  validate_run_inputs(validation, params);
  RunLedger ledger = make_ledger(params, "mabs");
  Rng select_rng = make_rng(params.seed, {fnv1a("select")});
  Rng draw_rng = make_rng(params.seed, {fnv1a("draw")});
  StepRecorder rec(validation, test, params, pool.feature_dim(), ledger);

  std::vector<ArmState> arms(clusters.size());
  for (int t = 1; t <= params.budget; ++t) {
    for (std::size_t i = 0; i < arms.size(); ++i)
      arms[i].exhausted = clusters.cluster(i).exhausted();
    const auto pick = select_arm(arms, select_rng);
    if (!pick) {
      ledger.early_stop = true;
      break;
    }
    const Cluster& chosen = clusters.cluster(*pick);
    const std::string label = chosen.label().text;
    const SampleId sid = chosen.draw_uniform(draw_rng);
    const Revealed rv = pool.reveal(sid);
    clusters.remove_sample(sid);  // consumed for every cluster, not just the chosen one
    const int reward = rec.step(rv, static_cast<int>(*pick), label, sid);
    update_arm(arms[*pick], reward);
  }
  rec.finish();
  ledger.final_arms.reserve(arms.size());
  for (std::size_t i = 0; i < arms.size(); ++i)
    ledger.final_arms.push_back(
        {clusters.cluster(i).label().text, arms[i].alpha, arms[i].beta});
  return ledger;
}

RunLedger run_random(SourcePool& pool, const LabeledData& validation,
                     const RunParams& params, const LabeledData* test) {
  validate_run_inputs(validation, params);
  RunLedger ledger = make_ledger(params, "random");
  Rng draw_rng = make_rng(params.seed, {fnv1a("draw")});
  StepRecorder rec(validation, test, params, pool.feature_dim(), ledger);

  std::vector<SampleId> remaining;
  remaining.reserve(pool.unrevealed_count());
  for (SampleId id : pool.ids())
    if (!pool.is_revealed(id)) remaining.push_back(id);

  for (int t = 1; t <= params.budget; ++t) {
    if (remaining.empty()) {
      ledger.early_stop = true;
      break;
    }
    std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
    const std::size_t idx = pick(draw_rng);
    const SampleId sid = remaining[idx];
    remaining[idx] = remaining.back();
    remaining.pop_back();
    const Revealed rv = pool.reveal(sid);
    rec.step(rv, -1, "", sid);
  }
  rec.finish();
  return ledger;
}

RunLedger run_label_prior(SourcePool& pool, const LabeledData& validation,
                          const Eigen::VectorXd& test_labels,
                          const LabelPriorParams& prior, const RunParams& params,
                          const LabeledData* test) {
  validate_run_inputs(validation, params);
  if (prior.bins < 1) throw std::invalid_argument("label-prior bin count must be >= 1");
  if (test_labels.size() < 1) throw std::invalid_argument("label prior needs test labels");
  const std::size_t col = pool.column_index(prior.label_column);
  if (pool.schema()[col].kind != MetaKind::numeric)
    throw std::invalid_argument("label-prior column '" + prior.label_column +
                                "' must be numeric");

  const double lo = test_labels.minCoeff();
  const double hi = test_labels.maxCoeff();
  const double width = (hi - lo) / prior.bins;
  const auto bin_of = [&](double v) -> int {
    if (v < lo || v > hi) return -1;
    if (width <= 0) return 0;
    return std::min(prior.bins - 1, static_cast<int>((v - lo) / width));
  };
  std::vector<double> histogram(static_cast<std::size_t>(prior.bins), 0.0);
  for (Eigen::Index i = 0; i < test_labels.size(); ++i)
    histogram[static_cast<std::size_t>(bin_of(test_labels[i]))] += 1.0;

  RunLedger ledger = make_ledger(params, "label_prior");
  Rng draw_rng = make_rng(params.seed, {fnv1a("draw")});
  StepRecorder rec(validation, test, params, pool.feature_dim(), ledger);

  std::vector<SampleId> remaining;
  std::vector<double> weights;
  for (SampleId id : pool.ids()) {
    if (pool.is_revealed(id)) continue;
    remaining.push_back(id);
    const int b = bin_of(pool.meta_value(id, col));
    weights.push_back(b < 0 ? 0.0 : histogram[static_cast<std::size_t>(b)]);
  }

  for (int t = 1; t <= params.budget; ++t) {
    if (remaining.empty()) {
      ledger.early_stop = true;
      break;
    }
    double total = 0.0;
    for (double w : weights) total += w;
    std::size_t idx;
    std::string flag;
    if (total > 0) {
      std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
      idx = pick(draw_rng);
    } else {
      // Every remaining candidate sits outside the test-label histogram.
      std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
      idx = pick(draw_rng);
      flag = "uniform_fallback";
    }
    const SampleId sid = remaining[idx];
    remaining[idx] = remaining.back();
    remaining.pop_back();
    weights[idx] = weights.back();
    weights.pop_back();
    const Revealed rv = pool.reveal(sid);
    rec.step(rv, -1, "", sid, std::move(flag));
  }
  rec.finish();
  return ledger;
}

void write_ledger_csv(const RunLedger& ledger, std::ostream& out) {
  out << "t,policy,cluster_label,sample_id,reward,val_r2,test_r2\n";
  for (const auto& s : ledger.steps) {
    out << s.t << "," << ledger.policy << "," << s.cluster_label << "," << s.sample_id
        << "," << s.reward << "," << fmt_double(s.val_r2) << ",";
    if (!std::isnan(s.test_r2)) out << fmt_double(s.test_r2);
    out << "\n";
  }
}

nlohmann::json ledger_summary_json(const RunLedger& ledger) {
  nlohmann::json j;
  j["policy"] = ledger.policy;
  j["seed"] = ledger.seed;
  j["config_fingerprint"] = ledger.config_fingerprint;
  j["steps"] = ledger.steps.size();
  j["early_stop"] = ledger.early_stop;
  j["best_validation"] =
      std::isfinite(ledger.best_validation) ? nlohmann::json(ledger.best_validation)
                                            : nlohmann::json();
  if (!ledger.steps.empty()) {
    j["final_val_r2"] = ledger.steps.back().val_r2;
    if (!std::isnan(ledger.steps.back().test_r2))
      j["final_test_r2"] = ledger.steps.back().test_r2;
  }
  auto arms = nlohmann::json::array();
  for (const auto& a : ledger.final_arms)
    arms.push_back({{"label", a.label}, {"alpha", a.alpha}, {"beta", a.beta}});
  j["arms"] = std::move(arms);
  auto warnings = nlohmann::json::array();
  for (const auto& s : ledger.steps)
    if (!s.flag.empty()) warnings.push_back({{"t", s.t}, {"flag", s.flag}});
  j["warnings"] = std::move(warnings);
  return j;
}

}  // namespace mabs
