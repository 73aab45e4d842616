#include "mabs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace mabs {

namespace {

std::vector<SampleId> shuffled_ids(const SourcePool& pool, std::uint64_t seed) {
  std::vector<SampleId> ids = pool.ids();
  Rng rng = make_rng(seed, {fnv1a("split")});
  std::shuffle(ids.begin(), ids.end(), rng);
  return ids;
}

void sort_parts(SplitIds& s) {
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.hidden.begin(), s.hidden.end());
}

}  // namespace

SplitIds split_mixed(const SourcePool& pool, const SplitSpec& spec, std::uint64_t seed) {
  if (spec.mode != SplitMode::mixed)
    throw std::invalid_argument("split_mixed called with a non-mixed spec");
  if (!(spec.validation_fraction > 0) || !(spec.test_fraction > 0) ||
      !(spec.hidden_fraction > 0))
    throw std::invalid_argument("split fractions must be positive");
  const double sum =
      spec.validation_fraction + spec.test_fraction + spec.hidden_fraction;
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must sum to 1");

  const auto n = static_cast<double>(pool.size());
  const auto nv = static_cast<std::size_t>(std::llround(n * spec.validation_fraction));
  const auto nt = static_cast<std::size_t>(std::llround(n * spec.test_fraction));
  if (nv < 1 || nt < 1 || nv + nt >= pool.size())
    throw std::invalid_argument("split leaves an empty validation, test, or hidden part");

  const std::vector<SampleId> ids = shuffled_ids(pool, seed);
  SplitIds out;
  out.validation.assign(ids.begin(), ids.begin() + nv);
  out.test.assign(ids.begin() + nv, ids.begin() + nv + nt);
  out.hidden.assign(ids.begin() + nv + nt, ids.end());
  sort_parts(out);
  return out;
}

SplitIds split_target(const SourcePool& pool, const std::string& target_column,
                      const std::string& target, double validation_fraction,
                      std::uint64_t seed) {
  const std::size_t col = pool.column_index(target_column);
  if (pool.schema()[col].kind != MetaKind::categorical)
    throw std::invalid_argument("target column '" + target_column + "' must be categorical");
  if (pool.categories(col).size() < 2)
    throw std::invalid_argument("target split needs at least 2 datasets");
  const auto code = pool.category_code(col, target);
  if (!code) throw std::invalid_argument("unknown target dataset '" + target + "'");
  if (!(validation_fraction > 0 && validation_fraction < 1))
    throw std::invalid_argument("validation fraction must be in (0, 1)");

  std::vector<SampleId> target_ids;
  SplitIds out;
  for (SampleId id : pool.ids()) {
    if (pool.meta_value(id, col) == *code)
      target_ids.push_back(id);
    else
      out.hidden.push_back(id);
  }
  if (target_ids.empty()) throw std::invalid_argument("target dataset '" + target + "' is empty");
  if (out.hidden.empty())
    throw std::invalid_argument("no samples outside the target dataset");

  const auto nv = static_cast<std::size_t>(
      std::llround(static_cast<double>(target_ids.size()) * validation_fraction));
  if (nv < 1 || nv >= target_ids.size())
    throw std::invalid_argument("target split leaves an empty validation or test part");

  Rng rng = make_rng(seed, {fnv1a("split")});
  std::shuffle(target_ids.begin(), target_ids.end(), rng);
  out.validation.assign(target_ids.begin(), target_ids.begin() + nv);
  out.test.assign(target_ids.begin() + nv, target_ids.end());
  sort_parts(out);
  return out;
}

std::string PolicySpec::name() const {
  switch (kind) {
    case Kind::random:
      return "random";
    case Kind::label_prior:
      return "label_prior";
    case Kind::mabs:
      break;
  }
  if (columns.empty()) return "mabs:all";
  std::string n = "mabs:";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) n += "+";
    n += columns[i];
  }
  return n;
}

const PolicyCurve& CurveBundle::policy(const std::string& name) const {
  for (const auto& p : policies)
    if (p.name == name) return p;
  throw std::invalid_argument("no policy '" + name + "' in bundle");
}

namespace {

std::vector<PartitionSpec> partition_specs_for(const PolicySpec& policy,
                                               const SourcePool& pool,
                                               const ExperimentConfig& cfg) {
  std::vector<std::string> columns = policy.columns;
  if (columns.empty())
    for (const auto& c : pool.schema()) columns.push_back(c.name);
  std::vector<PartitionSpec> specs;
  for (const auto& col : columns) {
    PartitionSpec spec{col, 7};
    for (const auto& p : cfg.partitions)
      if (p.column == col) spec.bins = p.bins;
    specs.push_back(std::move(spec));
  }
  return specs;
}

void validate_experiment(const SourcePool& pool, const ExperimentConfig& cfg) {
  if (cfg.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (cfg.budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (cfg.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (cfg.policies.empty()) throw std::invalid_argument("at least one policy is required");
  for (std::size_t i = 0; i < cfg.policies.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.policies.size(); ++j)
      if (cfg.policies[i].name() == cfg.policies[j].name())
        throw std::invalid_argument("duplicate policy '" + cfg.policies[i].name() + "'");
  for (const auto& p : cfg.policies)
    for (const auto& col : p.columns) pool.column_index(col);  // throws on unknown
  for (const auto& p : cfg.partitions) {
    pool.column_index(p.column);
    if (p.bins < 1)
      throw std::invalid_argument("partition '" + p.column + "': bins must be >= 1");
  }
}

RunLedger run_one_policy(const PolicySpec& policy, const SourcePool& hidden_template,
                         const LabeledData& validation, const LabeledData& test,
                         const ExperimentConfig& cfg, std::uint64_t split_seed) {
  RunParams params;
  params.budget = cfg.budget;
  params.lambda = cfg.lambda;
  params.seed = mix_seed(split_seed, fnv1a(policy.name()));
  params.baseline = cfg.baseline;
  params.checkpoint_interval = cfg.checkpoint_interval;
  params.policy_name = policy.name();
  params.fingerprint = cfg.fingerprint;

  SourcePool pool = hidden_template;
  switch (policy.kind) {
    case PolicySpec::Kind::mabs: {
      const auto specs = partition_specs_for(policy, pool, cfg);
      ClusterSet clusters = ClusterSet::build(pool, specs);
      return run_mabs(pool, clusters, validation, params, &test);
    }
    case PolicySpec::Kind::random:
      return run_random(pool, validation, params, &test);
    case PolicySpec::Kind::label_prior:
      return run_label_prior(pool, validation, test.y, cfg.label_prior, params, &test);
  }
  throw std::logic_error("unreachable policy kind");
}

}  // namespace

CurveBundle run_experiment(const SourcePool& pool, const ExperimentConfig& cfg) {
  validate_experiment(pool, cfg);

  // slots[policy][repeat]; filled by the trial workers.
  std::vector<std::vector<RunLedger>> slots(cfg.policies.size());
  for (auto& s : slots) s.resize(cfg.repeats);

  const auto run_trial = [&](int k) {
    const std::uint64_t split_seed = cfg.base_seed + static_cast<std::uint64_t>(k);
    const SplitIds split =
        cfg.split.mode == SplitMode::mixed
            ? split_mixed(pool, cfg.split, split_seed)
            : split_target(pool, cfg.split.target_column, cfg.split.target,
                           cfg.split.validation_fraction, split_seed);
    const LabeledData validation = materialize(pool.subset(split.validation));
    const LabeledData test = materialize(pool.subset(split.test));
    const SourcePool hidden_template = pool.subset(split.hidden);
    for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi)
      slots[pi][k] =
          run_one_policy(cfg.policies[pi], hidden_template, validation, test, cfg, split_seed);
  };

  const int workers = std::min(cfg.jobs, cfg.repeats);
  if (workers <= 1) {
    for (int k = 0; k < cfg.repeats; ++k) run_trial(k);
  } else {
    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (int k = next.fetch_add(1); k < cfg.repeats; k = next.fetch_add(1)) {
          try {
            run_trial(k);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
  }

  CurveBundle bundle;
  bundle.steps = 0;
  for (const auto& per_policy : slots)
    for (const auto& ledger : per_policy)
      bundle.steps = std::max(bundle.steps, static_cast<int>(ledger.steps.size()));
  for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi) {
    PolicyCurve curve;
    curve.name = cfg.policies[pi].name();
    curve.ledgers = std::move(slots[pi]);
    curve.mean_test_r2.assign(bundle.steps, std::numeric_limits<double>::quiet_NaN());
    curve.sd_test_r2.assign(bundle.steps, std::numeric_limits<double>::quiet_NaN());
    for (int t = 0; t < bundle.steps; ++t) {
      double sum = 0.0;
      int n = 0;
      for (const auto& ledger : curve.ledgers) {
        if (t >= static_cast<int>(ledger.steps.size())) continue;
        const double v = ledger.steps[t].test_r2;
        if (std::isnan(v)) continue;
        sum += v;
        ++n;
      }
      if (n == 0) continue;
      const double mean = sum / n;
      double sq = 0.0;
      for (const auto& ledger : curve.ledgers) {
        if (t >= static_cast<int>(ledger.steps.size())) continue;
        const double v = ledger.steps[t].test_r2;
        if (std::isnan(v)) continue;
        sq += (v - mean) * (v - mean);
      }
      curve.mean_test_r2[t] = mean;
      curve.sd_test_r2[t] = n > 1 ? std::sqrt(sq / (n - 1)) : 0.0;
    }
    bundle.policies.push_back(std::move(curve));
  }
  return bundle;
}

void write_curves_csv(const CurveBundle& bundle, const ExperimentConfig& cfg,
                      std::ostream& out) {
  out << "policy,seed,t,val_r2,test_r2,reward\n";
  for (const auto& curve : bundle.policies) {
    for (std::size_t k = 0; k < curve.ledgers.size(); ++k) {
      const std::uint64_t seed = cfg.base_seed + k;
      for (const auto& s : curve.ledgers[k].steps) {
        out << curve.name << "," << seed << "," << s.t << "," << fmt_double(s.val_r2)
            << ",";
        if (!std::isnan(s.test_r2)) out << fmt_double(s.test_r2);
        out << "," << s.reward << "\n";
      }
    }
  }
}

nlohmann::json bundle_summary_json(const CurveBundle& bundle, const ExperimentConfig& cfg,
                                   const nlohmann::json& resolved_config) {
  nlohmann::json j;
  j["config"] = resolved_config;
  j["config_fingerprint"] = cfg.fingerprint;
  j["base_seed"] = cfg.base_seed;
  auto policies = nlohmann::json::object();
  for (const auto& curve : bundle.policies) {
    nlohmann::json p;
    if (!curve.mean_test_r2.empty() && !std::isnan(curve.mean_test_r2.back())) {
      p["final_test_r2_mean"] = curve.mean_test_r2.back();
      p["final_test_r2_sd"] = curve.sd_test_r2.back();
    }
    auto per_seed = nlohmann::json::array();
    for (std::size_t k = 0; k < curve.ledgers.size(); ++k) {
      nlohmann::json entry = ledger_summary_json(curve.ledgers[k]);
      entry["split_seed"] = cfg.base_seed + k;
      per_seed.push_back(std::move(entry));
    }
    p["per_seed"] = std::move(per_seed);
    policies[curve.name] = std::move(p);
  }
  j["policies"] = std::move(policies);
  return j;
}

namespace {

struct BenchArm {
  int pulls = 0;
  double reward_sum = 0.0;
};

std::size_t pick_epsilon_greedy(const std::vector<BenchArm>& arms, double epsilon,
                                Rng& rng) {
  for (std::size_t i = 0; i < arms.size(); ++i)
    if (arms[i].pulls == 0) return i;
  std::bernoulli_distribution explore(epsilon);
  if (explore(rng)) {
    std::uniform_int_distribution<std::size_t> any(0, arms.size() - 1);
    return any(rng);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < arms.size(); ++i)
    if (arms[i].reward_sum / arms[i].pulls > arms[best].reward_sum / arms[best].pulls)
      best = i;
  return best;
}

std::size_t pick_ucb1(const std::vector<BenchArm>& arms, int t) {
  for (std::size_t i = 0; i < arms.size(); ++i)
    if (arms[i].pulls == 0) return i;
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const double mean = arms[i].reward_sum / arms[i].pulls;
    const double score = mean + std::sqrt(2.0 * std::log(t) / arms[i].pulls);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

}  // namespace

std::vector<RegretRow> bandit_bench(const BenchConfig& cfg) {
  if (cfg.probabilities.empty())
    throw std::invalid_argument("bench needs at least one arm probability");
  for (double p : cfg.probabilities)
    if (!(p >= 0 && p <= 1))
      throw std::invalid_argument("arm probabilities must be in [0, 1]");
  if (cfg.pulls < 1) throw std::invalid_argument("pulls must be >= 1");
  if (cfg.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (!(cfg.epsilon >= 0 && cfg.epsilon <= 1))
    throw std::invalid_argument("epsilon must be in [0, 1]");

  const std::size_t n_arms = cfg.probabilities.size();
  std::size_t best_arm = 0;
  for (std::size_t i = 1; i < n_arms; ++i)
    if (cfg.probabilities[i] > cfg.probabilities[best_arm]) best_arm = i;
  const double best_p = cfg.probabilities[best_arm];

  const char* names[] = {"thompson", "epsilon_greedy", "ucb1"};
  std::vector<RegretRow> rows;
  for (const char* name : names) {
    std::vector<double> regrets(cfg.repeats, 0.0);
    double best_rate_sum = 0.0;
    for (int r = 0; r < cfg.repeats; ++r) {
      Rng env = make_rng(cfg.seed, {fnv1a(name), fnv1a("env"), static_cast<std::uint64_t>(r)});
      Rng pol = make_rng(cfg.seed, {fnv1a(name), fnv1a("policy"), static_cast<std::uint64_t>(r)});
      std::vector<ArmState> posterior(n_arms);
      std::vector<BenchArm> arms(n_arms);
      double regret = 0.0;
      int best_pulls = 0;
      for (int t = 1; t <= cfg.pulls; ++t) {
        std::size_t choice;
        if (name == names[0]) {
          choice = *select_arm(posterior, pol);
        } else if (name == names[1]) {
          choice = pick_epsilon_greedy(arms, cfg.epsilon, pol);
        } else {
          choice = pick_ucb1(arms, t);
        }
        std::bernoulli_distribution payoff(cfg.probabilities[choice]);
        const bool success = payoff(env);
        arms[choice].pulls += 1;
        arms[choice].reward_sum += success ? 1.0 : 0.0;
        update_arm(posterior[choice], success ? +1 : -1);
        regret += best_p - cfg.probabilities[choice];
        if (choice == best_arm) ++best_pulls;
      }
      regrets[r] = regret;
      best_rate_sum += static_cast<double>(best_pulls) / cfg.pulls;
    }
    double mean = 0.0;
    for (double v : regrets) mean += v;
    mean /= cfg.repeats;
    double sq = 0.0;
    for (double v : regrets) sq += (v - mean) * (v - mean);
    rows.push_back({name, mean,
                    cfg.repeats > 1 ? std::sqrt(sq / (cfg.repeats - 1)) : 0.0,
                    best_rate_sum / cfg.repeats});
  }
  return rows;
}

}  // namespace mabs
