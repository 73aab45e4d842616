#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mabs/config.hpp"
#include "mabs/harness.hpp"

namespace fs = std::filesystem;

namespace {

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw mabs::ConfigError("cannot open config file '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw mabs::ConfigError("config file '" + path.string() + "' is not valid JSON: " +
                            e.what());
  }
}

// Write to a sibling temp file first so a failure never leaves a truncated
// output behind, then move into place.
void write_file_atomically(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write to '" + tmp.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string sanitize_for_filename(std::string name) {
  for (char& c : name)
    if (c == ':' || c == '+' || c == '/') c = '_';
  return name;
}

int cmd_generate(const fs::path& config_path, const fs::path& out_path, std::uint64_t seed) {
  const auto cfg = mabs::parse_synthetic_config(read_json_file(config_path));
  const mabs::SourcePool pool = mabs::generate_synthetic(cfg, seed);
  std::ostringstream csv;
  mabs::write_pool_csv(pool, csv);
  write_file_atomically(out_path, csv.str());
  std::cout << "wrote " << pool.size() << " samples (" << pool.feature_dim()
            << " features) to " << out_path.string() << "\n";
  return 0;
}

int cmd_run(const fs::path& config_path, const std::string& out_dir_override,
            int jobs_override) {
  mabs::RunConfig cfg = mabs::parse_run_config(read_json_file(config_path));
  if (!out_dir_override.empty()) cfg.output_dir = out_dir_override;
  if (jobs_override > 0) cfg.experiment.jobs = jobs_override;

  const nlohmann::json resolved = mabs::resolved_run_config(cfg);
  cfg.experiment.fingerprint = mabs::config_fingerprint(resolved);

  mabs::SourcePool pool =
      cfg.data.synthetic
          ? mabs::generate_synthetic(*cfg.data.synthetic,
                                     mabs::mix_seed(cfg.experiment.base_seed,
                                                    mabs::fnv1a("data")))
          : mabs::load_pool_csv(*cfg.data.csv, cfg.data.schema);

  const mabs::CurveBundle bundle = mabs::run_experiment(pool, cfg.experiment);

  std::ostringstream curves;
  mabs::write_curves_csv(bundle, cfg.experiment, curves);
  write_file_atomically(cfg.output_dir / "curves.csv", curves.str());

  const nlohmann::json summary =
      mabs::bundle_summary_json(bundle, cfg.experiment, resolved);
  write_file_atomically(cfg.output_dir / "summary.json", summary.dump(2) + "\n");

  if (cfg.write_ledgers) {
    for (const auto& curve : bundle.policies) {
      for (std::size_t k = 0; k < curve.ledgers.size(); ++k) {
        std::ostringstream ledger;
        mabs::write_ledger_csv(curve.ledgers[k], ledger);
        const std::string name = sanitize_for_filename(curve.name) + "_seed" +
                                 std::to_string(cfg.experiment.base_seed + k) + ".csv";
        write_file_atomically(cfg.output_dir / "ledgers" / name, ledger.str());
      }
    }
  }

  std::cout << "policy,final_test_r2_mean,final_test_r2_sd\n";
  for (const auto& curve : bundle.policies) {
    std::cout << curve.name;
    if (!curve.mean_test_r2.empty() && !std::isnan(curve.mean_test_r2.back()))
      std::cout << "," << mabs::fmt_double(curve.mean_test_r2.back()) << ","
                << mabs::fmt_double(curve.sd_test_r2.back());
    std::cout << "\n";
  }
  std::cout << "outputs in " << cfg.output_dir.string() << " (fingerprint "
            << cfg.experiment.fingerprint << ")\n";
  return 0;
}

int cmd_bench(const std::string& arms_text, int pulls, int repeats, std::uint64_t seed,
              double epsilon) {
  mabs::BenchConfig cfg;
  cfg.pulls = pulls;
  cfg.repeats = repeats;
  cfg.seed = seed;
  cfg.epsilon = epsilon;
  std::string cur;
  for (char c : arms_text + ",") {
    if (c == ',') {
      if (cur.empty()) continue;
      try {
        cfg.probabilities.push_back(std::stod(cur));
      } catch (...) {
        throw mabs::ConfigError("bad arm probability '" + cur + "'");
      }
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  std::vector<mabs::RegretRow> rows;
  try {
    rows = mabs::bandit_bench(cfg);
  } catch (const std::invalid_argument& e) {
    throw mabs::ConfigError(e.what());
  }
  std::cout << "policy,mean_regret,sd_regret,best_arm_rate\n";
  for (const auto& r : rows)
    std::cout << r.policy << "," << mabs::fmt_double(r.mean_regret) << ","
              << mabs::fmt_double(r.sd_regret) << "," << mabs::fmt_double(r.best_arm_rate)
              << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bandit-driven training-set selection over hidden sample pools"};
  app.require_subcommand(1);

  std::string config_path, out_path, out_dir;
  std::uint64_t seed = 1;
  int jobs = 0;

  auto* generate = app.add_subcommand("generate", "Generate a synthetic pool CSV");
  generate->add_option("--config", config_path, "Synthetic config JSON")->required();
  generate->add_option("--out", out_path, "Output CSV path")->required();
  generate->add_option("--seed", seed, "Generator seed");

  auto* run = app.add_subcommand("run", "Run a selection experiment from a config");
  run->add_option("--config", config_path, "Run config JSON")->required();
  run->add_option("--out-dir", out_dir, "Output directory (overrides config)");
  run->add_option("--jobs", jobs, "Concurrent trials (overrides config)");

  std::string arms = "0.9,0.5,0.1";
  int pulls = 2000, repeats = 50;
  double epsilon = 0.1;
  auto* bench = app.add_subcommand("bench", "Compare bandit rules on Bernoulli arms");
  bench->add_option("--arms", arms, "Comma-separated success probabilities");
  bench->add_option("--pulls", pulls, "Pulls per repeat");
  bench->add_option("--repeats", repeats, "Independent repeats");
  bench->add_option("--seed", seed, "Bench seed");
  bench->add_option("--epsilon", epsilon, "Exploration rate for epsilon-greedy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (generate->parsed()) return cmd_generate(config_path, out_path, seed);
    if (run->parsed()) return cmd_run(config_path, out_dir, jobs);
    return cmd_bench(arms, pulls, repeats, seed, epsilon);
  } catch (const mabs::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
