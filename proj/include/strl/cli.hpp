#pragma once

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "strl/config.hpp"
#include "strl/errors.hpp"
#include "strl/experiments.hpp"

namespace strl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

// Shared entry point for the binary and the tests. Verbs: train, compare,
// infer, heatmap, acf.
inline int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"Spatial-temporal RL packet routing experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", checkpoint_path, mutation_path, profile;
  std::uint64_t seed = 0;
  bool seed_given = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--seed", seed, "run seed (defaults to the first configured seed)")
        ->each([&](const std::string&) { seed_given = true; });
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--profile", profile, "named config profile (desk)");
  };

  CLI::App* train = app.add_subcommand("train", "train one agent and write metrics + checkpoint");
  add_common(train);

  CLI::App* compare = app.add_subcommand("compare", "train STRL/SRL/TRL and summarize rewards");
  add_common(compare);
  std::vector<std::string> variants{"STRL", "SRL", "TRL"};
  compare->add_option("--variants", variants, "variants to compare");

  CLI::App* infer = app.add_subcommand("infer", "greedy inference from a checkpoint");
  add_common(infer);
  infer->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
  infer->add_option("--mutation", mutation_path, "topology mutation JSON");
  std::size_t infer_steps = 500;
  infer->add_option("--steps", infer_steps, "inference steps");

  CLI::App* heatmap = app.add_subcommand("heatmap", "export the GRU hidden-state matrix");
  add_common(heatmap);
  heatmap->add_option("--checkpoint", checkpoint_path, "trained checkpoint (optional)");
  std::size_t units = 50, hm_steps = 25;
  heatmap->add_option("--units", units, "hidden units to export");
  heatmap->add_option("--hm-steps", hm_steps, "time steps to export");

  CLI::App* acf_cmd = app.add_subcommand("acf", "export arrival-rate autocorrelation data");
  add_common(acf_cmd);
  std::size_t max_lag = 40;
  acf_cmd->add_option("--max-lag", max_lag, "largest lag");

  try {
    // CLI11 wants argc/argv; feed it a reversed copy of the args.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    ExperimentConfig cfg = parse_config(config_path);
    if (!profile.empty()) {
      if (profile != "desk") throw ConfigError("unknown profile '" + profile + "'");
      apply_desk_profile(cfg);
    }
    validate_config(cfg);
    if (!seed_given) seed = cfg.seeds.front();

    if (*train) {
      const TrainingResult result = run_training(cfg, seed, out_dir);
      std::cout << "wrote " << result.metrics_path << " and " << result.checkpoint_path << "\n";
    } else if (*compare) {
      const VariantComparison cmp = compare_variants(cfg, variants, out_dir);
      std::cout << "wrote " << cmp.summary_path << " and " << cmp.pairwise_path << "\n";
      for (std::size_t v = 0; v < cmp.variants.size(); ++v)
        std::cout << cmp.variants[v] << " median final reward: " << cmp.medians[v] << "\n";
    } else if (*infer) {
      TopologyMutation mutation;
      if (!mutation_path.empty()) mutation = load_mutation(mutation_path);
      const InferenceResult result =
          run_inference(cfg, checkpoint_path, mutation, infer_steps, seed, out_dir);
      std::cout << "wrote " << result.metrics_path << " (mean reward " << result.mean_reward
                << ")\n";
    } else if (*heatmap) {
      const std::string out_path = out_dir + "/heatmap.csv";
      export_hidden_heatmap(cfg, checkpoint_path, units, hm_steps, seed, out_path);
      std::cout << "wrote " << out_path << "\n";
    } else if (*acf_cmd) {
      const std::string out_path = out_dir + "/acf.csv";
      export_acf_plotdata(cfg, max_lag, seed, out_path);
      std::cout << "wrote " << out_path << "\n";
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

}  // namespace strl
