#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "unload/config_file.hpp"
#include "unload/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitBadConfig = 2;
constexpr int kExitNumerical = 3;

json config_to_json(const unload::TrainConfig& c) {
    return json{
        {"env",
         {{"columns", c.env.columns},
          {"rows", c.env.rows},
          {"parcel_edge", c.env.parcel_edge},
          {"obs_resolution", c.env.obs_resolution},
          {"collapse_mode",
           c.env.collapse_mode == unload::CollapseMode::Deterministic ? "deterministic"
                                                                      : "stochastic"},
          {"p_out", c.env.p_out},
          {"color_jitter", c.env.color_jitter},
          {"seed", c.env.seed}}},
        {"train",
         {{"total_steps", c.total_steps},
          {"zeta", c.zeta},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"gamma", c.gamma},
          {"epsilon", c.epsilon},
          {"lambda", c.lambda},
          {"bias", c.bias},
          {"softmax_temperature", c.softmax_temperature},
          {"eval_every_episodes", c.eval_every_episodes},
          {"eval_episodes", c.eval_episodes},
          {"replay_capacity", c.replay_capacity},
          {"variant", unload::variant_name(c.variant)},
          {"force_mask_in_eval", c.force_mask_in_eval}}},
        {"net", {{"hidden_sizes", c.hidden_sizes}, {"num_critics", c.num_critics}}}};
}

void write_manifest(const fs::path& path, const unload::TrainConfig& config,
                    const std::vector<uint64_t>& seeds, const std::vector<std::string>& outputs) {
    json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["config"] = config_to_json(config);
    manifest["seeds"] = seeds;
    manifest["outputs"] = outputs;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
    out << manifest.dump(2) << "\n";
}

// UNLOAD_RL_SEED overrides any --seed flag.
uint64_t effective_seed(uint64_t flag_seed) {
    if (const char* env = std::getenv("UNLOAD_RL_SEED")) {
        return std::stoull(env);
    }
    return flag_seed;
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
};

unload::TrainConfig build_config(const CommonOpts& opts) {
    unload::TrainConfig config;
    if (!opts.config_path.empty()) {
        config = unload::train_config_from_file(opts.config_path);
    }
    return config;
}

int cmd_train(const CommonOpts& opts, uint64_t seed, const std::string& variant,
              int steps_override) {
    unload::TrainConfig config = build_config(opts);
    if (!variant.empty()) config.variant = unload::parse_variant(variant);
    if (steps_override >= 0) config.total_steps = steps_override;
    config.validate();

    fs::create_directories(opts.out_dir);
    const fs::path out_dir(opts.out_dir);
    const fs::path metrics_path = out_dir / "metrics.csv";
    const fs::path checkpoint_path = out_dir / "final.ckpt";
    write_manifest(out_dir / "manifest.json", config, {seed},
                   {metrics_path.string(), checkpoint_path.string()});

    unload::TrainResult result = unload::train(config, seed);
    unload::write_metrics_csv(metrics_path.string(),
                              {{config.variant, seed, result.evals, result.stats}});
    result.ensemble.save(checkpoint_path.string());
    std::cout << "trained " << config.total_steps << " steps, " << result.evals.size()
              << " evaluations, metrics at " << metrics_path.string() << "\n";
    return kExitOk;
}

int cmd_ablate(const CommonOpts& opts, const std::vector<uint64_t>& seeds,
               const std::vector<std::string>& variants, int parallel, int steps_override) {
    unload::AblationConfig ablation;
    ablation.base = build_config(opts);
    if (steps_override >= 0) ablation.base.total_steps = steps_override;
    ablation.base.validate();
    ablation.seeds = seeds;
    ablation.parallel = parallel;
    if (!variants.empty()) {
        ablation.variants.clear();
        for (const auto& v : variants) ablation.variants.push_back(unload::parse_variant(v));
    }

    fs::create_directories(opts.out_dir);
    const fs::path out_dir(opts.out_dir);
    write_manifest(out_dir / "manifest.json", ablation.base, seeds,
                   {(out_dir / "curves.csv").string(), (out_dir / "box_stats.csv").string()});

    unload::AblationResult result = unload::run_ablation(ablation);
    unload::write_metrics_csv((out_dir / "curves.csv").string(), result.runs);
    unload::write_mean_curves_csv((out_dir / "mean_curves.csv").string(), result.runs);
    unload::write_box_stats_csv((out_dir / "box_stats.csv").string(), result.runs);
    unload::write_best_seed_csv((out_dir / "best_max.csv").string(), result.runs,
                                unload::BestCriterion::Maximum);
    unload::write_best_seed_csv((out_dir / "best_final.csv").string(), result.runs,
                                unload::BestCriterion::Final);
    unload::write_best_seed_csv((out_dir / "best_mean.csv").string(), result.runs,
                                unload::BestCriterion::Mean);
    std::cout << result.runs.size() << " runs complete, aggregates in " << out_dir.string()
              << "\n";
    return kExitOk;
}

int cmd_oracle(const CommonOpts& opts, uint64_t seed, int episodes) {
    if (episodes <= 0) {
        std::cerr << "error: --episodes must be positive\n";
        return kExitBadConfig;
    }
    unload::TrainConfig config = build_config(opts);
    config.env.validate();
    const int n_total = config.env.total_parcels();
    double success_norm = 0.0;
    double oow_norm = 0.0;
    for (int ep = 0; ep < episodes; ++ep) {
        unload::StackEnv env(config.env, unload::derive_seed(seed, static_cast<uint64_t>(ep)));
        int successes = 0;
        int oow = 0;
        while (!env.terminal()) {
            const auto outcome = env.step(env.oracle_policy());
            (outcome.kind == unload::StepKind::PickSuccess ? successes : oow) += 1;
        }
        success_norm += static_cast<double>(successes) / n_total;
        oow_norm += static_cast<double>(oow) / n_total;
    }
    std::cout << "success_norm " << unload::format_double(success_norm / episodes)
              << " oow_norm " << unload::format_double(oow_norm / episodes) << "\n";
    return kExitOk;
}

int cmd_render(const CommonOpts& opts, uint64_t seed, const std::string& out_path,
               const std::string& picks) {
    unload::TrainConfig config = build_config(opts);
    config.env.validate();
    unload::StackEnv env(config.env, seed);
    // optional scripted pick sequence "u,v;u,v;..."
    if (!picks.empty()) {
        std::stringstream ss(picks);
        std::string token;
        while (std::getline(ss, token, ';')) {
            const auto comma = token.find(',');
            if (comma == std::string::npos) {
                std::cerr << "error: bad pick token: " << token << "\n";
                return kExitBadConfig;
            }
            env.step({std::stoi(token.substr(0, comma)), std::stoi(token.substr(comma + 1))});
        }
    }
    unload::write_ppm(env.render(), out_path);
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint, uint64_t seed,
             int episodes, bool force_mask) {
    unload::TrainConfig config = build_config(opts);
    config.force_mask_in_eval = force_mask;
    config.validate();
    unload::CriticEnsemble ensemble = unload::CriticEnsemble::load(checkpoint);
    const auto record = unload::evaluate(ensemble, config, episodes,
                                         unload::derive_seed(seed, "eval"), 0);
    std::cout << "success_norm " << unload::format_double(record.success_norm) << " oow_norm "
              << unload::format_double(record.oow_norm) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parcel-unloading RL: environment, training, and ablation harness"};
    app.require_subcommand(1);

    CommonOpts opts;
    uint64_t seed = 0;
    std::string variant;
    int steps_override = -1;
    std::vector<uint64_t> seeds = {0, 1, 2, 3, 4, 5};
    std::vector<std::string> variants;
    int parallel = 1;
    int episodes = 1;
    std::string out_path = "render.ppm";
    std::string picks;
    std::string checkpoint;
    bool force_mask = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "config file (key = value sections)");
        cmd->add_option("--out", opts.out_dir, "output directory");
    };

    auto* train_cmd = app.add_subcommand("train", "train one run, write metrics + checkpoint");
    add_common(train_cmd);
    train_cmd->add_option("--seed", seed, "run seed");
    train_cmd->add_option("--variant", variant, "mask-off|mask-off-v|mask-on|mask-on-v");
    train_cmd->add_option("--steps", steps_override, "override total training steps");

    auto* ablate_cmd = app.add_subcommand("ablate", "run the variant x seed matrix");
    add_common(ablate_cmd);
    ablate_cmd->add_option("--seeds", seeds, "run seeds")->delimiter(',');
    ablate_cmd->add_option("--variants", variants, "variant filter")->delimiter(',');
    ablate_cmd->add_option("--parallel", parallel, "worker threads");
    ablate_cmd->add_option("--steps", steps_override, "override total training steps");

    auto* oracle_cmd = app.add_subcommand("oracle", "roll the top-down oracle baseline");
    add_common(oracle_cmd);
    oracle_cmd->add_option("--seed", seed, "episode seed base");
    oracle_cmd->add_option("--episodes", episodes, "number of episodes");

    auto* render_cmd = app.add_subcommand("render", "dump an observation as binary PPM");
    add_common(render_cmd);
    render_cmd->add_option("--seed", seed, "episode seed");
    render_cmd->add_option("--ppm", out_path, "output PPM path");
    render_cmd->add_option("--picks", picks, "scripted picks u,v;u,v;... before rendering");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved checkpoint greedily");
    add_common(eval_cmd);
    eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint path")->required();
    eval_cmd->add_option("--seed", seed, "evaluation seed base");
    eval_cmd->add_option("--episodes", episodes, "number of episodes");
    eval_cmd->add_flag("--force-mask", force_mask, "apply the safety bias regardless of variant");

    CLI11_PARSE(app, argc, argv);

    try {
        seed = effective_seed(seed);
        if (train_cmd->parsed()) return cmd_train(opts, seed, variant, steps_override);
        if (ablate_cmd->parsed())
            return cmd_ablate(opts, seeds, variants, parallel, steps_override);
        if (oracle_cmd->parsed()) return cmd_oracle(opts, seed, episodes);
        if (render_cmd->parsed()) return cmd_render(opts, seed, out_path, picks);
        if (eval_cmd->parsed()) return cmd_eval(opts, checkpoint, seed, episodes, force_mask);
    } catch (const unload::NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadConfig;
    }
    return kExitOk;
}
