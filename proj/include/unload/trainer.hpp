#pragma once

#include <functional>
#include <string>
#include <vector>

#include "unload/env.hpp"
#include "unload/net.hpp"
#include "unload/policy.hpp"
#include "unload/replay.hpp"
#include "unload/reward.hpp"

namespace unload {

enum class Variant { MaskOff, MaskOffV, MaskOn, MaskOnV };

bool variant_uses_mask(Variant v);
bool variant_uses_verticality(Variant v);
std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);
inline const std::vector<Variant> kAllVariants = {Variant::MaskOff, Variant::MaskOffV,
                                                  Variant::MaskOn, Variant::MaskOnV};

struct TrainConfig {
    int total_steps = 100000;
    double zeta = 0.005;
    int batch_size = 64;
    double learning_rate = 1e-4;
    double gamma = 0.99;
    int num_critics = 2;
    double epsilon = 0.1;
    double lambda = 2.0;
    double bias = 100.0;
    double softmax_temperature = 1.0;
    int eval_every_episodes = 10;
    int eval_episodes = 3;
    size_t replay_capacity = 100000;
    Variant variant = Variant::MaskOnV;
    EnvConfig env;
    std::vector<int> hidden_sizes = {256, 256};
    // When set, evaluation applies the safety bias even for mask-off
    // variants; default evaluation mirrors the training variant.
    bool force_mask_in_eval = false;

    void validate() const;
    NetConfig net_config(uint64_t run_seed) const;
    RewardConfig reward_config() const;
    MaskConfig mask_config() const;  // bias zeroed for mask-off variants
    double eval_bias() const;
};

struct EvalRecord {
    int step = 0;  // environment step count at evaluation time
    double success_norm = 0.0;
    double oow_norm = 0.0;
    std::vector<int> raw_success;  // per evaluation episode
    std::vector<int> raw_oow;
};

struct TrainStats {
    long oow_actions_total = 0;
    long oow_actions_first_2000 = 0;
    long episodes = 0;
};

struct TrainResult {
    CriticEnsemble ensemble;
    std::vector<EvalRecord> evals;
    TrainStats stats;
};

// Full training loop: exploration-policy interaction, replay, one ensemble
// update and one Polyak step per environment step once the buffer holds a
// batch, evaluation every eval_every_episodes episodes. All randomness
// derives from run_seed through named sub-streams.
TrainResult train(const TrainConfig& config, uint64_t run_seed);

// Greedy rollout over n_episodes freshly seeded environments; counts are
// normalized by the parcel total and averaged.
EvalRecord evaluate(const CriticEnsemble& ensemble, const TrainConfig& config,
                    int n_episodes, uint64_t eval_seed_base, int step_index);

// Rollout with an arbitrary actor (oracle baseline, random baseline, ...).
using Actor = std::function<Pixel(const StackEnv&, const Observation&)>;
EvalRecord rollout_metrics(const Actor& actor, const EnvConfig& env_config, int n_episodes,
                           uint64_t eval_seed_base, int step_index);

struct RunCurve {
    Variant variant = Variant::MaskOnV;
    uint64_t seed = 0;
    std::vector<EvalRecord> evals;
    TrainStats stats;
};

struct AblationConfig {
    TrainConfig base;
    std::vector<Variant> variants = kAllVariants;
    std::vector<uint64_t> seeds = {0, 1, 2, 3, 4, 5};
    int parallel = 1;
};

struct AblationResult {
    std::vector<RunCurve> runs;  // in (variant, seed) declaration order
};

// Trains every (variant, seed) pair. Runs are independent; --parallel only
// changes scheduling, never results.
AblationResult run_ablation(const AblationConfig& config);

// Box-plot statistics treating each evaluation step as one data sample.
struct BoxStats {
    double median = 0, q1 = 0, q3 = 0, lo_whisker = 0, hi_whisker = 0;
};
BoxStats box_stats(std::vector<double> samples);

// Best-seed selection over success_norm curves.
enum class BestCriterion { Maximum, Final, Mean };
uint64_t best_seed(const std::vector<RunCurve>& runs, Variant variant, BestCriterion criterion);

double curve_auc(const std::vector<EvalRecord>& evals);  // mean success_norm

// CSV emission. All output is byte-stable for identical inputs.
// header: step,seed,variant,success_norm,oow_norm
void write_metrics_csv(const std::string& path, const std::vector<RunCurve>& runs);
// header: variant,metric,median,q1,q3,lo_whisker,hi_whisker
void write_box_stats_csv(const std::string& path, const std::vector<RunCurve>& runs);
// per-variant best-seed curves under one criterion, metrics-csv format
void write_best_seed_csv(const std::string& path, const std::vector<RunCurve>& runs,
                         BestCriterion criterion);
// header: variant,step,success_mean,success_std,oow_mean,oow_std
void write_mean_curves_csv(const std::string& path, const std::vector<RunCurve>& runs);

std::string format_double(double value);

}  // namespace unload
