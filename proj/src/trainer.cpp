#include "unload/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace unload {

bool variant_uses_mask(Variant v) { return v == Variant::MaskOn || v == Variant::MaskOnV; }

bool variant_uses_verticality(Variant v) {
    return v == Variant::MaskOffV || v == Variant::MaskOnV;
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::MaskOff: return "mask-off";
        case Variant::MaskOffV: return "mask-off-v";
        case Variant::MaskOn: return "mask-on";
        case Variant::MaskOnV: return "mask-on-v";
    }
    return "?";
}

Variant parse_variant(const std::string& name) {
    for (Variant v : kAllVariants) {
        if (variant_name(v) == name) return v;
    }
    throw std::invalid_argument("unknown variant: " + name);
}

void TrainConfig::validate() const {
    env.validate();
    if (total_steps < 0) throw std::invalid_argument("total_steps must be >= 0");
    if (zeta <= 0.0 || zeta > 1.0) throw std::invalid_argument("zeta must be in (0, 1]");
    if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("gamma must be in [0, 1)");
    if (num_critics < 1) throw std::invalid_argument("need at least one critic");
    if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("epsilon must be in [0, 1]");
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    if (bias <= 0.0) throw std::invalid_argument("safety bias must be positive");
    if (softmax_temperature <= 0.0) throw std::invalid_argument("temperature must be positive");
    if (eval_every_episodes <= 0) throw std::invalid_argument("eval_every_episodes must be positive");
    if (eval_episodes <= 0) throw std::invalid_argument("eval_episodes must be positive");
    if (replay_capacity == 0) throw std::invalid_argument("replay_capacity must be positive");
}

NetConfig TrainConfig::net_config(uint64_t run_seed) const {
    NetConfig net;
    net.channels = 3;
    net.height = env.obs_resolution;
    net.width = env.obs_resolution;
    net.hidden_sizes = hidden_sizes;
    net.num_critics = num_critics;
    net.seed = run_seed;
    return net;
}

RewardConfig TrainConfig::reward_config() const {
    return {variant_uses_verticality(variant) ? RewardKind::Verticality : RewardKind::Baseline,
            lambda};
}

MaskConfig TrainConfig::mask_config() const {
    return {variant_uses_mask(variant) ? bias : 0.0, epsilon, softmax_temperature};
}

double TrainConfig::eval_bias() const {
    return (variant_uses_mask(variant) || force_mask_in_eval) ? bias : 0.0;
}

EvalRecord rollout_metrics(const Actor& actor, const EnvConfig& env_config, int n_episodes,
                           uint64_t eval_seed_base, int step_index) {
    if (n_episodes <= 0) throw std::invalid_argument("need at least one evaluation episode");
    const int n_total = env_config.total_parcels();

    EvalRecord record;
    record.step = step_index;
    for (int ep = 0; ep < n_episodes; ++ep) {
        StackEnv env(env_config, derive_seed(eval_seed_base, static_cast<uint64_t>(ep)));
        int successes = 0;
        int oow = 0;
        while (!env.terminal()) {
            const Observation obs = env.render();
            const StepOutcome outcome = env.step(actor(env, obs));
            if (outcome.kind == StepKind::PickSuccess) {
                ++successes;
            } else {
                ++oow;
            }
        }
        record.raw_success.push_back(successes);
        record.raw_oow.push_back(oow);
        record.success_norm += static_cast<double>(successes) / n_total;
        record.oow_norm += static_cast<double>(oow) / n_total;
    }
    record.success_norm /= n_episodes;
    record.oow_norm /= n_episodes;
    return record;
}

EvalRecord evaluate(const CriticEnsemble& ensemble, const TrainConfig& config,
                    int n_episodes, uint64_t eval_seed_base, int step_index) {
    const double eval_bias = config.eval_bias();
    Actor greedy = [&](const StackEnv& env, const Observation& obs) {
        const auto mask = workspace_action_mask(env.state(), env.camera(), env.workspace());
        const int action = greedy_action(obs, ensemble, mask, eval_bias);
        return Pixel{action % env.camera().obs_resolution,
                     action / env.camera().obs_resolution};
    };
    return rollout_metrics(greedy, config.env, n_episodes, eval_seed_base, step_index);
}

TrainResult train(const TrainConfig& config, uint64_t run_seed) {
    config.validate();

    CriticEnsemble ensemble(config.net_config(derive_seed(run_seed, "net-init")));
    ReplayBuffer buffer(config.replay_capacity);
    Rng explore_rng(derive_seed(run_seed, "exploration"));
    Rng replay_rng(derive_seed(run_seed, "replay"));
    const uint64_t env_seed_base = derive_seed(run_seed, "env");
    const uint64_t eval_seed_base = derive_seed(run_seed, "eval");

    const MaskConfig mask_config = config.mask_config();
    const RewardConfig reward_config = config.reward_config();

    TrainResult result{std::move(ensemble), {}, {}};
    if (config.total_steps == 0) return result;

    uint64_t episode_counter = 0;
    StackEnv env(config.env, derive_seed(env_seed_base, episode_counter));
    Observation obs = env.render();

    for (int step = 0; step < config.total_steps; ++step) {
        const auto mask = workspace_action_mask(env.state(), env.camera(), env.workspace());
        const int action =
            exploration_action(obs, result.ensemble, mask, mask_config, explore_rng);
        const Pixel pixel{action % env.camera().obs_resolution,
                          action / env.camera().obs_resolution};
        const StepOutcome outcome = env.step(pixel);
        if (outcome.kind != StepKind::PickSuccess) {
            result.stats.oow_actions_total += 1;
            if (step < 2000) result.stats.oow_actions_first_2000 += 1;
        }
        Observation next_obs = env.render();
        buffer.push({std::move(obs), action, reward(outcome, reward_config), next_obs,
                     outcome.terminal});

        if (buffer.size() >= static_cast<size_t>(config.batch_size)) {
            const auto batch = buffer.sample(static_cast<size_t>(config.batch_size), replay_rng);
            std::vector<const Observation*> next_batch;
            std::vector<double> rewards;
            std::vector<uint8_t> terminals;
            UpdateBatch update_batch;
            for (const Transition* t : batch) {
                update_batch.observations.push_back(&t->observation);
                update_batch.actions.push_back(t->action);
                next_batch.push_back(&t->next_observation);
                rewards.push_back(t->reward);
                terminals.push_back(t->terminal ? 1 : 0);
            }
            update_batch.targets =
                result.ensemble.td_targets(next_batch, rewards, terminals, config.gamma);
            try {
                const auto losses =
                    result.ensemble.update(update_batch, config.learning_rate);
                for (double l : losses) {
                    if (!std::isfinite(l)) throw NumericalError("non-finite loss");
                }
            } catch (const NumericalError& e) {
                std::ostringstream msg;
                msg << e.what() << " at step " << step << ", |params| = "
                    << result.ensemble.flatten_params().norm();
                throw NumericalError(msg.str());
            }
            result.ensemble.polyak_update(config.zeta);
        }

        if (outcome.terminal) {
            ++episode_counter;
            result.stats.episodes += 1;
            if (episode_counter % static_cast<uint64_t>(config.eval_every_episodes) == 0) {
                result.evals.push_back(evaluate(
                    result.ensemble, config, config.eval_episodes,
                    derive_seed(eval_seed_base, episode_counter), step + 1));
            }
            env.reset(derive_seed(env_seed_base, episode_counter));
            next_obs = env.render();
        }
        obs = std::move(next_obs);
    }
    return result;
}

AblationResult run_ablation(const AblationConfig& config) {
    if (config.seeds.empty()) throw std::invalid_argument("need at least one seed");
    if (config.variants.empty()) throw std::invalid_argument("need at least one variant");

    struct Job {
        Variant variant;
        uint64_t seed;
    };
    std::vector<Job> jobs;
    for (Variant v : config.variants) {
        for (uint64_t s : config.seeds) jobs.push_back({v, s});
    }

    AblationResult result;
    result.runs.resize(jobs.size());
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
            try {
                TrainConfig run_config = config.base;
                run_config.variant = jobs[i].variant;
                TrainResult trained = train(run_config, jobs[i].seed);
                result.runs[i] = {jobs[i].variant, jobs[i].seed, std::move(trained.evals),
                                  trained.stats};
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const int n_threads = std::max(1, std::min<int>(config.parallel, static_cast<int>(jobs.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return result;
}

BoxStats box_stats(std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("box_stats on empty sample set");
    std::sort(samples.begin(), samples.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(samples.size() - 1);
        const size_t lo = static_cast<size_t>(pos);
        const size_t hi = std::min(lo + 1, samples.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return samples[lo] * (1.0 - frac) + samples[hi] * frac;
    };
    BoxStats stats;
    stats.median = quantile(0.5);
    stats.q1 = quantile(0.25);
    stats.q3 = quantile(0.75);
    const double iqr = stats.q3 - stats.q1;
    const double lo_fence = stats.q1 - 1.5 * iqr;
    const double hi_fence = stats.q3 + 1.5 * iqr;
    stats.lo_whisker = stats.q3;
    stats.hi_whisker = stats.q1;
    for (double v : samples) {
        if (v >= lo_fence) {
            stats.lo_whisker = v;
            break;
        }
    }
    for (auto it = samples.rbegin(); it != samples.rend(); ++it) {
        if (*it <= hi_fence) {
            stats.hi_whisker = *it;
            break;
        }
    }
    return stats;
}

namespace {

double curve_score(const std::vector<EvalRecord>& evals, BestCriterion criterion) {
    if (evals.empty()) return 0.0;
    switch (criterion) {
        case BestCriterion::Final:
            return evals.back().success_norm;
        case BestCriterion::Maximum: {
            double best = evals.front().success_norm;
            for (const auto& e : evals) best = std::max(best, e.success_norm);
            return best;
        }
        case BestCriterion::Mean:
            return curve_auc(evals);
    }
    return 0.0;
}

}  // namespace

double curve_auc(const std::vector<EvalRecord>& evals) {
    if (evals.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& e : evals) sum += e.success_norm;
    return sum / static_cast<double>(evals.size());
}

uint64_t best_seed(const std::vector<RunCurve>& runs, Variant variant,
                   BestCriterion criterion) {
    const RunCurve* best = nullptr;
    double best_score = 0.0;
    for (const auto& run : runs) {
        if (run.variant != variant) continue;
        const double score = curve_score(run.evals, criterion);
        if (!best || score > best_score) {
            best = &run;
            best_score = score;
        }
    }
    if (!best) throw std::invalid_argument("no runs for variant " + variant_name(variant));
    return best->seed;
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

void write_metrics_csv(const std::string& path, const std::vector<RunCurve>& runs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "step,seed,variant,success_norm,oow_norm\n";
    for (const auto& run : runs) {
        for (const auto& e : run.evals) {
            out << e.step << ',' << run.seed << ',' << variant_name(run.variant) << ','
                << format_double(e.success_norm) << ',' << format_double(e.oow_norm) << '\n';
        }
    }
}

void write_box_stats_csv(const std::string& path, const std::vector<RunCurve>& runs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "variant,metric,median,q1,q3,lo_whisker,hi_whisker\n";
    // preserve variant declaration order, one sample per evaluation step
    std::vector<Variant> seen;
    for (const auto& run : runs) {
        if (std::find(seen.begin(), seen.end(), run.variant) == seen.end()) {
            seen.push_back(run.variant);
        }
    }
    for (Variant v : seen) {
        for (const char* metric : {"success_norm", "oow_norm"}) {
            std::vector<double> samples;
            for (const auto& run : runs) {
                if (run.variant != v) continue;
                for (const auto& e : run.evals) {
                    samples.push_back(std::string(metric) == "success_norm" ? e.success_norm
                                                                            : e.oow_norm);
                }
            }
            if (samples.empty()) continue;
            const BoxStats stats = box_stats(std::move(samples));
            out << variant_name(v) << ',' << metric << ',' << format_double(stats.median) << ','
                << format_double(stats.q1) << ',' << format_double(stats.q3) << ','
                << format_double(stats.lo_whisker) << ',' << format_double(stats.hi_whisker)
                << '\n';
        }
    }
}

void write_best_seed_csv(const std::string& path, const std::vector<RunCurve>& runs,
                         BestCriterion criterion) {
    std::vector<Variant> seen;
    for (const auto& run : runs) {
        if (std::find(seen.begin(), seen.end(), run.variant) == seen.end()) {
            seen.push_back(run.variant);
        }
    }
    std::vector<RunCurve> best_runs;
    for (Variant v : seen) {
        const uint64_t seed = best_seed(runs, v, criterion);
        for (const auto& run : runs) {
            if (run.variant == v && run.seed == seed) {
                best_runs.push_back(run);
                break;
            }
        }
    }
    write_metrics_csv(path, best_runs);
}

void write_mean_curves_csv(const std::string& path, const std::vector<RunCurve>& runs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "variant,step,success_mean,success_std,oow_mean,oow_std\n";
    std::vector<Variant> seen;
    for (const auto& run : runs) {
        if (std::find(seen.begin(), seen.end(), run.variant) == seen.end()) {
            seen.push_back(run.variant);
        }
    }
    for (Variant v : seen) {
        std::vector<const RunCurve*> group;
        for (const auto& run : runs) {
            if (run.variant == v) group.push_back(&run);
        }
        size_t n_points = 0;
        for (const auto* run : group) n_points = std::max(n_points, run->evals.size());
        for (size_t i = 0; i < n_points; ++i) {
            std::vector<double> success, oow;
            int step = 0;
            for (const auto* run : group) {
                if (i >= run->evals.size()) continue;
                success.push_back(run->evals[i].success_norm);
                oow.push_back(run->evals[i].oow_norm);
                step = run->evals[i].step;
            }
            auto mean_std = [](const std::vector<double>& xs) {
                const double mean =
                    std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
                double var = 0.0;
                for (double x : xs) var += (x - mean) * (x - mean);
                var /= static_cast<double>(xs.size());
                return std::pair<double, double>{mean, std::sqrt(var)};
            };
            const auto [s_mean, s_std] = mean_std(success);
            const auto [o_mean, o_std] = mean_std(oow);
            out << variant_name(v) << ',' << step << ',' << format_double(s_mean) << ','
                << format_double(s_std) << ',' << format_double(o_mean) << ','
                << format_double(o_std) << '\n';
        }
    }
}

}  // namespace unload
