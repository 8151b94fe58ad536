// Acceptance gate: one line per criterion, exit 0 only if all pass.
// argv[1] (optional): path to the `unload` CLI binary, used by criterion 9.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "unload/config_file.hpp"
#include "unload/trainer.hpp"

using namespace unload;

namespace {

int g_failures = 0;

void report(int index, bool pass, const std::string& title, const std::string& detail) {
    std::cout << "[" << index << "] " << (pass ? "PASS" : "FAIL") << " " << title;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

TrainConfig desk_config() {
    TrainConfig config;
    config.env.columns = 4;
    config.env.rows = 3;
    config.env.obs_resolution = 32;
    config.total_steps = 20000;
    config.variant = Variant::MaskOnV;
    return config;
}

// ---------------------------------------------------------------------------
// 1. Scope statement: full-scale results are substituted.

void criterion_1() {
    report(1, true, "full-scale picking rates are out of scope",
           "headline success rates from physical robot cells depend on 3D physics "
           "and deep perception models this simulator does not reproduce; criteria "
           "2-9 substitute exact property checks and a desk-scale learning "
           "benchmark");
}

// ---------------------------------------------------------------------------
// 2. Environment law suite.

void criterion_2() {
    const EnvConfig env_config;  // default 7x6
    const int n_total = env_config.total_parcels();
    const int res = env_config.obs_resolution;
    Rng rng(20260825);
    long violations = 0;
    long steps_taken = 0;
    const int episodes = 10000;
    for (int ep = 0; ep < episodes && violations == 0; ++ep) {
        StackEnv env(env_config, static_cast<uint64_t>(ep));
        while (!env.terminal()) {
            const StackState& before = env.state();
            const int clock_before = before.clock;
            const Pixel action{static_cast<int>(rng.uniform_int(res)),
                               static_cast<int>(rng.uniform_int(res))};
            const StepOutcome outcome = env.step(action);
            ++steps_taken;
            const StackState& s = env.state();

            // conservation: parcels on the floor plus parcels removed == total
            if (s.occupied_count() + s.clock != n_total) ++violations;
            // clock identity: the clock advances by exactly the removals
            if (s.clock - clock_before != outcome.clock_delta) ++violations;
            if (outcome.clock_delta != 1 + outcome.n_fallen_out) ++violations;
            if (s.removed_success + s.removed_fallen + s.removed_forced != s.clock) ++violations;
            // gravity closure: every column is a contiguous prefix from row 0
            for (int c = 0; c < env_config.columns; ++c) {
                const int h = s.column_height(c);
                for (int r = 0; r < env_config.rows; ++r) {
                    if (s.occupied(c, r) != (r < h)) ++violations;
                }
            }
            if (s.clock > n_total) ++violations;
        }
        // exact horizon: every episode terminates with the scene empty at T = N
        if (env.state().clock != n_total) ++violations;
        if (env.state().occupied_count() != 0) ++violations;
    }
    std::ostringstream detail;
    detail << episodes << " episodes, " << steps_taken << " steps, " << violations
           << " violations";
    report(2, violations == 0, "environment laws hold on every step", detail.str());
}

// ---------------------------------------------------------------------------
// 3. Finite-difference gradient oracle.

Eigen::VectorXd flatten_grads(const CriticEnsemble::Gradients& grads) {
    Eigen::Index n = 0;
    for (const auto& g : grads.trunk) n += g.weight.size() + g.bias.size();
    for (const auto& g : grads.heads) n += g.weight.size() + g.bias.size();
    Eigen::VectorXd flat(n);
    Eigen::Index at = 0;
    auto put = [&](const DenseGrad& g) {
        for (Eigen::Index r = 0; r < g.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < g.weight.cols(); ++c) flat(at++) = g.weight(r, c);
        }
        for (Eigen::Index i = 0; i < g.bias.size(); ++i) flat(at++) = g.bias(i);
    };
    for (const auto& g : grads.trunk) put(g);
    for (const auto& g : grads.heads) put(g);
    return flat;
}

void criterion_3() {
    const auto start = std::chrono::steady_clock::now();
    const double h = 1e-5;
    double worst = 0.0;
    Rng rng(3);
    for (int instance = 0; instance < 100; ++instance) {
        NetConfig net{3, 2, 2, {3}, 2, static_cast<uint64_t>(1000 + instance)};
        CriticEnsemble ensemble(net);

        UpdateBatch batch;
        std::vector<Observation> observations;
        for (int i = 0; i < 3; ++i) {
            Observation obs = make_observation(2, 2);
            for (auto& byte : obs.rgb) byte = static_cast<uint8_t>(rng.uniform_int(256));
            observations.push_back(std::move(obs));
        }
        for (const auto& obs : observations) {
            batch.observations.push_back(&obs);
            batch.actions.push_back(static_cast<int>(rng.uniform_int(4)));
            batch.targets.push_back(rng.uniform(-1.0, 1.0));
        }

        const Eigen::VectorXd analytic = flatten_grads(ensemble.compute_gradients(batch));
        const Eigen::VectorXd theta = ensemble.flatten_params();
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            Eigen::VectorXd perturbed = theta;
            perturbed(i) = theta(i) + h;
            ensemble.set_params(perturbed);
            const double plus = ensemble.total_loss(batch);
            perturbed(i) = theta(i) - h;
            ensemble.set_params(perturbed);
            const double minus = ensemble.total_loss(batch);
            ensemble.set_params(theta);
            const double fd = (plus - minus) / (2.0 * h);
            const double denom = std::max({std::abs(fd), std::abs(analytic(i)), 1e-6});
            worst = std::max(worst, std::abs(fd - analytic(i)) / denom);
        }
    }
    const double elapsed = seconds_since(start);
    std::ostringstream detail;
    detail << "100 instances, worst relative error " << worst << ", " << elapsed << " s";
    report(3, worst < 1e-4 && elapsed < 60.0,
           "analytic gradients match central finite differences", detail.str());
}

// ---------------------------------------------------------------------------
// 4. TD target formula oracle, bit-exact against a plain loop.

double brute_force_target(double reward, double gamma, bool terminal,
                          const std::vector<QMap>& maps) {
    if (terminal) return reward;
    double best = -std::numeric_limits<double>::infinity();
    const Eigen::Index n = maps.front().values.size();
    for (Eigen::Index a = 0; a < n; ++a) {
        double min_k = maps[0].values(a);
        for (size_t k = 1; k < maps.size(); ++k) {
            if (maps[k].values(a) < min_k) min_k = maps[k].values(a);
        }
        if (min_k > best) best = min_k;
    }
    return reward + gamma * best;
}

void criterion_4() {
    Rng rng(4);
    long mismatches = 0;
    for (int instance = 0; instance < 1000; ++instance) {
        const int height = 1 + static_cast<int>(rng.uniform_int(6));
        const int width = 1 + static_cast<int>(rng.uniform_int(6));
        const int k = 1 + static_cast<int>(rng.uniform_int(4));
        std::vector<QMap> maps;
        for (int i = 0; i < k; ++i) {
            QMap q{height, width, Eigen::VectorXd(height * width)};
            for (Eigen::Index j = 0; j < q.values.size(); ++j) {
                q.values(j) = rng.uniform(-10.0, 10.0);
            }
            maps.push_back(std::move(q));
        }
        const double reward = rng.uniform(-5.0, 5.0);
        const double gamma = rng.uniform01();
        const bool terminal = rng.bernoulli(0.2);
        const double expected = brute_force_target(reward, gamma, terminal, maps);
        const double actual = td_target_from_qmaps(reward, gamma, terminal, maps);
        if (std::memcmp(&expected, &actual, sizeof(double)) != 0) ++mismatches;
    }
    std::ostringstream detail;
    detail << "1000 instances, " << mismatches << " bit mismatches";
    report(4, mismatches == 0,
           "td_target equals an independent brute-force implementation bit-exactly",
           detail.str());
}

// ---------------------------------------------------------------------------
// 5. Mask safety and softmax mass bound.

void criterion_5() {
    Rng rng(5);
    const int height = 8, width = 8, n = height * width;
    const double b = 100.0;
    long argmax_violations = 0;
    long mass_violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        QMap q{height, width, Eigen::VectorXd(n)};
        for (Eigen::Index i = 0; i < n; ++i) q.values(i) = rng.uniform(-3.0, 3.0);
        std::vector<uint8_t> ws(n, 0);
        const int n_true = 1 + static_cast<int>(rng.uniform_int(n));
        for (int i = 0; i < n_true; ++i) ws[rng.uniform_int(n)] = 1;

        const QMap masked = mask_apply(q, ws, b);
        const int a = greedy_action_from_map(masked);
        if (!ws[static_cast<size_t>(a)]) ++argmax_violations;

        const Eigen::VectorXd probs = softmax_probs(masked, 1.0);
        double out_mass = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!ws[static_cast<size_t>(i)]) out_mass += probs(i);
        }
        const double spread = q.values.maxCoeff() - q.values.minCoeff();
        if (out_mass > n * std::exp(-(b - spread))) ++mass_violations;
    }
    std::ostringstream detail;
    detail << "1000 maps, " << argmax_violations << " argmax violations, " << mass_violations
           << " mass-bound violations";
    report(5, argmax_violations == 0 && mass_violations == 0,
           "safety bias keeps argmax in-workspace and bounds softmax leakage", detail.str());
}

// ---------------------------------------------------------------------------
// 6. Polyak exactness to one ULP.

bool within_one_ulp(double a, double b) {
    if (a == b) return true;
    return std::nexttoward(a, b) == b;
}

void criterion_6() {
    NetConfig net{3, 4, 4, {8, 8}, 2, 6};
    CriticEnsemble ensemble(net);
    Rng rng(6);
    long violations = 0;
    const double zeta = 0.005;
    for (int round = 0; round < 20; ++round) {
        // drift the online parameters, then check the averaging law exactly
        Eigen::VectorXd online = ensemble.flatten_params();
        for (Eigen::Index i = 0; i < online.size(); ++i) {
            online(i) += rng.uniform(-0.1, 0.1);
        }
        ensemble.set_params(online);
        const Eigen::VectorXd old_target = ensemble.flatten_target_params();
        ensemble.polyak_update(zeta);
        const Eigen::VectorXd new_target = ensemble.flatten_target_params();
        for (Eigen::Index i = 0; i < online.size(); ++i) {
            const double expected = (1.0 - zeta) * old_target(i) + zeta * online(i);
            if (!within_one_ulp(new_target(i), expected)) ++violations;
        }
    }
    std::ostringstream detail;
    detail << "20 rounds, " << violations << " parameters off by more than one ULP";
    report(6, violations == 0, "target update equals (1-zeta)*old + zeta*online", detail.str());
}

// ---------------------------------------------------------------------------
// 7 + 8. Desk-scale learning and ablation direction. The MaskOnV runs are
// shared between the two criteria.

void criteria_7_and_8() {
    const std::vector<uint64_t> seeds = {0, 1, 2};

    std::vector<RunCurve> mask_on_runs;
    double final_sum = 0.0;
    double worst_seed_seconds = 0.0;
    for (uint64_t seed : seeds) {
        const auto start = std::chrono::steady_clock::now();
        const TrainResult result = train(desk_config(), seed);
        worst_seed_seconds = std::max(worst_seed_seconds, seconds_since(start));
        final_sum += result.evals.empty() ? 0.0 : result.evals.back().success_norm;
        mask_on_runs.push_back({Variant::MaskOnV, seed, result.evals, result.stats});
    }
    const double mean_final = final_sum / static_cast<double>(seeds.size());

    const Actor oracle = [](const StackEnv& env, const Observation&) {
        return env.oracle_policy();
    };
    const EvalRecord oracle_record = rollout_metrics(oracle, desk_config().env, 3, 77, 0);

    std::ostringstream detail7;
    detail7 << "mean final success_norm " << mean_final << " over 3 seeds, worst seed "
            << worst_seed_seconds << " s, oracle success_norm " << oracle_record.success_norm;
    report(7,
           mean_final >= 0.9 && worst_seed_seconds <= 900.0 &&
               oracle_record.success_norm == 1.0,
           "desk-scale MaskOnV training reaches the success threshold", detail7.str());

    std::vector<RunCurve> mask_off_runs;
    for (uint64_t seed : seeds) {
        TrainConfig config = desk_config();
        config.variant = Variant::MaskOff;
        const TrainResult result = train(config, seed);
        mask_off_runs.push_back({Variant::MaskOff, seed, result.evals, result.stats});
    }

    double auc_on = 0.0, auc_off = 0.0;
    long oow_on = 0, oow_off = 0;
    for (const auto& run : mask_on_runs) {
        auc_on += curve_auc(run.evals);
        oow_on += run.stats.oow_actions_first_2000;
    }
    for (const auto& run : mask_off_runs) {
        auc_off += curve_auc(run.evals);
        oow_off += run.stats.oow_actions_first_2000;
    }
    auc_on /= static_cast<double>(seeds.size());
    auc_off /= static_cast<double>(seeds.size());

    const bool auc_ordered = auc_on >= auc_off;
    const bool oow_ratio = oow_off >= 10 * std::max<long>(oow_on, 1);
    std::ostringstream detail8;
    detail8 << "AUC mask-on-v " << auc_on << " vs mask-off " << auc_off
            << "; first-2000-step oow actions " << oow_on << " vs " << oow_off;
    report(8, auc_ordered && oow_ratio, "masking improves AUC and cuts unsafe actions 10x",
           detail8.str());
}

// ---------------------------------------------------------------------------
// 9. Reproducibility of the ablate command across --parallel settings.

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "<missing " + path + ">";
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void criterion_9(const std::string& cli_path) {
    bool pass = false;
    std::string detail;
    const std::vector<std::string> outputs = {"curves.csv", "mean_curves.csv", "box_stats.csv",
                                             "best_max.csv", "best_final.csv", "best_mean.csv"};
    if (!cli_path.empty()) {
        const std::string base = cli_path +
                                 " ablate --config " + std::string(CONFIG_DIR) +
                                 "/desk.ini --steps 300 --seeds 0,1 "
                                 "--variants mask-off,mask-on-v";
        const int rc_a = std::system((base + " --parallel 1 --out acc9_serial").c_str());
        const int rc_b = std::system((base + " --parallel 4 --out acc9_parallel").c_str());
        pass = rc_a == 0 && rc_b == 0;
        for (const auto& name : outputs) {
            if (slurp("acc9_serial/" + name) != slurp("acc9_parallel/" + name)) pass = false;
        }
        detail = "ablate run twice (--parallel 1 vs 4), " +
                 std::to_string(outputs.size()) + " CSVs byte-compared";
    } else {
        AblationConfig ablation;
        ablation.base = desk_config();
        ablation.base.total_steps = 300;
        ablation.variants = {Variant::MaskOff, Variant::MaskOnV};
        ablation.seeds = {0, 1};
        ablation.parallel = 1;
        const AblationResult serial = run_ablation(ablation);
        ablation.parallel = 4;
        const AblationResult parallel = run_ablation(ablation);
        write_metrics_csv("acc9_serial.csv", serial.runs);
        write_metrics_csv("acc9_parallel.csv", parallel.runs);
        pass = slurp("acc9_serial.csv") == slurp("acc9_parallel.csv");
        detail = "library-level ablation, serial vs 4 workers";
    }
    report(9, pass, "ablate output is byte-identical regardless of --parallel", detail);
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli_path = argc > 1 ? argv[1] : "";
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criteria_7_and_8();
    criterion_9(cli_path);
    std::cout << (g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL") << " ("
              << (9 - g_failures) << "/9)" << std::endl;
    return g_failures == 0 ? 0 : 1;
}
