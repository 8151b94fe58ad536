#include "unload/policy.hpp"

#include <stdexcept>

namespace unload {

QMap mask_apply(const QMap& qmap, const std::vector<uint8_t>& ws_mask, double bias) {
    if (static_cast<Eigen::Index>(ws_mask.size()) != qmap.values.size()) {
        throw std::invalid_argument("mask / Q map shape mismatch");
    }
    QMap out = qmap;
    for (Eigen::Index i = 0; i < out.values.size(); ++i) {
        if (ws_mask[static_cast<size_t>(i)]) out.values(i) += bias;
    }
    return out;
}

Eigen::VectorXd softmax_probs(const QMap& qmap, double temperature) {
    const Eigen::ArrayXd logits =
        (qmap.values.array() - qmap.values.maxCoeff()) / temperature;
    Eigen::ArrayXd exps = logits.exp();
    return (exps / exps.sum()).matrix();
}

int sample_from_softmax(const Eigen::VectorXd& probs, Rng& rng) {
    const double u = rng.uniform01();
    double cum = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        cum += probs(i);
        if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size() - 1);  // guard against rounding
}

int exploration_action(const Observation& obs, const CriticEnsemble& ensemble,
                       const std::vector<uint8_t>& ws_mask, const MaskConfig& config,
                       Rng& rng) {
    config.validate();
    size_t n_in_workspace = 0;
    for (uint8_t m : ws_mask) n_in_workspace += m;

    if (rng.uniform01() <= config.epsilon && n_in_workspace > 0) {
        uint64_t pick = rng.uniform_int(n_in_workspace);
        for (size_t i = 0; i < ws_mask.size(); ++i) {
            if (ws_mask[i] && pick-- == 0) return static_cast<int>(i);
        }
    }

    const QMap min_q = min_over_critics(ensemble.forward(obs, /*use_target=*/true));
    const QMap masked = mask_apply(min_q, ws_mask, config.bias);
    return sample_from_softmax(softmax_probs(masked, config.softmax_temperature), rng);
}

int greedy_action_from_map(const QMap& masked) {
    int best = 0;
    double best_value = masked.values(0);
    for (Eigen::Index i = 1; i < masked.values.size(); ++i) {
        if (masked.values(i) > best_value) {  // strict: row-major tie-break
            best_value = masked.values(i);
            best = static_cast<int>(i);
        }
    }
    return best;
}

int greedy_action(const Observation& obs, const CriticEnsemble& ensemble,
                  const std::vector<uint8_t>& ws_mask, double bias) {
    const QMap min_q = min_over_critics(ensemble.forward(obs, /*use_target=*/true));
    return greedy_action_from_map(mask_apply(min_q, ws_mask, bias));
}

}  // namespace unload
