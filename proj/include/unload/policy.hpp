#pragma once

#include <vector>

#include "unload/net.hpp"
#include "unload/rng.hpp"

namespace unload {

struct MaskConfig {
    double bias = 100.0;  // safety bias b, > 0 when the mask is active
    double epsilon = 0.1;
    double softmax_temperature = 1.0;

    void validate() const {
        if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("epsilon in [0,1]");
        if (softmax_temperature <= 0.0) throw std::invalid_argument("temperature > 0");
    }
};

// Adds b exactly at pixels flagged in-workspace, leaves the rest unchanged.
QMap mask_apply(const QMap& qmap, const std::vector<uint8_t>& ws_mask, double bias);

// Softmax over all pixels, max-subtracted, divided by temperature.
Eigen::VectorXd softmax_probs(const QMap& qmap, double temperature);

// Training-time action draw. With probability epsilon: uniform over
// in-workspace pixels. Otherwise: softmax sample over the masked min of the
// TARGET critics. An all-false mask falls through to the softmax branch,
// where the mask is a no-op shift. `bias` is 0 for mask-off variants; the
// epsilon branch draws in-workspace actions in every variant.
int exploration_action(const Observation& obs, const CriticEnsemble& ensemble,
                       const std::vector<uint8_t>& ws_mask, const MaskConfig& config,
                       Rng& rng);

// Evaluation rule: argmax over pixels of the masked min-critic TARGET map;
// ties broken by smallest row-major pixel index.
int greedy_action(const Observation& obs, const CriticEnsemble& ensemble,
                  const std::vector<uint8_t>& ws_mask, double bias);

// Same rules on a precomputed map (used by tests and property checks).
int greedy_action_from_map(const QMap& masked);
int sample_from_softmax(const Eigen::VectorXd& probs, Rng& rng);

}  // namespace unload
