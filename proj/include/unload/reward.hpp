#pragma once

#include <stdexcept>

#include "unload/env.hpp"

namespace unload {

enum class RewardKind { Baseline, Verticality };

struct RewardConfig {
    RewardKind kind = RewardKind::Verticality;
    double lambda = 2.0;  // z-coordinate picking weight

    void validate() const {
        if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
    }
};

// Baseline: 1 on success, 0 otherwise.
// Verticality: 1 + lambda * z_pick on success, 0 otherwise. Fallen parcels
// are not penalized directly; the cost is the consumed clock.
inline double reward(const StepOutcome& outcome, const RewardConfig& config) {
    if (outcome.kind != StepKind::PickSuccess) return 0.0;
    if (config.kind == RewardKind::Baseline) return 1.0;
    return 1.0 + config.lambda * outcome.z_pick;
}

}  // namespace unload
