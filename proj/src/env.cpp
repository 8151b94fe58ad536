#include "unload/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unload {

void EnvConfig::validate() const {
    if (columns <= 0 || rows <= 0) {
        throw std::invalid_argument("grid dimensions must be positive");
    }
    if (obs_resolution < std::max(columns, rows)) {
        throw std::invalid_argument("obs_resolution must be >= max(columns, rows)");
    }
    if (parcel_edge <= 0.0) {
        throw std::invalid_argument("parcel_edge must be positive");
    }
    if (p_out < 0.0 || p_out > 1.0) {
        throw std::invalid_argument("p_out must be in [0, 1]");
    }
    if (color_jitter < 0.0) {
        throw std::invalid_argument("color_jitter must be non-negative");
    }
}

StackEnv::StackEnv(const EnvConfig& config, uint64_t episode_seed)
    : StackEnv(config,
               Workspace::covering_stack(config.columns, config.rows, config.parcel_edge),
               episode_seed) {}

StackEnv::StackEnv(const EnvConfig& config, const Workspace& workspace, uint64_t episode_seed)
    : config_(config),
      camera_(CameraModel::make(config.obs_resolution, config.columns, config.rows,
                                config.parcel_edge)),
      workspace_(workspace) {
    config_.validate();
    reset(episode_seed);
}

void StackEnv::reset(uint64_t episode_seed) {
    state_ = StackState{};
    state_.columns = config_.columns;
    state_.rows = config_.rows;
    state_.occupancy.assign(static_cast<size_t>(config_.rows) * config_.columns, 1);
    state_.shades.resize(static_cast<size_t>(config_.rows) * config_.columns);
    state_.rng = Rng(episode_seed);
    for (auto& shade : state_.shades) {
        for (int c = 0; c < 3; ++c) {
            const double jitter = state_.rng.uniform(-config_.color_jitter, config_.color_jitter);
            const double value = std::clamp(config_.color_base[c] + jitter, 0.0, 1.0);
            shade[c] = static_cast<uint8_t>(std::lround(value * 255.0));
        }
    }
}

void StackEnv::remove_top_of_tallest_column() {
    int best_column = 0;
    int best_height = -1;
    for (int c = 0; c < state_.columns; ++c) {
        const int h = state_.column_height(c);
        if (h > best_height) {  // leftmost tie-break
            best_height = h;
            best_column = c;
        }
    }
    // best_height >= 1 whenever the clock has room left
    state_.set_occupied(best_column, best_height - 1, false);
    state_.removed_forced += 1;
}

void StackEnv::settle() {
    for (int c = 0; c < state_.columns; ++c) {
        int write = 0;
        for (int r = 0; r < state_.rows; ++r) {
            if (state_.occupied(c, r)) {
                if (write != r) {
                    state_.set_occupied(c, write, true);
                    state_.set_occupied(c, r, false);
                    state_.shade(c, write) = state_.shade(c, r);
                }
                ++write;
            }
        }
    }
}

StepOutcome StackEnv::step(Pixel action) {
    if (terminal()) {
        throw std::logic_error("step on terminal state");
    }
    if (!camera_.in_image(action)) {
        throw std::out_of_range("action pixel outside image bounds");
    }

    StepOutcome outcome;
    const auto cell = camera_.pixel_to_cell(action);
    const bool on_parcel = cell && state_.occupied(cell->column, cell->row);
    const bool pose_ok =
        on_parcel && workspace_.contains(camera_.cell_position(*cell));

    if (pose_ok) {
        outcome.kind = StepKind::PickSuccess;
        outcome.picked_cell = *cell;
        outcome.z_pick = (cell->row + 0.5) * config_.parcel_edge;
        state_.set_occupied(cell->column, cell->row, false);
        state_.removed_success += 1;

        // parcels directly above the picked one tumble
        int fallen = 0;
        for (int r = cell->row + 1; r < state_.rows; ++r) {
            if (!state_.occupied(cell->column, r)) break;
            const bool falls_out = config_.collapse_mode == CollapseMode::Deterministic
                                       ? true
                                       : state_.rng.bernoulli(config_.p_out);
            if (falls_out) {
                state_.set_occupied(cell->column, r, false);
                ++fallen;
            }
        }
        state_.removed_fallen += fallen;
        outcome.n_fallen_out = fallen;
        outcome.clock_delta = 1 + fallen;
    } else {
        // Out-of-workspace semantics: a parcel is removed from the top of
        // the stack and the agent skips a step.
        outcome.kind = on_parcel ? StepKind::PickOutOfWorkspace
                       : cell    ? StepKind::PickEmptyCell
                                 : StepKind::PickOutOfWorkspace;
        outcome.clock_delta = 1;
        remove_top_of_tallest_column();
    }

    settle();
    state_.clock += outcome.clock_delta;
    outcome.terminal = terminal();
    return outcome;
}

Observation render(const StackState& state, const CameraModel& camera) {
    Observation obs = make_observation(camera.obs_resolution, camera.obs_resolution);
    for (int r = 0; r < state.rows; ++r) {
        for (int c = 0; c < state.columns; ++c) {
            if (!state.occupied(c, r)) continue;
            const auto& shade = state.shade(c, r);
            const int u0 = camera.origin_u + c * camera.cell_px;
            const int v0 = camera.origin_v + (state.rows - 1 - r) * camera.cell_px;
            for (int v = v0; v < v0 + camera.cell_px; ++v) {
                for (int u = u0; u < u0 + camera.cell_px; ++u) {
                    for (int ch = 0; ch < 3; ++ch) obs.at(v, u, ch) = shade[ch];
                }
            }
        }
    }
    return obs;
}

Observation StackEnv::render() const { return unload::render(state_, camera_); }

Pixel StackEnv::oracle_policy() const {
    Cell best{-1, -1};
    for (int c = 0; c < state_.columns; ++c) {
        for (int r = state_.rows - 1; r >= 0; --r) {
            if (state_.occupied(c, r)) {
                if (r > best.row) best = {c, r};  // strict: leftmost tie-break
                break;
            }
        }
    }
    if (best.row < 0) {
        throw std::logic_error("oracle_policy on empty stack");
    }
    return camera_.cell_center_pixel(best);
}

}  // namespace unload
