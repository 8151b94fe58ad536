#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "unload/camera.hpp"
#include "unload/image.hpp"
#include "unload/state.hpp"

namespace unload {

enum class CollapseMode { Deterministic, Stochastic };

struct EnvConfig {
    int columns = 7;
    int rows = 6;
    double parcel_edge = 0.25;
    int obs_resolution = 64;
    CollapseMode collapse_mode = CollapseMode::Deterministic;
    double p_out = 0.7;  // stochastic mode only
    std::array<double, 3> color_base = {0.55, 0.35, 0.15};
    double color_jitter = 0.1;
    uint64_t seed = 0;

    int total_parcels() const { return columns * rows; }

    // Throws std::invalid_argument on bad dimensions or probabilities.
    void validate() const;
};

enum class StepKind { PickSuccess, PickOutOfWorkspace, PickEmptyCell };

struct StepOutcome {
    StepKind kind = StepKind::PickSuccess;
    std::optional<Cell> picked_cell;
    double z_pick = 0.0;    // 0 when no successful pick
    int n_fallen_out = 0;
    int clock_delta = 1;
    bool terminal = false;
};

// Finite-horizon unloading MDP. The episode clock counts parcels removed
// from the scene, so every episode terminates at exactly total_parcels()
// steps of clock, for any action sequence.
class StackEnv {
public:
    StackEnv(const EnvConfig& config, uint64_t episode_seed);
    StackEnv(const EnvConfig& config, const Workspace& workspace, uint64_t episode_seed);

    // Reinitializes the full stack with fresh shades drawn from episode_seed.
    void reset(uint64_t episode_seed);

    StepOutcome step(Pixel action);

    Observation render() const;

    // Center pixel of the highest occupied cell, leftmost tie-break.
    // Throws std::logic_error on an empty stack.
    Pixel oracle_policy() const;

    bool terminal() const { return state_.clock >= config_.total_parcels(); }

    const StackState& state() const { return state_; }
    const EnvConfig& config() const { return config_; }
    const CameraModel& camera() const { return camera_; }
    const Workspace& workspace() const { return workspace_; }

private:
    void remove_top_of_tallest_column();
    void settle();

    EnvConfig config_;
    CameraModel camera_;
    Workspace workspace_;
    StackState state_;
};

Observation render(const StackState& state, const CameraModel& camera);

}  // namespace unload
