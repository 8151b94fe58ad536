#include <doctest.h>

#include <set>

#include "unload/env.hpp"

using namespace unload;

namespace {

EnvConfig desk_config(int columns = 5, int rows = 4, int res = 16) {
    EnvConfig config;
    config.columns = columns;
    config.rows = rows;
    config.obs_resolution = res;
    return config;
}

void check_state_laws(const StackState& s) {
    const int n_total = s.columns * s.rows;
    CHECK(s.removed_success + s.removed_fallen + s.removed_forced + s.occupied_count() ==
          n_total);
    CHECK(s.clock == s.removed_success + s.removed_fallen + s.removed_forced);
    for (int c = 0; c < s.columns; ++c) {
        for (int r = 1; r < s.rows; ++r) {
            if (s.occupied(c, r)) CHECK(s.occupied(c, r - 1));
        }
    }
}

}  // namespace

TEST_CASE("reset fills the grid") {
    StackEnv env(EnvConfig{}, 0);
    CHECK(env.state().occupied_count() == 42);
    CHECK(env.state().clock == 0);
    CHECK_FALSE(env.terminal());
}

TEST_CASE("reset on a degenerate 1x1 grid") {
    StackEnv env(desk_config(1, 1, 4), 7);
    CHECK(env.state().occupied_count() == 1);
    CHECK(env.state().clock == 0);
}

TEST_CASE("identical seeds give bit-identical shade grids") {
    StackEnv a(EnvConfig{}, 123);
    StackEnv b(EnvConfig{}, 123);
    CHECK(a.state().shades == b.state().shades);
    StackEnv c(EnvConfig{}, 124);
    CHECK(a.state().shades != c.state().shades);
}

TEST_CASE("invalid configs are rejected") {
    EnvConfig config;
    config.columns = 0;
    CHECK_THROWS_AS(StackEnv(config, 0), std::invalid_argument);
    config = EnvConfig{};
    config.obs_resolution = 3;  // < max(columns, rows)
    CHECK_THROWS_AS(StackEnv(config, 0), std::invalid_argument);
    config = EnvConfig{};
    config.p_out = 1.5;
    CHECK_THROWS_AS(StackEnv(config, 0), std::invalid_argument);
}

TEST_CASE("clean pick from the top row") {
    StackEnv env(EnvConfig{}, 0);
    const auto outcome = env.step(env.camera().cell_center_pixel({2, 5}));
    CHECK(outcome.kind == StepKind::PickSuccess);
    CHECK(outcome.n_fallen_out == 0);
    CHECK(outcome.clock_delta == 1);
    CHECK(outcome.z_pick == doctest::Approx(5.5 * 0.25));
    CHECK(env.state().clock == 1);
    CHECK(env.state().occupied_count() == 41);
    check_state_laws(env.state());
}

TEST_CASE("deterministic collapse topples everything above") {
    StackEnv env(EnvConfig{}, 0);
    // parcel at row 3 of a 6-high column has 2 parcels above
    const auto outcome = env.step(env.camera().cell_center_pixel({4, 3}));
    CHECK(outcome.kind == StepKind::PickSuccess);
    CHECK(outcome.n_fallen_out == 2);
    CHECK(outcome.clock_delta == 3);
    CHECK(env.state().clock == 3);
    CHECK(env.state().occupied_count() == 39);
    CHECK(env.state().column_height(4) == 3);
    check_state_laws(env.state());
}

TEST_CASE("picking the bottom of a column topples the whole column") {
    StackEnv env(desk_config(2, 4, 8), 0);
    // pick bottom of column 0: 3 parcels above tumble out
    const auto outcome = env.step(env.camera().cell_center_pixel({0, 0}));
    CHECK(outcome.n_fallen_out == 3);
    CHECK(env.state().column_height(0) == 0);
    CHECK(env.state().column_height(1) == 4);
}

TEST_CASE("background pick removes from the top of the tallest column") {
    StackEnv env(EnvConfig{}, 0);
    const auto outcome = env.step({0, 0});  // sky margin above the stack
    CHECK(outcome.kind == StepKind::PickOutOfWorkspace);
    CHECK(outcome.clock_delta == 1);
    CHECK(env.state().clock == 1);
    CHECK(env.state().removed_forced == 1);
    // leftmost of the tallest columns loses its top parcel
    CHECK(env.state().column_height(0) == 5);
    check_state_laws(env.state());
}

TEST_CASE("pick on an emptied cell is PickEmptyCell with identical dynamics") {
    StackEnv env(EnvConfig{}, 0);
    const Pixel top = env.camera().cell_center_pixel({3, 5});
    env.step(top);
    const auto outcome = env.step(top);  // cell (3,5) now empty, inside viewport
    CHECK(outcome.kind == StepKind::PickEmptyCell);
    CHECK(outcome.clock_delta == 1);
    CHECK(env.state().removed_forced == 1);
    check_state_laws(env.state());
}

TEST_CASE("step errors") {
    StackEnv env(desk_config(1, 1, 4), 0);
    env.step(env.camera().cell_center_pixel({0, 0}));
    CHECK(env.terminal());
    CHECK_THROWS_AS(env.step({0, 0}), std::logic_error);

    StackEnv fresh(desk_config(), 0);
    CHECK_THROWS_AS(fresh.step({-1, 0}), std::out_of_range);
    CHECK_THROWS_AS(fresh.step({0, 16}), std::out_of_range);
}

TEST_CASE("stochastic collapse: survivors settle and everything stays conserved") {
    EnvConfig config = desk_config(3, 5, 10);
    config.collapse_mode = CollapseMode::Stochastic;
    config.p_out = 0.5;
    StackEnv env(config, 9);
    const auto outcome = env.step(env.camera().cell_center_pixel({1, 0}));
    CHECK(outcome.kind == StepKind::PickSuccess);
    CHECK(outcome.n_fallen_out >= 0);
    CHECK(outcome.n_fallen_out <= 4);
    CHECK(outcome.clock_delta == 1 + outcome.n_fallen_out);
    CHECK(env.state().column_height(1) == 4 - outcome.n_fallen_out);
    check_state_laws(env.state());
}

TEST_CASE("stochastic mode is deterministic given seed and actions") {
    EnvConfig config = desk_config(4, 4, 12);
    config.collapse_mode = CollapseMode::Stochastic;
    for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        StackEnv a(config, seed);
        StackEnv b(config, seed);
        Rng actions(seed * 17 + 1);
        while (!a.terminal()) {
            const Pixel p{static_cast<int>(actions.uniform_int(12)),
                          static_cast<int>(actions.uniform_int(12))};
            const auto oa = a.step(p);
            const auto ob = b.step(p);
            CHECK(oa.kind == ob.kind);
            CHECK(oa.n_fallen_out == ob.n_fallen_out);
            CHECK(a.render() == b.render());
        }
        CHECK(b.terminal());
    }
}

TEST_CASE("episode laws hold under random actions in both modes") {
    for (const bool stochastic : {false, true}) {
        EnvConfig config = desk_config(5, 4, 12);
        config.collapse_mode =
            stochastic ? CollapseMode::Stochastic : CollapseMode::Deterministic;
        Rng rng(stochastic ? 5 : 6);
        for (int episode = 0; episode < 200; ++episode) {
            StackEnv env(config, rng.next_u64());
            int steps = 0;
            while (!env.terminal()) {
                const Pixel p{static_cast<int>(rng.uniform_int(12)),
                              static_cast<int>(rng.uniform_int(12))};
                const auto outcome = env.step(p);
                check_state_laws(env.state());
                CHECK(outcome.clock_delta >= 1);
                ++steps;
            }
            CHECK(env.state().clock == 20);  // T = N_total exactly, any action sequence
            CHECK(steps <= 20);
        }
    }
}

TEST_CASE("render: full default stack shows 42 uniform rectangles") {
    StackEnv env(EnvConfig{}, 0);
    const Observation obs = env.render();
    const auto& cam = env.camera();
    int filled_cells = 0;
    std::set<std::array<uint8_t, 3>> distinct;
    for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 7; ++c) {
            const Pixel p0{cam.origin_u + c * cam.cell_px,
                           cam.origin_v + (5 - r) * cam.cell_px};
            const std::array<uint8_t, 3> shade = {obs.at(p0.v, p0.u, 0), obs.at(p0.v, p0.u, 1),
                                                  obs.at(p0.v, p0.u, 2)};
            bool uniform = true;
            for (int dv = 0; dv < cam.cell_px; ++dv) {
                for (int du = 0; du < cam.cell_px; ++du) {
                    for (int ch = 0; ch < 3; ++ch) {
                        uniform &= obs.at(p0.v + dv, p0.u + du, ch) == shade[ch];
                    }
                }
            }
            CHECK(uniform);
            filled_cells += 1;
            distinct.insert(shade);
        }
    }
    CHECK(filled_cells == 42);
    CHECK(distinct.size() > 30);  // jittered shades are almost surely distinct
    // margin is zero
    CHECK(obs.at(0, 0, 0) == 0);
    CHECK(obs.at(0, 0, 1) == 0);
}

TEST_CASE("render: empty stack is the all-zero image and render is pure") {
    StackEnv env(desk_config(1, 1, 4), 3);
    CHECK(env.render() == env.render());
    env.step(env.camera().cell_center_pixel({0, 0}));
    const Observation obs = env.render();
    for (uint8_t byte : obs.rgb) CHECK(byte == 0);
}

TEST_CASE("oracle picks the highest cell, leftmost tie-break") {
    StackEnv env(EnvConfig{}, 0);
    CHECK(env.oracle_policy() == env.camera().cell_center_pixel({0, 5}));

    // leave a single parcel at (3, 0)
    StackEnv row(desk_config(4, 1, 8), 2);
    for (int c = 0; c < 3; ++c) row.step(row.camera().cell_center_pixel({c, 0}));
    CHECK(row.oracle_policy() == row.camera().cell_center_pixel({3, 0}));

    row.step(row.oracle_policy());
    CHECK_THROWS_AS(row.oracle_policy(), std::logic_error);
}

TEST_CASE("oracle rollout unloads everything with zero falls") {
    for (const bool stochastic : {false, true}) {
        EnvConfig config;
        config.collapse_mode =
            stochastic ? CollapseMode::Stochastic : CollapseMode::Deterministic;
        StackEnv env(config, 11);
        while (!env.terminal()) {
            const auto outcome = env.step(env.oracle_policy());
            CHECK(outcome.kind == StepKind::PickSuccess);
            CHECK(outcome.n_fallen_out == 0);  // top-down picks never have parcels above
        }
        CHECK(env.state().removed_success == 42);
        CHECK(env.state().removed_fallen == 0);
        CHECK(env.state().removed_forced == 0);
    }
}
