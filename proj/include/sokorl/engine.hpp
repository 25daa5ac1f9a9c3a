#pragma once

#include <cstdint>
#include <vector>

#include "sokorl/level.hpp"

namespace sokorl {

// Transition events, bitmask. A single step pushes at most one box, so each
// event fires at most once.
enum Event : uint8_t {
    kEventBoxOnTarget = 1,
    kEventBoxOffTarget = 2,
    kEventSolved = 4,
};

struct RewardConfig {
    double solve_reward = 10.0;
    double box_on_target = 1.0;
    double box_off_target = -1.0;
    double step_penalty = -0.1;
    int step_cap = 120;
};

struct StepOutcome {
    State next_state;
    double reward = 0.0;
    bool solved = false;
    bool truncated = false;
    uint8_t events = 0;
};

inline bool is_solved(const Level &level, const State &state) {
    for (const Pos &b : state.boxes)
        if (!level.is_target(b)) return false;
    return true;
}

inline double compute_reward(uint8_t events, bool per_step, const RewardConfig &cfg = {}) {
    double r = per_step ? cfg.step_penalty : 0.0;
    if (events & kEventSolved) r += cfg.solve_reward;
    if (events & kEventBoxOnTarget) r += cfg.box_on_target;
    if (events & kEventBoxOffTarget) r += cfg.box_off_target;
    return r;
}

inline StepOutcome step(const Level &level, const State &state, Action action,
                        const RewardConfig &cfg = {}) {
    validate(level, state);
    if (is_solved(level, state)) throw ContractViolation("step on a solved episode");
    if (state.steps_taken >= cfg.step_cap) throw ContractViolation("step past the step cap");

    StepOutcome out;
    out.next_state = state;
    State &ns = out.next_state;
    const Pos d = action_delta(action);
    if (action != Action::NoOp) {
        const Pos dest{state.player.r + d.r, state.player.c + d.c};
        if (!level.is_wall(dest)) {
            if (state.has_box(dest)) {
                const Pos beyond{dest.r + d.r, dest.c + d.c};
                if (!level.is_wall(beyond) && !state.has_box(beyond)) {
                    auto it = std::lower_bound(ns.boxes.begin(), ns.boxes.end(), dest);
                    *it = beyond;
                    ns.normalize();
                    ns.player = dest;
                    if (level.is_target(dest)) out.events |= kEventBoxOffTarget;
                    if (level.is_target(beyond)) out.events |= kEventBoxOnTarget;
                }
            } else {
                ns.player = dest;
            }
        }
    }
    ns.steps_taken = state.steps_taken + 1;
    out.solved = is_solved(level, ns);
    if (out.solved) out.events |= kEventSolved;
    out.truncated = !out.solved && ns.steps_taken >= cfg.step_cap;
    out.reward = compute_reward(out.events, /*per_step=*/true, cfg);
    return out;
}

enum class Encoding { Symbolic, Pixel };

// Symbolic channel order.
enum SymbolicChannel : int {
    kChWall = 0,
    kChFloor = 1,
    kChTarget = 2,
    kChBox = 3,
    kChBoxOnTarget = 4,
    kChPlayer = 5,
    kChPlayerOnTarget = 6,
};
inline constexpr int kSymbolicChannels = 7;
inline constexpr int kPixelBlock = 8;

struct Observation {
    Encoding encoding = Encoding::Symbolic;
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;    // (c, h, w) row-major

    double &at(int c, int r, int col) { return data[(static_cast<size_t>(c) * height + r) * width + col]; }
    double at(int c, int r, int col) const { return data[(static_cast<size_t>(c) * height + r) * width + col]; }
};

inline int symbolic_channel_of(const Level &level, const State &state, Pos p) {
    if (level.is_wall(p)) return kChWall;
    const bool tgt = level.is_target(p);
    if (p == state.player) return tgt ? kChPlayerOnTarget : kChPlayer;
    if (state.has_box(p)) return tgt ? kChBoxOnTarget : kChBox;
    return tgt ? kChTarget : kChFloor;
}

inline Observation encode(const Level &level, const State &state, Encoding mode = Encoding::Symbolic) {
    validate(level, state);
    Observation obs;
    obs.encoding = mode;
    if (mode == Encoding::Symbolic) {
        obs.channels = kSymbolicChannels;
        obs.height = level.height;
        obs.width = level.width;
        obs.data.assign(static_cast<size_t>(obs.channels) * obs.height * obs.width, 0.0);
        for (int r = 0; r < level.height; ++r)
            for (int c = 0; c < level.width; ++c)
                obs.at(symbolic_channel_of(level, state, {r, c}), r, c) = 1.0;
    } else {
        // Flat-color rendering, one 8x8 block per cell.
        static constexpr double kColors[7][3] = {
            {0.3, 0.3, 0.3},    // wall
            {0.0, 0.0, 0.0},    // floor
            {1.0, 0.0, 0.0},    // target
            {1.0, 1.0, 0.0},    // box
            {0.0, 1.0, 0.0},    // box on target
            {0.0, 0.0, 1.0},    // player
            {0.0, 1.0, 1.0},    // player on target
        };
        obs.channels = 3;
        obs.height = level.height * kPixelBlock;
        obs.width = level.width * kPixelBlock;
        obs.data.assign(static_cast<size_t>(3) * obs.height * obs.width, 0.0);
        for (int r = 0; r < level.height; ++r)
            for (int c = 0; c < level.width; ++c) {
                const double *rgb = kColors[symbolic_channel_of(level, state, {r, c})];
                for (int ch = 0; ch < 3; ++ch)
                    for (int dr = 0; dr < kPixelBlock; ++dr)
                        for (int dc = 0; dc < kPixelBlock; ++dc)
                            obs.at(ch, r * kPixelBlock + dr, c * kPixelBlock + dc) = rgb[ch];
            }
    }
    return obs;
}

// Inverse of the symbolic encoding; steps_taken is not recoverable.
inline State decode_symbolic(const Observation &obs) {
    if (obs.encoding != Encoding::Symbolic) throw ContractViolation("decode of non-symbolic observation");
    State s;
    for (int r = 0; r < obs.height; ++r)
        for (int c = 0; c < obs.width; ++c) {
            if (obs.at(kChPlayer, r, c) > 0.5 || obs.at(kChPlayerOnTarget, r, c) > 0.5) s.player = {r, c};
            if (obs.at(kChBox, r, c) > 0.5 || obs.at(kChBoxOnTarget, r, c) > 0.5) s.boxes.push_back({r, c});
        }
    s.normalize();
    return s;
}

}    // namespace sokorl
