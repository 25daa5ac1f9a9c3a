#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "sokorl/errors.hpp"

namespace sokorl {

struct Pos {
    int r = 0;
    int c = 0;
    auto operator<=>(const Pos &) const = default;
};

enum class Action : int { NoOp = 0, Up = 1, Down = 2, Left = 3, Right = 4 };
inline constexpr int kNumActions = 5;

inline Pos action_delta(Action a) {
    switch (a) {
        case Action::Up: return {-1, 0};
        case Action::Down: return {1, 0};
        case Action::Left: return {0, -1};
        case Action::Right: return {0, 1};
        default: return {0, 0};
    }
}

inline char action_letter(Action a) {
    switch (a) {
        case Action::Up: return 'U';
        case Action::Down: return 'D';
        case Action::Left: return 'L';
        case Action::Right: return 'R';
        default: return 'N';
    }
}

// Immutable board geometry plus the initial entity placement.
struct Level {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> wall;      // row-major height*width
    std::vector<uint8_t> target;    // row-major height*width
    Pos initial_player;
    std::vector<Pos> initial_boxes;    // kept sorted
    std::string id;

    int index(Pos p) const { return p.r * width + p.c; }
    bool in_bounds(Pos p) const { return p.r >= 0 && p.r < height && p.c >= 0 && p.c < width; }
    bool is_wall(Pos p) const { return !in_bounds(p) || wall[index(p)] != 0; }
    bool is_target(Pos p) const { return in_bounds(p) && target[index(p)] != 0; }
    int n_boxes() const { return static_cast<int>(initial_boxes.size()); }

    std::vector<Pos> target_cells() const {
        std::vector<Pos> out;
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c)
                if (target[r * width + c]) out.push_back({r, c});
        return out;
    }
};

// Dynamic entity configuration over a Level. Boxes stay sorted so equal
// states compare equal.
struct State {
    Pos player;
    std::vector<Pos> boxes;
    int steps_taken = 0;

    bool has_box(Pos p) const { return std::binary_search(boxes.begin(), boxes.end(), p); }
    void normalize() { std::sort(boxes.begin(), boxes.end()); }
    bool operator==(const State &o) const { return player == o.player && boxes == o.boxes; }
};

inline State initial_state(const Level &level) {
    State s;
    s.player = level.initial_player;
    s.boxes = level.initial_boxes;
    s.normalize();
    return s;
}

inline void validate(const Level &level) {
    if (level.height <= 0 || level.width <= 0) throw ValidationError("level has empty grid");
    const size_t cells = static_cast<size_t>(level.height) * level.width;
    if (level.wall.size() != cells || level.target.size() != cells)
        throw ValidationError("level grid arrays do not match dimensions");
    size_t n_targets = 0;
    for (size_t i = 0; i < cells; ++i) {
        if (level.target[i] && level.wall[i]) throw ValidationError("target on a wall cell");
        n_targets += level.target[i] ? 1 : 0;
    }
    if (level.initial_boxes.empty()) throw ValidationError("level has no boxes");
    if (level.initial_boxes.size() != n_targets)
        throw ValidationError("box count (" + std::to_string(level.initial_boxes.size()) +
                              ") != target count (" + std::to_string(n_targets) + ")");
    if (!level.in_bounds(level.initial_player) || level.is_wall(level.initial_player))
        throw ValidationError("player cell is a wall or out of bounds");
    std::vector<Pos> boxes = level.initial_boxes;
    std::sort(boxes.begin(), boxes.end());
    if (std::adjacent_find(boxes.begin(), boxes.end()) != boxes.end())
        throw ValidationError("duplicate box positions");
    for (const Pos &b : boxes) {
        if (!level.in_bounds(b) || level.is_wall(b)) throw ValidationError("box on a wall or out of bounds");
        if (b == level.initial_player) throw ValidationError("player and box share a cell");
    }
}

inline void validate(const Level &level, const State &state) {
    if (state.boxes.size() != initial_state(level).boxes.size())
        throw ContractViolation("state box count differs from level");
    if (!std::is_sorted(state.boxes.begin(), state.boxes.end()) ||
        std::adjacent_find(state.boxes.begin(), state.boxes.end()) != state.boxes.end())
        throw ContractViolation("state boxes not sorted-unique");
    if (!level.in_bounds(state.player) || level.is_wall(state.player))
        throw ContractViolation("player on a wall or out of bounds");
    for (const Pos &b : state.boxes) {
        if (!level.in_bounds(b) || level.is_wall(b)) throw ContractViolation("box on a wall or out of bounds");
        if (b == state.player) throw ContractViolation("player and box share a cell");
    }
}

}    // namespace sokorl
