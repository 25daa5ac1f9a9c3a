#pragma once

#include <cstdint>
#include <vector>

#include "sokorl/level.hpp"

namespace sokorl {

// Per-cell static deadlock map: dead[i] is true when a box parked on cell i
// (alone on the board) can never reach any target. Covers corner deadlocks
// and wall-hugging segments without a target. Sound but incomplete; freeze
// deadlocks between boxes are not detected.
struct DeadCellMap {
    std::vector<uint8_t> dead;
};

inline DeadCellMap compute_dead_cells(const Level &level) {
    DeadCellMap map;
    map.dead.assign(static_cast<size_t>(level.height) * level.width, 0);
    for (int r = 0; r < level.height; ++r) {
        for (int c = 0; c < level.width; ++c) {
            const Pos p{r, c};
            if (level.is_wall(p) || level.is_target(p)) continue;
            const bool wu = level.is_wall({r - 1, c});
            const bool wd = level.is_wall({r + 1, c});
            const bool wl = level.is_wall({r, c - 1});
            const bool wr = level.is_wall({r, c + 1});
            if ((wu || wd) && (wl || wr)) {
                map.dead[level.index(p)] = 1;
                continue;
            }
            // Wall-hugging segment: the box can only slide along the wall;
            // if the wall is unbroken across the whole free run and the run
            // holds no target, the box is stuck there.
            auto dead_run = [&](int dr, int dc) {
                // (dr,dc) points at the hugging wall; scan perpendicular.
                const int sr = dc != 0 ? 1 : 0;    // scan direction
                const int sc = dr != 0 ? 1 : 0;
                if (!level.is_wall({r + dr, c + dc})) return false;
                for (int sign : {-1, 1}) {
                    int rr = r, cc = c;
                    while (true) {
                        rr += sign * sr;
                        cc += sign * sc;
                        if (level.is_wall({rr, cc})) break;
                        if (level.is_target({rr, cc})) return false;
                        if (!level.is_wall({rr + dr, cc + dc})) return false;
                    }
                }
                return true;
            };
            if (dead_run(-1, 0) || dead_run(1, 0) || dead_run(0, -1) || dead_run(0, 1))
                map.dead[level.index(p)] = 1;
        }
    }
    return map;
}

// True implies the state is unsolvable. A box sitting on a target never
// counts, whatever its surroundings.
inline bool is_deadlocked_static(const Level &level, const State &state, const DeadCellMap &map) {
    for (const Pos &b : state.boxes)
        if (!level.is_target(b) && map.dead[level.index(b)]) return true;
    return false;
}

inline bool is_deadlocked_static(const Level &level, const State &state) {
    return is_deadlocked_static(level, state, compute_dead_cells(level));
}

}    // namespace sokorl
