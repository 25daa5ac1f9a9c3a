#pragma once

#include <cstdlib>
#include <limits>
#include <vector>

#include "sokorl/engine.hpp"
#include "sokorl/level.hpp"

namespace sokorl {

enum class HeuristicMode { AllPairs, NearestTarget, MinMatching };

inline int manhattan(Pos a, Pos b) { return std::abs(a.r - b.r) + std::abs(a.c - b.c); }

// Minimum-cost assignment over a square cost matrix (Hungarian algorithm,
// O(n^3) potentials formulation).
inline int min_assignment_cost(const std::vector<std::vector<int>> &cost) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) return 0;
    constexpr int kInf = std::numeric_limits<int>::max() / 4;
    std::vector<int> uu(n + 1, 0), vv(n + 1, 0), p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<int> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int delta = kInf, j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const int cur = cost[i0 - 1][j - 1] - uu[i0] - vv[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    uu[p[j]] += delta;
                    vv[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    int total = 0;
    for (int j = 1; j <= n; ++j) total += cost[p[j] - 1][j - 1];
    return total;
}

// Estimate of remaining cost; a lower bound except for AllPairs.
//
// AllPairs sums the Manhattan distance over every (untargeted box,
// unoccupied target) pair; it overestimates for two or more boxes.
// NearestTarget and MinMatching are admissible: each box still has to
// travel at least to some target, targets used at most once under
// MinMatching.
inline int heuristic(const Level &level, const State &state, HeuristicMode mode) {
    const std::vector<Pos> targets = level.target_cells();
    switch (mode) {
        case HeuristicMode::AllPairs: {
            int h = 0;
            for (const Pos &b : state.boxes) {
                if (level.is_target(b)) continue;
                for (const Pos &t : targets)
                    if (!state.has_box(t)) h += manhattan(b, t);
            }
            return h;
        }
        case HeuristicMode::NearestTarget: {
            int h = 0;
            for (const Pos &b : state.boxes) {
                if (level.is_target(b)) continue;
                int best = std::numeric_limits<int>::max();
                for (const Pos &t : targets) best = std::min(best, manhattan(b, t));
                h += best;
            }
            return h;
        }
        case HeuristicMode::MinMatching: {
            const int n = static_cast<int>(state.boxes.size());
            std::vector<std::vector<int>> cost(n, std::vector<int>(n));
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) cost[i][j] = manhattan(state.boxes[i], targets[j]);
            return min_assignment_cost(cost);
        }
    }
    return 0;
}

}    // namespace sokorl
