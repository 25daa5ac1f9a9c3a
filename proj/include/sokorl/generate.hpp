#pragma once

#include <random>
#include <string>
#include <vector>

#include "sokorl/planner.hpp"
#include "sokorl/xsb.hpp"

namespace sokorl {

namespace detail {

// Deterministic bounded draw (avoids std::uniform_int_distribution so the
// stream is identical across standard libraries).
inline uint64_t draw(std::mt19937_64 &rng, uint64_t n) { return rng() % n; }

}    // namespace detail

// Reverse-play level generation: carve a connected room, park every box on a
// target, then walk the player and pull boxes off their targets. The forward
// puzzle is solvable by construction; an A* check guards against degenerate
// outputs. Deterministic for fixed arguments.
inline Level generate(uint64_t seed, int n_boxes, int height, int width, int max_pulls) {
    if (height < 5 || width < 5) throw ContractViolation("generate requires height, width >= 5");
    if (n_boxes < 1) throw ContractViolation("generate requires n_boxes >= 1");

    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + n_boxes * 1000003ull + height * 131ull +
                        width * 31ull + max_pulls);
    const int inner_h = height - 2, inner_w = width - 2;

    for (int attempt = 0; attempt < 200; ++attempt) {
        Level level;
        level.height = height;
        level.width = width;
        level.id = "gen-s" + std::to_string(seed) + "-b" + std::to_string(n_boxes) + "-" +
                   std::to_string(height) + "x" + std::to_string(width) + "-p" +
                   std::to_string(max_pulls);
        level.wall.assign(static_cast<size_t>(height) * width, 1);
        level.target.assign(static_cast<size_t>(height) * width, 0);

        // Carve a connected floor region by random walk over interior cells.
        const int want_floor = std::max(n_boxes * 2 + 2,
                                        static_cast<int>(inner_h * inner_w * (55 + detail::draw(rng, 25)) / 100));
        Pos cur{1 + static_cast<int>(detail::draw(rng, inner_h)),
                1 + static_cast<int>(detail::draw(rng, inner_w))};
        int floor_count = 0;
        level.wall[level.index(cur)] = 0;
        ++floor_count;
        for (int walk = 0; walk < inner_h * inner_w * 40 && floor_count < want_floor; ++walk) {
            const Pos d = action_delta(detail::kMoveOrder[detail::draw(rng, 4)]);
            const Pos np{cur.r + d.r, cur.c + d.c};
            if (np.r < 1 || np.r > inner_h || np.c < 1 || np.c > inner_w) continue;
            cur = np;
            if (level.wall[level.index(cur)]) {
                level.wall[level.index(cur)] = 0;
                ++floor_count;
            }
        }
        if (floor_count < n_boxes * 2 + 2) continue;

        std::vector<Pos> floors;
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c)
                if (!level.wall[level.index({r, c})]) floors.push_back({r, c});

        // Targets (boxes start on them), then the player on a free cell.
        std::vector<Pos> pool = floors;
        std::vector<Pos> boxes;
        for (int i = 0; i < n_boxes; ++i) {
            const size_t pick = detail::draw(rng, pool.size());
            boxes.push_back(pool[pick]);
            level.target[level.index(pool[pick])] = 1;
            pool.erase(pool.begin() + pick);
        }
        if (pool.empty()) continue;
        Pos player = pool[detail::draw(rng, pool.size())];

        // Reverse play: random pulls (inverse pushes) interleaved with walks.
        std::sort(boxes.begin(), boxes.end());
        auto box_at = [&](Pos p) {
            return std::binary_search(boxes.begin(), boxes.end(), p);
        };
        auto free_cell = [&](Pos p) { return !level.is_wall(p) && !box_at(p); };
        int pulls_done = 0;
        for (int i = 0; i < max_pulls; ++i) {
            // Gather all legal pulls reachable by the player.
            std::vector<int> dist;
            std::vector<int8_t> from_move;
            detail::player_bfs(level, detail::boxes_to_cells(level, boxes), level.index(player), dist,
                               from_move);
            struct Pull {
                size_t box;
                int dir;
            };
            std::vector<Pull> pulls;
            for (size_t bi = 0; bi < boxes.size(); ++bi) {
                for (int m = 0; m < 4; ++m) {
                    const Pos d = action_delta(detail::kMoveOrder[m]);
                    const Pos side{boxes[bi].r + d.r, boxes[bi].c + d.c};
                    const Pos behind{side.r + d.r, side.c + d.c};
                    if (!free_cell(side) || !free_cell(behind)) continue;
                    if (dist[level.index(side)] < 0) continue;
                    pulls.push_back({bi, m});
                }
            }
            if (pulls.empty()) break;
            const Pull pick = pulls[detail::draw(rng, pulls.size())];
            const Pos d = action_delta(detail::kMoveOrder[pick.dir]);
            const Pos box = boxes[pick.box];
            boxes[pick.box] = {box.r + d.r, box.c + d.c};
            player = {box.r + 2 * d.r, box.c + 2 * d.c};
            std::sort(boxes.begin(), boxes.end());
            ++pulls_done;
            // Occasional extra wander so pull directions vary.
            for (int w = 0; w < 3; ++w) {
                const Pos wd = action_delta(detail::kMoveOrder[detail::draw(rng, 4)]);
                const Pos np{player.r + wd.r, player.c + wd.c};
                if (free_cell(np)) player = np;
            }
        }
        if (pulls_done == 0) continue;

        level.initial_player = player;
        level.initial_boxes = boxes;
        std::sort(level.initial_boxes.begin(), level.initial_boxes.end());
        if (is_solved(level, initial_state(level))) continue;    // pulls cancelled out
        try {
            validate(level);
        } catch (const ValidationError &) {
            continue;
        }
        const PlanResult check = solve_astar(level, initial_state(level), HeuristicMode::MinMatching,
                                             kDefaultTrainingBudget);
        if (check.status != PlanResult::Status::Solved) continue;
        return level;
    }
    throw GenerationError("level generation failed after bounded retries (seed " + std::to_string(seed) +
                          ")");
}

// A set of distinct levels sharing one box count, seeds seed, seed+1, ...
inline LevelSet generate_set(uint64_t seed, int count, int n_boxes, int height, int width,
                             int max_pulls) {
    std::vector<Level> levels;
    uint64_t s = seed;
    while (static_cast<int>(levels.size()) < count) {
        Level l = generate(s++, n_boxes, height, width, max_pulls);
        l.id += "-i" + std::to_string(levels.size());
        levels.push_back(std::move(l));
    }
    return make_level_set(std::move(levels), "generated(seed=" + std::to_string(seed) + ")");
}

}    // namespace sokorl
