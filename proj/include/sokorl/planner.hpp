#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <queue>
#include <unordered_map>
#include <vector>

#include "sokorl/deadlock.hpp"
#include "sokorl/engine.hpp"
#include "sokorl/heuristic.hpp"
#include "sokorl/level.hpp"

namespace sokorl {

struct PlanResult {
    enum class Status { Solved, Unsolvable, Budget };
    Status status = Status::Unsolvable;
    std::vector<Action> plan;
    int length = 0;
    long nodes_expanded = 0;
};

inline constexpr int kUnsolvable = -1;
inline constexpr long kUnlimitedBudget = -1;
inline constexpr long kDefaultTrainingBudget = 200000;

namespace detail {

inline constexpr Action kMoveOrder[4] = {Action::Up, Action::Down, Action::Left, Action::Right};

struct SearchKey {
    uint16_t player;
    std::vector<uint16_t> boxes;
    bool operator==(const SearchKey &o) const { return player == o.player && boxes == o.boxes; }
};

struct SearchKeyHash {
    size_t operator()(const SearchKey &k) const {
        uint64_t h = 1469598103934665603ull;
        auto mix = [&h](uint16_t v) {
            h ^= v;
            h *= 1099511628211ull;
        };
        mix(k.player);
        for (uint16_t b : k.boxes) mix(b);
        return static_cast<size_t>(h);
    }
};

// BFS over floor cells avoiding boxes; fills dist (-1 unreachable) and the
// move taken to reach each cell, expanding in fixed action order for
// deterministic paths.
inline void player_bfs(const Level &level, const std::vector<uint16_t> &boxes, int start,
                       std::vector<int> &dist, std::vector<int8_t> &from_move) {
    const int cells = level.height * level.width;
    dist.assign(cells, -1);
    from_move.assign(cells, -1);
    std::vector<uint8_t> blocked(cells, 0);
    for (uint16_t b : boxes) blocked[b] = 1;
    std::deque<int> frontier;
    dist[start] = 0;
    frontier.push_back(start);
    while (!frontier.empty()) {
        const int cur = frontier.front();
        frontier.pop_front();
        const Pos p{cur / level.width, cur % level.width};
        for (int m = 0; m < 4; ++m) {
            const Pos d = action_delta(kMoveOrder[m]);
            const Pos np{p.r + d.r, p.c + d.c};
            if (level.is_wall(np)) continue;
            const int ni = level.index(np);
            if (blocked[ni] || dist[ni] >= 0) continue;
            dist[ni] = dist[cur] + 1;
            from_move[ni] = static_cast<int8_t>(m);
            frontier.push_back(ni);
        }
    }
}

inline std::vector<uint16_t> boxes_to_cells(const Level &level, const std::vector<Pos> &boxes) {
    std::vector<uint16_t> out;
    out.reserve(boxes.size());
    for (const Pos &b : boxes) out.push_back(static_cast<uint16_t>(level.index(b)));
    return out;
}

inline int heuristic_cells(const Level &level, const std::vector<uint16_t> &boxes, HeuristicMode mode) {
    State s;
    s.player = {0, 0};    // heuristics ignore the player
    for (uint16_t b : boxes) s.boxes.push_back({b / level.width, b % level.width});
    s.normalize();
    return heuristic(level, s, mode);
}

}    // namespace detail

// A* over push moves with exact walk costs: a node is (box set, player cell),
// an edge walks the player to a push position and pushes once, costing
// walk-length + 1 agent moves. With an admissible heuristic the returned plan
// is move-optimal; AllPairs may return a valid but suboptimal plan.
inline PlanResult solve_astar(const Level &level, const State &start, HeuristicMode mode,
                              long node_budget = kUnlimitedBudget) {
    validate(level, start);
    PlanResult result;
    if (is_solved(level, start)) {
        result.status = PlanResult::Status::Solved;
        return result;
    }
    const DeadCellMap dead = compute_dead_cells(level);
    if (is_deadlocked_static(level, start, dead)) {
        result.status = PlanResult::Status::Unsolvable;
        return result;
    }

    struct Node {
        std::vector<uint16_t> boxes;
        uint16_t player;
        int g;
        int parent;      // index into nodes, -1 for root
        uint16_t push_from = 0, push_to = 0;
    };
    std::vector<Node> nodes;
    std::unordered_map<detail::SearchKey, int, detail::SearchKeyHash> best_g;

    struct OpenEntry {
        int f;
        long seq;
        int node;
        bool operator>(const OpenEntry &o) const { return f != o.f ? f > o.f : seq > o.seq; }
    };
    std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<OpenEntry>> open;

    std::vector<uint16_t> target_cells;
    for (int i = 0; i < level.height * level.width; ++i)
        if (level.target[i]) target_cells.push_back(static_cast<uint16_t>(i));

    auto is_goal = [&](const std::vector<uint16_t> &boxes) { return boxes == target_cells; };

    long seq = 0;
    {
        Node root{detail::boxes_to_cells(level, start.boxes),
                  static_cast<uint16_t>(level.index(start.player)), 0, -1};
        const int h0 = detail::heuristic_cells(level, root.boxes, mode);
        best_g[{root.player, root.boxes}] = 0;
        nodes.push_back(std::move(root));
        open.push({h0, seq++, 0});
    }

    std::vector<int> dist;
    std::vector<int8_t> from_move;
    int goal_node = -1;

    while (!open.empty()) {
        const OpenEntry top = open.top();
        open.pop();
        const Node &cur = nodes[top.node];
        auto it = best_g.find({cur.player, cur.boxes});
        if (it != best_g.end() && it->second < cur.g) continue;    // stale entry
        if (is_goal(cur.boxes)) {
            goal_node = top.node;
            break;
        }
        if (node_budget >= 0 && result.nodes_expanded >= node_budget) {
            result.status = PlanResult::Status::Budget;
            return result;
        }
        ++result.nodes_expanded;

        detail::player_bfs(level, cur.boxes, cur.player, dist, from_move);
        const int cur_idx = top.node;
        for (size_t bi = 0; bi < nodes[cur_idx].boxes.size(); ++bi) {
            const uint16_t bcell = nodes[cur_idx].boxes[bi];
            const Pos b{bcell / level.width, bcell % level.width};
            for (int m = 0; m < 4; ++m) {
                const Pos d = action_delta(detail::kMoveOrder[m]);
                const Pos push_pos{b.r - d.r, b.c - d.c};
                const Pos dest{b.r + d.r, b.c + d.c};
                if (level.is_wall(push_pos) || level.is_wall(dest)) continue;
                const int pp = level.index(push_pos);
                if (dist[pp] < 0) continue;
                const int dc = level.index(dest);
                if (dead.dead[dc]) continue;
                bool occupied = false;
                for (uint16_t ob : nodes[cur_idx].boxes) occupied |= (ob == dc);
                if (occupied) continue;

                Node next;
                next.boxes = nodes[cur_idx].boxes;
                next.boxes[bi] = static_cast<uint16_t>(dc);
                std::sort(next.boxes.begin(), next.boxes.end());
                next.player = bcell;
                next.g = nodes[cur_idx].g + dist[pp] + 1;
                next.parent = cur_idx;
                next.push_from = bcell;
                next.push_to = static_cast<uint16_t>(dc);

                detail::SearchKey key{next.player, next.boxes};
                auto found = best_g.find(key);
                if (found != best_g.end() && found->second <= next.g) continue;
                best_g[key] = next.g;
                const int h = detail::heuristic_cells(level, next.boxes, mode);
                nodes.push_back(std::move(next));
                open.push({nodes.back().g + h, seq++, static_cast<int>(nodes.size()) - 1});
            }
        }
    }

    if (goal_node < 0) {
        result.status = PlanResult::Status::Unsolvable;
        return result;
    }

    // Reconstruct: chain of pushes, each preceded by the deterministic BFS
    // walk from the parent's player cell to the push position.
    std::vector<int> chain;
    for (int n = goal_node; n >= 0; n = nodes[n].parent) chain.push_back(n);
    std::reverse(chain.begin(), chain.end());
    for (size_t i = 1; i < chain.size(); ++i) {
        const Node &parent = nodes[chain[i - 1]];
        const Node &child = nodes[chain[i]];
        const Pos from{child.push_from / level.width, child.push_from % level.width};
        const Pos to{child.push_to / level.width, child.push_to % level.width};
        int push_m = -1;
        for (int m = 0; m < 4; ++m) {
            const Pos d = action_delta(detail::kMoveOrder[m]);
            if (from.r + d.r == to.r && from.c + d.c == to.c) push_m = m;
        }
        const Pos push_pos{from.r - action_delta(detail::kMoveOrder[push_m]).r,
                           from.c - action_delta(detail::kMoveOrder[push_m]).c};
        detail::player_bfs(level, parent.boxes, parent.player, dist, from_move);
        std::vector<Action> walk;
        for (int cell = level.index(push_pos); cell != parent.player;) {
            const int m = from_move[cell];
            walk.push_back(detail::kMoveOrder[m]);
            const Pos d = action_delta(detail::kMoveOrder[m]);
            cell -= d.r * level.width + d.c;
        }
        std::reverse(walk.begin(), walk.end());
        for (Action a : walk) result.plan.push_back(a);
        result.plan.push_back(detail::kMoveOrder[push_m]);
    }
    result.status = PlanResult::Status::Solved;
    result.length = static_cast<int>(result.plan.size());
    return result;
}

// Player position normalized to the lexicographically smallest cell of its
// reachable region. Solvability is invariant within a region, so this gives
// a stable representative for enumerating distinct positions.
inline State canonicalize(const Level &level, const State &state) {
    std::vector<int> dist;
    std::vector<int8_t> from_move;
    detail::player_bfs(level, detail::boxes_to_cells(level, state.boxes), level.index(state.player),
                       dist, from_move);
    State out = state;
    for (int i = 0; i < level.height * level.width; ++i) {
        if (dist[i] >= 0) {
            out.player = {i / level.width, i % level.width};
            break;
        }
    }
    return out;
}

// Memoized distance-to-goal per level. Keys are exact (player, boxes) states:
// move distance varies with the player's position inside a region, so region
// representatives cannot stand in for the value. Safe to share across workers.
class DistanceCache {
  public:
    struct LevelEntry {
        DeadCellMap dead;
        std::unordered_map<detail::SearchKey, int, detail::SearchKeyHash> distances;
        bool dead_ready = false;
    };

    LevelEntry &entry(const Level &level) {
        std::lock_guard<std::mutex> lock(mutex_);
        LevelEntry &e = per_level_[level.id];
        if (!e.dead_ready) {
            e.dead = compute_dead_cells(level);
            e.dead_ready = true;
        }
        return e;
    }

    bool lookup(const Level &level, const detail::SearchKey &key, int &out) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto &m = per_level_[level.id].distances;
        auto it = m.find(key);
        if (it == m.end()) return false;
        out = it->second;
        return true;
    }

    void store(const Level &level, const detail::SearchKey &key, int value) {
        std::lock_guard<std::mutex> lock(mutex_);
        per_level_[level.id].distances.emplace(key, value);
    }

    void note_budget_exhausted() {
        std::lock_guard<std::mutex> lock(mutex_);
        ++budget_warnings_;
    }
    long budget_warnings() const { return budget_warnings_; }

    size_t size() const {
        size_t n = 0;
        for (const auto &[_, e] : per_level_) n += e.distances.size();
        return n;
    }

  private:
    std::unordered_map<std::string, LevelEntry> per_level_;
    long budget_warnings_ = 0;
    std::mutex mutex_;
};

// d(s): agent steps of an A* plan from the exact state, memoized.
// Budget exhaustion is conservatively reported as kUnsolvable (and counted).
inline int distance(const Level &level, const State &state, DistanceCache &cache,
                    HeuristicMode mode = HeuristicMode::AllPairs,
                    long node_budget = kDefaultTrainingBudget) {
    if (is_solved(level, state)) return 0;
    auto &entry = cache.entry(level);
    if (is_deadlocked_static(level, state, entry.dead)) return kUnsolvable;

    detail::SearchKey key{static_cast<uint16_t>(level.index(state.player)),
                          detail::boxes_to_cells(level, state.boxes)};
    int cached;
    if (cache.lookup(level, key, cached)) return cached;

    const PlanResult res = solve_astar(level, state, mode, node_budget);
    int value;
    switch (res.status) {
        case PlanResult::Status::Solved: value = res.length; break;
        case PlanResult::Status::Unsolvable: value = kUnsolvable; break;
        case PlanResult::Status::Budget:
        default:
            cache.note_budget_exhausted();
            value = kUnsolvable;
            break;
    }
    cache.store(level, key, value);
    return value;
}

}    // namespace sokorl
