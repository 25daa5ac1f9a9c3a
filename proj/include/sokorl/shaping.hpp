#pragma once

#include <atomic>

#include "sokorl/engine.hpp"
#include "sokorl/planner.hpp"

namespace sokorl {

struct ShapingConfig {
    bool enabled = true;
    HeuristicMode heuristic_mode = HeuristicMode::AllPairs;
    // When true, the bonus is gamma*phi(s') - phi(s) with phi constant on
    // unsolvable states; this is the form covered by the policy-invariance
    // theorem. The default reproduces the undiscounted case split.
    bool gamma_in_potential = false;
    double gamma = 0.99;
    double dead_potential = 0.0;
    long node_budget = kDefaultTrainingBudget;
};

struct ShapingCounters {
    std::atomic<long> unsolvable_to_solvable_anomalies{0};
};

struct ShapedStepOutcome {
    StepOutcome inner;
    double potential_bonus = 0.0;    // F
    bool s_solvable = true;
    bool s_prime_solvable = true;
    double shaped_reward = 0.0;
    bool shaping_enabled = false;    // flags/F are meaningful only when true
};

// phi(s) = -d(s). Callers must branch on solvability first.
inline double potential(const Level &level, const State &state, DistanceCache &cache,
                        HeuristicMode mode = HeuristicMode::AllPairs,
                        long node_budget = kDefaultTrainingBudget) {
    const int d = distance(level, state, cache, mode, node_budget);
    if (d == kUnsolvable) throw ContractViolation("potential of an unsolvable state");
    return -static_cast<double>(d);
}

// Undiscounted case split over the two solvability flags.
inline double shaping_bonus(bool s_solvable, int d_s, bool s_prime_solvable, int d_s_prime,
                            ShapingCounters *counters = nullptr) {
    if (s_solvable && s_prime_solvable) return static_cast<double>(-d_s_prime + d_s);
    if (s_solvable && !s_prime_solvable) return static_cast<double>(-d_s - 1);
    if (!s_solvable && s_prime_solvable) {
        // Unreachable in Sokoban (unsolvability is irreversible); flagged.
        if (counters) counters->unsolvable_to_solvable_anomalies.fetch_add(1);
        return 0.0;
    }
    return 0.0;
}

inline double shaping_bonus_gamma(bool s_solvable, int d_s, bool s_prime_solvable, int d_s_prime,
                                  double gamma, double dead_potential,
                                  ShapingCounters *counters = nullptr) {
    if (!s_solvable && s_prime_solvable && counters)
        counters->unsolvable_to_solvable_anomalies.fetch_add(1);
    const double phi_s = s_solvable ? -static_cast<double>(d_s) : dead_potential;
    const double phi_sp = s_prime_solvable ? -static_cast<double>(d_s_prime) : dead_potential;
    return gamma * phi_sp - phi_s;
}

// Core step plus the potential bonus. With shaping disabled this is a strict
// identity wrapper: no distance queries, F = 0.
inline ShapedStepOutcome shaped_step(const Level &level, const State &state, Action action,
                                     const ShapingConfig &config, DistanceCache &cache,
                                     const RewardConfig &reward_cfg = {},
                                     ShapingCounters *counters = nullptr) {
    ShapedStepOutcome out;
    out.inner = step(level, state, action, reward_cfg);
    out.shaping_enabled = config.enabled;
    if (!config.enabled) {
        out.shaped_reward = out.inner.reward;
        return out;
    }
    const int d_s = distance(level, state, cache, config.heuristic_mode, config.node_budget);
    const int d_sp =
        distance(level, out.inner.next_state, cache, config.heuristic_mode, config.node_budget);
    out.s_solvable = d_s != kUnsolvable;
    out.s_prime_solvable = d_sp != kUnsolvable;
    out.potential_bonus =
        config.gamma_in_potential
            ? shaping_bonus_gamma(out.s_solvable, d_s, out.s_prime_solvable, d_sp, config.gamma,
                                  config.dead_potential, counters)
            : shaping_bonus(out.s_solvable, d_s, out.s_prime_solvable, d_sp, counters);
    out.shaped_reward = out.inner.reward + out.potential_bonus;
    return out;
}

}    // namespace sokorl
