#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sokorl/generate.hpp"
#include "sokorl/shaping.hpp"
#include "sokorl/xsb.hpp"

using namespace sokorl;

TEST_CASE("potential is minus the distance") {
    DistanceCache cache;
    const Level level = parse_xsb("#########\n#@$    .#\n#########");
    State s = initial_state(level);
    CHECK(potential(level, s, cache) == -5.0);
    State goal = s;
    goal.boxes = {{1, 7}};
    goal.player = {1, 6};
    CHECK(potential(level, goal, cache) == 0.0);
    State one_away = s;
    one_away.boxes = {{1, 6}};
    one_away.player = {1, 5};
    CHECK(potential(level, one_away, cache) == -1.0);
}

TEST_CASE("potential of an unsolvable state is a contract violation") {
    DistanceCache cache;
    const Level corner = parse_xsb("#####\n#$ .#\n# @ #\n#####");
    CHECK_THROWS_AS(potential(corner, initial_state(corner), cache), ContractViolation);
}

TEST_CASE("shaping_bonus case table") {
    CHECK(shaping_bonus(true, 5, true, 4) == 1.0);
    CHECK(shaping_bonus(true, 3, false, 0) == -4.0);
    CHECK(shaping_bonus(false, 0, false, 0) == 0.0);
    // moving away from the goal is penalized symmetrically
    CHECK(shaping_bonus(true, 4, true, 5) == -1.0);
    // staying put is neutral
    CHECK(shaping_bonus(true, 7, true, 7) == 0.0);
}

TEST_CASE("unsolvable-to-solvable transitions are counted as anomalies") {
    ShapingCounters counters;
    CHECK(shaping_bonus(false, 0, true, 3, &counters) == 0.0);
    CHECK(counters.unsolvable_to_solvable_anomalies.load() == 1);
    shaping_bonus(true, 2, true, 1, &counters);
    shaping_bonus(true, 2, false, 0, &counters);
    shaping_bonus(false, 0, false, 0, &counters);
    CHECK(counters.unsolvable_to_solvable_anomalies.load() == 1);
}

TEST_CASE("disabled shaping is a strict identity wrapper") {
    DistanceCache cache;
    ShapingConfig cfg;
    cfg.enabled = false;
    std::mt19937_64 rng(17);
    for (uint64_t seed = 200; seed < 210; ++seed) {
        const Level level = generate(seed, 2, 7, 7, 25);
        State s = initial_state(level);
        for (int t = 0; t < 40; ++t) {
            const Action a = static_cast<Action>(rng() % kNumActions);
            const ShapedStepOutcome shaped = shaped_step(level, s, a, cfg, cache);
            const StepOutcome raw = step(level, s, a);
            CHECK(shaped.shaped_reward == raw.reward);
            CHECK(shaped.potential_bonus == 0.0);
            CHECK_FALSE(shaped.shaping_enabled);
            CHECK(shaped.inner.next_state == raw.next_state);
            if (raw.solved || raw.truncated) break;
            s = raw.next_state;
        }
    }
    // no distance queries were made
    CHECK(cache.size() == 0);
}

TEST_CASE("solving push from d(s)=1 yields shaped reward 11.9") {
    DistanceCache cache;
    ShapingConfig cfg;
    const Level level = parse_xsb("#####\n#@$.#\n#####");
    const State s = initial_state(level);
    REQUIRE(distance(level, s, cache, cfg.heuristic_mode) == 1);
    const ShapedStepOutcome out = shaped_step(level, s, Action::Right, cfg, cache);
    CHECK(out.inner.solved);
    CHECK(out.potential_bonus == 1.0);
    CHECK(out.shaped_reward == Catch::Approx(11.9));
    CHECK(out.s_solvable);
    CHECK(out.s_prime_solvable);
}

TEST_CASE("pushing a box into a dead corner from d(s)=6 yields F = -7") {
    // player above the box; pushing Down parks the box on the dead bottom row
    const Level level = parse_xsb("########\n# @    #\n# $   .#\n#      #\n########");
    DistanceCache cache;
    ShapingConfig cfg;
    const State s = initial_state(level);
    REQUIRE(distance(level, s, cache, cfg.heuristic_mode) == 6);
    const ShapedStepOutcome out = shaped_step(level, s, Action::Down, cfg, cache);
    CHECK(out.inner.next_state.boxes == std::vector<Pos>{{3, 2}});
    CHECK(out.s_solvable);
    CHECK_FALSE(out.s_prime_solvable);
    CHECK(out.potential_bonus == -7.0);
    CHECK(out.shaped_reward == Catch::Approx(-0.1 - 7.0));
}

TEST_CASE("after a deadlock every further bonus is zero") {
    const Level level = parse_xsb("########\n# @    #\n# $   .#\n#      #\n########");
    DistanceCache cache;
    ShapingConfig cfg;
    ShapingCounters counters;
    State s = shaped_step(level, initial_state(level), Action::Down, cfg, cache).inner.next_state;
    std::mt19937_64 rng(3);
    for (int t = 0; t < 30; ++t) {
        const Action a = static_cast<Action>(rng() % kNumActions);
        const ShapedStepOutcome out = shaped_step(level, s, a, cfg, cache, {}, &counters);
        CHECK(out.potential_bonus == 0.0);
        CHECK(out.shaped_reward == out.inner.reward);
        if (out.inner.truncated) break;
        s = out.inner.next_state;
    }
    CHECK(counters.unsolvable_to_solvable_anomalies.load() == 0);
}

TEST_CASE("telescoping: bonus sum equals d(s0) - d(s_end) on solvable prefixes") {
    DistanceCache cache;
    ShapingConfig cfg;
    std::mt19937_64 rng(41);
    int prefixes = 0;
    for (uint64_t seed = 900; seed < 915 && prefixes < 60; ++seed) {
        const Level level = generate(seed, 1 + seed % 2, 7, 7, 25);
        for (int trial = 0; trial < 4; ++trial) {
            State s = initial_state(level);
            const int d0 = distance(level, s, cache, cfg.heuristic_mode);
            double sum_f = 0.0;
            State end = s;
            bool live = true;
            for (int t = 0; t < 25 && live; ++t) {
                const ShapedStepOutcome out =
                    shaped_step(level, s, static_cast<Action>(rng() % kNumActions), cfg, cache);
                if (!out.s_prime_solvable) break;    // prefix must stay solvable
                sum_f += out.potential_bonus;
                end = out.inner.next_state;
                live = !out.inner.solved && !out.inner.truncated;
                s = end;
            }
            const int d_end = distance(level, end, cache, cfg.heuristic_mode);
            REQUIRE(d_end != kUnsolvable);
            CHECK(sum_f == static_cast<double>(d0 - d_end));
            ++prefixes;
        }
    }
    CHECK(prefixes >= 40);
}

TEST_CASE("gamma-discounted variant") {
    CHECK(shaping_bonus_gamma(true, 5, true, 4, 0.99, 0.0) ==
          Catch::Approx(0.99 * -4.0 - -5.0));
    // dead potential is a constant: both-unsolvable transitions cancel to (gamma-1)*phi_dead
    CHECK(shaping_bonus_gamma(false, 0, false, 0, 0.99, 0.0) == 0.0);
    CHECK(shaping_bonus_gamma(false, 0, false, 0, 0.99, -3.0) == Catch::Approx(0.99 * -3.0 + 3.0));
    // solvable -> unsolvable uses the constant for phi(s')
    CHECK(shaping_bonus_gamma(true, 3, false, 0, 0.99, 0.0) == Catch::Approx(3.0));
    ShapingCounters counters;
    shaping_bonus_gamma(false, 0, true, 2, 0.99, 0.0, &counters);
    CHECK(counters.unsolvable_to_solvable_anomalies.load() == 1);

    // shaped_step routes through the gamma form when configured
    DistanceCache cache;
    ShapingConfig cfg;
    cfg.gamma_in_potential = true;
    const Level level = parse_xsb("#####\n#@$.#\n#####");
    const ShapedStepOutcome out = shaped_step(level, initial_state(level), Action::Right, cfg, cache);
    CHECK(out.potential_bonus == Catch::Approx(0.99 * 0.0 - -1.0));
}

TEST_CASE("shaping never alters the underlying transition") {
    DistanceCache cache;
    ShapingConfig cfg;
    std::mt19937_64 rng(55);
    const Level level = generate(77, 2, 7, 7, 25);
    State s = initial_state(level);
    for (int t = 0; t < 50; ++t) {
        const Action a = static_cast<Action>(rng() % kNumActions);
        const StepOutcome raw = step(level, s, a);
        const ShapedStepOutcome shaped = shaped_step(level, s, a, cfg, cache);
        CHECK(shaped.inner.next_state == raw.next_state);
        CHECK(shaped.inner.reward == raw.reward);
        CHECK(shaped.inner.events == raw.events);
        CHECK(shaped.shaped_reward == raw.reward + shaped.potential_bonus);
        if (raw.solved || raw.truncated) break;
        s = raw.next_state;
    }
}
