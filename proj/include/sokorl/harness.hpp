#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "sokorl/a2c.hpp"
#include "sokorl/shaping.hpp"
#include "sokorl/xsb.hpp"

namespace sokorl {

inline uint64_t fnv1a64(const std::string &text) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline constexpr const char *kVersion = "0.1.0";

struct ExperimentConfig {
    ShapingConfig shaping;
    A2CHyper hyper;
    RewardConfig reward;    // step_cap lives here
    Encoding encoding = Encoding::Symbolic;
    long total_env_steps = 80000;
    long eval_every = 1000;
    int eval_instances = 20;
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string out_dir;        // empty: keep everything in memory
    std::string config_hash;    // reproducibility stamp for output headers
};

struct MetricsRow {
    uint64_t seed = 0;
    long env_steps = 0;
    double solved_ratio = 0;
    double mean_return = 0;    // raw (unshaped) reward units
    double mean_ep_len = 0;
    double wall_clock_sec = 0;
    bool shaped = false;
};

inline constexpr const char *kMetricsHeader =
    "seed,env_steps,solved_ratio,mean_return,mean_ep_len,wall_clock_sec,shaped";

inline void write_metrics_csv(const std::string &path, const std::vector<MetricsRow> &rows,
                              const std::string &header_comment) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write metrics csv: " + path);
    out << "# " << header_comment << "\n" << kMetricsHeader << "\n";
    char buf[256];
    for (const MetricsRow &r : rows) {
        std::snprintf(buf, sizeof(buf), "%llu,%ld,%.6f,%.6f,%.6f,%.3f,%d",
                      static_cast<unsigned long long>(r.seed), r.env_steps, r.solved_ratio,
                      r.mean_return, r.mean_ep_len, r.wall_clock_sec, r.shaped ? 1 : 0);
        out << buf << "\n";
    }
}

struct EvalOutcome {
    double solved_ratio = 0;
    double mean_return = 0;
    double mean_ep_len = 0;
};

// Greedy rollouts on n levels sampled without replacement; always scored on
// raw rewards so shaped and unshaped runs stay comparable. Pure in params.
inline EvalOutcome evaluate(const PolicyParams &params, const LevelSet &level_set, int n,
                            uint64_t eval_seed, const RewardConfig &reward_cfg = {},
                            Encoding encoding = Encoding::Symbolic) {
    if (n > static_cast<int>(level_set.levels.size()))
        throw ContractViolation("eval_instances exceeds level set size");
    std::mt19937_64 rng(eval_seed ^ 0x5851f42d4c957f2dull);
    std::vector<size_t> idx(level_set.levels.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (int i = 0; i < n; ++i) std::swap(idx[i], idx[i + detail::draw(rng, idx.size() - i)]);

    EvalOutcome out;
    int solved = 0;
    double total_return = 0, total_len = 0;
    std::vector<double> logits(params.arch.n_actions);
    for (int i = 0; i < n; ++i) {
        const Level &level = level_set.levels[idx[i]];
        State state = initial_state(level);
        double ep_return = 0;
        while (true) {
            const Observation obs = encode(level, state, encoding);
            double value = 0;
            forward(params, obs.data, logits.data(), &value, nullptr);
            const Action a = static_cast<Action>(argmax_fixed_order(logits.data(), params.arch.n_actions));
            const StepOutcome so = step(level, state, a, reward_cfg);
            ep_return += so.reward;
            state = so.next_state;
            if (so.solved || so.truncated) {
                solved += so.solved ? 1 : 0;
                total_len += state.steps_taken;
                break;
            }
        }
        total_return += ep_return;
    }
    out.solved_ratio = static_cast<double>(solved) / n;
    out.mean_return = total_return / n;
    out.mean_ep_len = total_len / n;
    return out;
}

struct TrainResult {
    PolicyParams params;
    std::vector<MetricsRow> metrics;
    long anomaly_count = 0;
    long budget_warnings = 0;
};

// One seed of Algorithm-1 style training: n_envs synchronous environments,
// shaped rewards, an A2C update every rollout_len steps per environment, an
// evaluation row at every eval_every boundary (plus step 0).
inline TrainResult train_one_seed(const LevelSet &level_set, const ExperimentConfig &cfg,
                                  uint64_t seed, DistanceCache &cache) {
    if (level_set.levels.empty()) throw ValidationError("empty level set");
    const Level &first = level_set.levels.front();
    for (const Level &l : level_set.levels)
        if (l.height != first.height || l.width != first.width)
            throw ValidationError("training requires uniform level dimensions");
    if (cfg.eval_instances > static_cast<int>(level_set.levels.size()))
        throw ValidationError("eval_instances exceeds level set size");

    // Symbolic training uses the state-table architecture: at this batch size
    // (150 transitions) and learning rate, per-update logit movements are tiny
    // and learning lives in sub-0.1 logit margins; any shared trunk's
    // cross-state gradient noise swamps those margins, while independent
    // per-state rows accumulate them reliably.
    const Observation probe = encode(first, initial_state(first), cfg.encoding);
    const ArchDescriptor arch = cfg.encoding == Encoding::Symbolic
                                    ? table_arch(probe.channels, probe.height, probe.width)
                                    : pixel_arch(probe.height, probe.width);

    TrainResult result;
    result.params = init_params(arch, seed);
    PolicyParams &params = result.params;
    ShapingCounters counters;

    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
    struct Env {
        const Level *level = nullptr;
        State state;
    };
    std::vector<Env> envs(cfg.hyper.n_envs);
    auto reset_env = [&](Env &env) {
        env.level = &level_set.levels[detail::draw(rng, level_set.levels.size())];
        env.state = initial_state(*env.level);
    };
    for (Env &e : envs) reset_env(e);

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    auto eval_row = [&](long at_steps) {
        const uint64_t eval_seed = seed * 1000003ull + static_cast<uint64_t>(at_steps);
        const EvalOutcome ev =
            evaluate(params, level_set, cfg.eval_instances, eval_seed, cfg.reward, cfg.encoding);
        MetricsRow row;
        row.seed = seed;
        row.env_steps = at_steps;
        row.solved_ratio = ev.solved_ratio;
        row.mean_return = ev.mean_return;
        row.mean_ep_len = ev.mean_ep_len;
        row.wall_clock_sec = elapsed();
        row.shaped = cfg.shaping.enabled;
        result.metrics.push_back(row);
        if (!cfg.out_dir.empty())
            save_checkpoint(cfg.out_dir + "/checkpoint_seed" + std::to_string(seed) + "_latest.ckpt",
                            params);
    };

    eval_row(0);
    long env_steps = 0;
    std::vector<double> logits(arch.n_actions), probs(arch.n_actions);
    while (env_steps < cfg.total_env_steps) {
        RolloutBatch batch;
        batch.envs.resize(envs.size());
        for (int t = 0; t < cfg.hyper.rollout_len; ++t) {
            for (size_t e = 0; e < envs.size(); ++e) {
                Env &env = envs[e];
                StepRecord rec;
                rec.obs = encode(*env.level, env.state, cfg.encoding);
                double value = 0;
                forward(params, rec.obs.data, logits.data(), &value, nullptr);
                softmax(logits.data(), arch.n_actions, probs.data());
                rec.action = sample_categorical(probs.data(), arch.n_actions, rng);
                rec.value = value;
                const ShapedStepOutcome so = shaped_step(*env.level, env.state,
                                                         static_cast<Action>(rec.action), cfg.shaping,
                                                         cache, cfg.reward, &counters);
                rec.reward = so.shaped_reward;
                rec.terminal = so.inner.solved;
                rec.truncated = so.inner.truncated;
                if (rec.truncated) {
                    const Observation next_obs = encode(*env.level, so.inner.next_state, cfg.encoding);
                    double v_next = 0;
                    forward(params, next_obs.data, logits.data(), &v_next, nullptr);
                    rec.truncated_bootstrap = v_next;
                }
                const bool done = rec.terminal || rec.truncated;
                batch.envs[e].steps.push_back(std::move(rec));
                if (done)
                    reset_env(env);
                else
                    env.state = so.inner.next_state;
                ++env_steps;
            }
        }
        for (size_t e = 0; e < envs.size(); ++e) {
            const StepRecord &last = batch.envs[e].steps.back();
            if (!last.terminal && !last.truncated) {
                const Observation obs = encode(*envs[e].level, envs[e].state, cfg.encoding);
                double v = 0;
                forward(params, obs.data, logits.data(), &v, nullptr);
                batch.envs[e].tail_bootstrap = v;
            }
        }
        LossResult loss = a2c_loss(params, batch, cfg.hyper);
        rmsprop_step(params, std::move(loss.grad), cfg.hyper);

        const long prev = env_steps - static_cast<long>(envs.size()) * cfg.hyper.rollout_len;
        for (long m = (prev / cfg.eval_every + 1) * cfg.eval_every;
             m <= env_steps && m <= cfg.total_env_steps; m += cfg.eval_every)
            eval_row(m);
    }
    result.anomaly_count = counters.unsolvable_to_solvable_anomalies.load();
    result.budget_warnings = cache.budget_warnings();
    return result;
}

// All seeds of one configuration; shares one distance cache, writes one CSV
// per seed plus a final-row summary when out_dir is set.
inline std::vector<TrainResult> train(const LevelSet &level_set, const ExperimentConfig &cfg) {
    DistanceCache cache;
    std::vector<TrainResult> results;
    for (uint64_t seed : cfg.seeds) {
        results.push_back(train_one_seed(level_set, cfg, seed, cache));
        if (!cfg.out_dir.empty()) {
            const std::string tag = cfg.shaping.enabled ? "shaped" : "raw";
            const std::string header = "config_hash=" + cfg.config_hash + " seed=" +
                                       std::to_string(seed) + " version=" + kVersion;
            write_metrics_csv(cfg.out_dir + "/metrics_seed" + std::to_string(seed) + "_" + tag + ".csv",
                              results.back().metrics, header);
            save_checkpoint(cfg.out_dir + "/checkpoint_seed" + std::to_string(seed) + "_final.ckpt",
                            results.back().params);
        }
    }
    if (!cfg.out_dir.empty()) {
        std::ofstream out(cfg.out_dir + "/summary.txt", std::ios::trunc);
        out << "# config_hash=" << cfg.config_hash << " version=" << kVersion << "\n";
        for (const TrainResult &r : results) {
            const MetricsRow &last = r.metrics.back();
            out << "seed=" << last.seed << " final_env_steps=" << last.env_steps
                << " solved_ratio=" << last.solved_ratio << " mean_return=" << last.mean_return
                << " shaped=" << (last.shaped ? 1 : 0) << "\n";
        }
    }
    return results;
}

struct ShortestPathStats {
    std::vector<std::pair<std::string, int>> lengths;    // (level id, optimal length)
    double mean = 0;
};

// Optimal lengths under the admissible MinMatching heuristic. Multiset
// semantics: duplicates count twice.
inline ShortestPathStats shortest_path_stats(const LevelSet &level_set,
                                             long node_budget = kUnlimitedBudget) {
    ShortestPathStats stats;
    double sum = 0;
    for (const Level &level : level_set.levels) {
        const PlanResult res =
            solve_astar(level, initial_state(level), HeuristicMode::MinMatching, node_budget);
        if (res.status != PlanResult::Status::Solved)
            throw ValidationError("level " + level.id + " is " +
                                  (res.status == PlanResult::Status::Budget ? "over the node budget"
                                                                            : "unsolvable"));
        stats.lengths.emplace_back(level.id, res.length);
        sum += res.length;
    }
    stats.mean = sum / static_cast<double>(stats.lengths.size());
    return stats;
}

}    // namespace sokorl
