// Command-line front end: solve, generate, stats, train, eval.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "sokorl/sokorl.hpp"

namespace {

using namespace sokorl;

HeuristicMode parse_heuristic(const std::string &s) {
    if (s == "allpairs") return HeuristicMode::AllPairs;
    if (s == "nearest") return HeuristicMode::NearestTarget;
    if (s == "minmatching") return HeuristicMode::MinMatching;
    throw ValidationError("unknown heuristic '" + s + "' (allpairs|nearest|minmatching)");
}

bool parse_bool(const std::string &s) {
    if (s == "on" || s == "true" || s == "1" || s == "yes") return true;
    if (s == "off" || s == "false" || s == "0" || s == "no") return false;
    throw ValidationError("expected a boolean, got '" + s + "'");
}

// One `key = value` per line, '#' comments.
std::map<std::string, std::string> parse_config_file(const std::string &path) {
    std::map<std::string, std::string> kv;
    std::istringstream in(read_text_file(path));
    std::string line;
    int line_no = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(path + ":" + std::to_string(line_no) + ": expected key = value");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

struct TrainSettings {
    ExperimentConfig cfg;
    std::string levels_path;
};

void apply_key(TrainSettings &ts, const std::string &key, const std::string &value) {
    ExperimentConfig &c = ts.cfg;
    if (key == "levels")
        ts.levels_path = value;
    else if (key == "out_dir")
        c.out_dir = value;
    else if (key == "shaping")
        c.shaping.enabled = parse_bool(value);
    else if (key == "heuristic")
        c.shaping.heuristic_mode = parse_heuristic(value);
    else if (key == "gamma_in_potential")
        c.shaping.gamma_in_potential = parse_bool(value);
    else if (key == "node_budget")
        c.shaping.node_budget = std::stol(value);
    else if (key == "encoding") {
        if (value == "symbolic")
            c.encoding = Encoding::Symbolic;
        else if (value == "pixel")
            c.encoding = Encoding::Pixel;
        else
            throw ValidationError("unknown encoding '" + value + "' (symbolic|pixel)");
    } else if (key == "total_env_steps")
        c.total_env_steps = std::stol(value);
    else if (key == "eval_every")
        c.eval_every = std::stol(value);
    else if (key == "eval_instances")
        c.eval_instances = std::stoi(value);
    else if (key == "step_cap")
        c.reward.step_cap = std::stoi(value);
    else if (key == "seeds") {
        c.seeds.clear();
        std::istringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ',')) c.seeds.push_back(std::stoull(tok));
        if (c.seeds.empty()) throw ValidationError("seeds list is empty");
    } else if (key == "learning_rate")
        c.hyper.learning_rate = std::stod(value);
    else if (key == "gamma") {
        c.hyper.gamma = std::stod(value);
        c.shaping.gamma = c.hyper.gamma;
    } else if (key == "entropy_coef")
        c.hyper.entropy_coef = std::stod(value);
    else if (key == "value_loss_coef")
        c.hyper.value_loss_coef = std::stod(value);
    else if (key == "rmsprop_eps")
        c.hyper.rmsprop_eps = std::stod(value);
    else if (key == "rmsprop_alpha")
        c.hyper.rmsprop_alpha = std::stod(value);
    else if (key == "rollout_len")
        c.hyper.rollout_len = std::stoi(value);
    else if (key == "n_envs")
        c.hyper.n_envs = std::stoi(value);
    else if (key == "grad_clip")
        c.hyper.grad_clip = std::stod(value);
    else
        throw ValidationError("unknown config key '" + key + "'");
}

std::string hash_of(const std::map<std::string, std::string> &kv) {
    std::string blob;
    for (const auto &[k, v] : kv) blob += k + "=" + v + "\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(blob)));
    return buf;
}

int cmd_solve(const std::string &level_path, int index, const std::string &heuristic, long budget) {
    const auto levels = parse_xsb_collection(read_text_file(level_path), level_path);
    if (index < 0 || index >= static_cast<int>(levels.size()))
        throw ValidationError("level index out of range (file has " + std::to_string(levels.size()) +
                              " levels)");
    const Level &level = levels[index];
    const PlanResult res = solve_astar(level, initial_state(level), parse_heuristic(heuristic), budget);
    switch (res.status) {
        case PlanResult::Status::Solved: {
            std::string plan;
            for (Action a : res.plan) plan.push_back(action_letter(a));
            std::cout << "plan: " << plan << "\nlength: " << res.length
                      << "\nnodes_expanded: " << res.nodes_expanded << "\n";
            return 0;
        }
        case PlanResult::Status::Unsolvable:
            std::cout << "unsolvable (nodes_expanded: " << res.nodes_expanded << ")\n";
            return 2;
        default:
            std::cout << "node budget exhausted (nodes_expanded: " << res.nodes_expanded << ")\n";
            return 2;
    }
}

int cmd_generate(uint64_t seed, int boxes, int height, int width, int max_pulls, int count,
                 const std::string &out_dir) {
    std::filesystem::create_directories(out_dir);
    const LevelSet set = generate_set(seed, count, boxes, height, width, max_pulls);
    std::ostringstream manifest;
    manifest << "# sokorl generate seed=" << seed << " boxes=" << boxes << " size=" << height << "x"
             << width << " max_pulls=" << max_pulls << " version=" << kVersion << "\n";
    manifest << "n_boxes = " << boxes << "\n";
    for (size_t i = 0; i < set.levels.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "level_%03zu.xsb", i);
        std::ofstream out(out_dir + "/" + name, std::ios::binary | std::ios::trunc);
        out << serialize_xsb(set.levels[i]);
        manifest << name << "\n";
    }
    std::ofstream mf(out_dir + "/manifest.txt", std::ios::binary | std::ios::trunc);
    mf << manifest.str();
    std::cout << "wrote " << set.levels.size() << " levels to " << out_dir << "\n";
    return 0;
}

int cmd_stats(const std::string &levels_path, const std::string &out_csv) {
    const LevelSet set = load_level_set(levels_path);
    ShortestPathStats stats;
    try {
        stats = shortest_path_stats(set);
    } catch (const ValidationError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::ostringstream csv;
    csv << "# sokorl stats levels=" << levels_path << " version=" << kVersion << "\n";
    csv << "level_id,optimal_length\n";
    for (const auto &[id, len] : stats.lengths) csv << id << "," << len << "\n";
    if (out_csv.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(out_csv, std::ios::binary | std::ios::trunc);
        out << csv.str();
    }
    std::cout << "mean_optimal_length: " << stats.mean << "\n";
    return 0;
}

int cmd_train(const std::string &config_path, const std::vector<std::pair<std::string, std::string>> &overrides) {
    std::map<std::string, std::string> kv;
    if (!config_path.empty()) kv = parse_config_file(config_path);
    for (const auto &[k, v] : overrides) kv[k] = v;
    TrainSettings ts;
    for (const auto &[k, v] : kv) apply_key(ts, k, v);
    if (ts.levels_path.empty()) throw ValidationError("no level set given (config key 'levels' or --levels)");
    ts.cfg.config_hash = hash_of(kv);
    if (!ts.cfg.out_dir.empty()) std::filesystem::create_directories(ts.cfg.out_dir);
    const LevelSet set = load_level_set(ts.levels_path);
    const auto results = train(set, ts.cfg);
    for (const auto &r : results) {
        const MetricsRow &last = r.metrics.back();
        std::cout << "seed " << last.seed << ": env_steps=" << last.env_steps
                  << " solved_ratio=" << last.solved_ratio << " mean_return=" << last.mean_return
                  << "\n";
    }
    return 0;
}

int cmd_eval(const std::string &checkpoint, const std::string &levels_path, int n, uint64_t seed) {
    const PolicyParams params = load_checkpoint(checkpoint);
    const LevelSet set = load_level_set(levels_path);
    if (n <= 0) n = std::min<int>(20, static_cast<int>(set.levels.size()));
    const EvalOutcome ev = evaluate(params, set, n, seed);
    std::cout << "# checkpoint=" << checkpoint << " levels=" << levels_path << " version=" << kVersion
              << "\n";
    std::cout << kMetricsHeader << "\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%llu,0,%.6f,%.6f,%.6f,0.000,0",
                  static_cast<unsigned long long>(seed), ev.solved_ratio, ev.mean_return,
                  ev.mean_ep_len);
    std::cout << buf << "\n";
    return 0;
}

}    // namespace

int main(int argc, char **argv) {
    CLI::App app{"Sokoban RL workbench: A*-shaped reward A2C training and tooling"};
    app.require_subcommand(1);

    // solve
    auto *solve = app.add_subcommand("solve", "A*-solve an XSB level and print the plan");
    std::string solve_level, solve_heur = "minmatching";
    int solve_index = 0;
    long solve_budget = -1;
    solve->add_option("--level", solve_level, "XSB level file")->required();
    solve->add_option("--index", solve_index, "level index within the file");
    solve->add_option("--heuristic", solve_heur, "allpairs|nearest|minmatching");
    solve->add_option("--budget", solve_budget, "node budget (-1 unlimited)");

    // generate
    auto *gen = app.add_subcommand("generate", "procedurally generate solvable levels");
    uint64_t gen_seed = 1;
    int gen_boxes = 1, gen_h = 7, gen_w = 7, gen_pulls = 20, gen_count = 20;
    std::string gen_out = "levels";
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--boxes", gen_boxes, "boxes per level");
    gen->add_option("--height", gen_h, "grid height (>= 5)");
    gen->add_option("--width", gen_w, "grid width (>= 5)");
    gen->add_option("--max-pulls", gen_pulls, "reverse-play pull budget");
    gen->add_option("--count", gen_count, "number of levels");
    gen->add_option("--out", gen_out, "output directory");

    // stats
    auto *stats = app.add_subcommand("stats", "optimal-length statistics for a level set");
    std::string stats_levels, stats_out;
    stats->add_option("--levels", stats_levels, "manifest or .xsb file")->required();
    stats->add_option("--out", stats_out, "CSV output path (default stdout)");

    // train
    auto *train_cmd = app.add_subcommand("train", "train A2C over a level set");
    std::string train_config;
    train_cmd->add_option("--config", train_config, "key = value config file");
    std::map<std::string, std::string> flag_values;
    // every config key gets a --kebab-case twin; flags override file values
    static const char *kKeys[] = {"levels",          "out_dir",        "shaping",
                                  "heuristic",       "gamma_in_potential", "node_budget",
                                  "encoding",        "total_env_steps", "eval_every",
                                  "eval_instances",  "step_cap",       "seeds",
                                  "learning_rate",   "gamma",          "entropy_coef",
                                  "value_loss_coef", "rmsprop_eps",    "rmsprop_alpha",
                                  "rollout_len",     "n_envs",         "grad_clip"};
    for (const char *key : kKeys) {
        std::string flag = "--" + std::string(key);
        for (auto &ch : flag)
            if (ch == '_') ch = '-';
        train_cmd->add_option(flag, flag_values[key], std::string("config key ") + key);
    }

    // eval
    auto *eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a level set");
    std::string eval_ckpt, eval_levels;
    int eval_n = 0;
    uint64_t eval_seed = 1;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--levels", eval_levels, "manifest or .xsb file")->required();
    eval_cmd->add_option("--n", eval_n, "instances to sample (default min(20, set size))");
    eval_cmd->add_option("--seed", eval_seed, "evaluation seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(solve_level, solve_index, solve_heur, solve_budget);
        if (gen->parsed()) return cmd_generate(gen_seed, gen_boxes, gen_h, gen_w, gen_pulls, gen_count, gen_out);
        if (stats->parsed()) return cmd_stats(stats_levels, stats_out);
        if (train_cmd->parsed()) {
            std::vector<std::pair<std::string, std::string>> overrides;
            for (const auto &[k, v] : flag_values)
                if (!v.empty()) overrides.emplace_back(k, v);
            return cmd_train(train_config, overrides);
        }
        if (eval_cmd->parsed()) return cmd_eval(eval_ckpt, eval_levels, eval_n, eval_seed);
    } catch (const sokorl::ParseError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const sokorl::GenerationError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
