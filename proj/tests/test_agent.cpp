#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "sokorl/a2c.hpp"
#include "sokorl/generate.hpp"
#include "sokorl/xsb.hpp"

using namespace sokorl;

namespace {

// 2-channel 5x5 input, one tiny conv, 8 hidden units: small enough that
// central finite differences over every parameter stay fast.
ArchDescriptor tiny_arch() { return {2, 5, 5, {{3, 3, 1}}, 8}; }

Observation random_obs(const ArchDescriptor &arch, std::mt19937_64 &rng) {
    Observation obs;
    obs.encoding = Encoding::Symbolic;
    obs.channels = arch.in_channels;
    obs.height = arch.in_h;
    obs.width = arch.in_w;
    obs.data.resize(static_cast<size_t>(arch.in_channels) * arch.in_h * arch.in_w);
    for (double &v : obs.data) v = ((rng() >> 11) * 0x1.0p-53) * 2.0 - 1.0;
    return obs;
}

RolloutBatch random_batch(const ArchDescriptor &arch, std::mt19937_64 &rng, int n_envs,
                          int len) {
    RolloutBatch batch;
    for (int e = 0; e < n_envs; ++e) {
        EnvRollout env;
        for (int t = 0; t < len; ++t) {
            StepRecord s;
            s.obs = random_obs(arch, rng);
            s.action = static_cast<int>(rng() % arch.n_actions);
            s.reward = ((rng() >> 11) * 0x1.0p-53) * 4.0 - 2.0;
            s.value = 0.0;    // collection-time values are not used by the loss
            if (t == len - 1 && rng() % 3 == 0) s.terminal = true;
            env.steps.push_back(std::move(s));
        }
        env.tail_bootstrap = ((rng() >> 11) * 0x1.0p-53) - 0.5;
        batch.envs.push_back(std::move(env));
    }
    return batch;
}

// Differentiable surrogate of the A2C objective: the policy-term advantage is
// supplied as a constant (A2C stops its gradient), the value term keeps its
// dependence on V. FD on this surrogate is the oracle for a2c_loss gradients.
double surrogate_loss(const PolicyParams &params, const RolloutBatch &batch,
                      const A2CHyper &hyper, const std::vector<std::vector<double>> &adv_const) {
    const auto returns = n_step_returns(batch, hyper.gamma);
    const int na = params.arch.n_actions;
    std::vector<double> logits(na), probs(na);
    double policy = 0, value_l = 0, entropy = 0;
    size_t n = 0;
    for (const auto &env : batch.envs) n += env.steps.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (size_t e = 0; e < batch.envs.size(); ++e) {
        for (size_t t = 0; t < batch.envs[e].steps.size(); ++t) {
            const StepRecord &s = batch.envs[e].steps[t];
            double v = 0;
            forward(params, s.obs.data, logits.data(), &v, nullptr);
            softmax(logits.data(), na, probs.data());
            policy += -std::log(std::max(probs[s.action], 1e-300)) * adv_const[e][t] * inv_n;
            const double adv = returns[e][t] - v;
            value_l += adv * adv * inv_n;
            double ent = 0;
            for (int a = 0; a < na; ++a)
                if (probs[a] > 0) ent -= probs[a] * std::log(probs[a]);
            entropy += ent * inv_n;
        }
    }
    return policy + hyper.value_loss_coef * value_l - hyper.entropy_coef * entropy;
}

std::vector<std::vector<double>> base_advantages(const PolicyParams &params,
                                                 const RolloutBatch &batch,
                                                 const A2CHyper &hyper) {
    const auto returns = n_step_returns(batch, hyper.gamma);
    std::vector<std::vector<double>> adv = returns;
    std::vector<double> logits(params.arch.n_actions);
    for (size_t e = 0; e < batch.envs.size(); ++e) {
        for (size_t t = 0; t < batch.envs[e].steps.size(); ++t) {
            double v = 0;
            forward(params, batch.envs[e].steps[t].obs.data, logits.data(), &v, nullptr);
            adv[e][t] = returns[e][t] - v;
        }
    }
    return adv;
}

}    // namespace

TEST_CASE("zero heads give a uniform policy and zero value") {
    const ArchDescriptor arch = tiny_arch();
    PolicyParams p = init_params(arch, 1);
    // zero out both heads
    for (size_t i = p.layout.pi_w; i < p.layout.total; ++i) p.w[i] = 0.0;
    std::mt19937_64 rng(2);
    const auto [logits, value] = forward(p, random_obs(arch, rng));
    std::vector<double> probs(arch.n_actions);
    softmax(logits.data(), arch.n_actions, probs.data());
    for (double q : probs) CHECK(q == Catch::Approx(0.2).margin(1e-12));
    CHECK(value == 0.0);
}

TEST_CASE("forward is deterministic and rejects shape mismatches") {
    const ArchDescriptor arch = tiny_arch();
    const PolicyParams p = init_params(arch, 7);
    std::mt19937_64 rng(9);
    const Observation obs = random_obs(arch, rng);
    const auto [l1, v1] = forward(p, obs);
    const auto [l2, v2] = forward(p, obs);
    CHECK(l1 == l2);
    CHECK(v1 == v2);
    std::vector<double> bad(3, 0.0);
    double value = 0;
    std::vector<double> logits(arch.n_actions);
    CHECK_THROWS_AS(forward(p, bad, logits.data(), &value, nullptr), ContractViolation);
}

TEST_CASE("n_step_returns worked examples") {
    RolloutBatch batch;
    {
        EnvRollout env;
        StepRecord a;
        a.reward = 1.0;
        StepRecord b;
        b.reward = 1.0;
        b.terminal = true;
        env.steps = {a, b};
        batch.envs.push_back(env);
    }
    auto r = n_step_returns(batch, 0.5);
    CHECK(r[0] == std::vector<double>{1.5, 1.0});

    RolloutBatch boot;
    {
        EnvRollout env;
        StepRecord a;
        a.reward = 0.0;
        env.steps = {a};
        env.tail_bootstrap = 2.0;
        boot.envs.push_back(env);
    }
    CHECK(n_step_returns(boot, 0.99)[0] == std::vector<double>{1.98});

    // gamma = 0 degenerates to the raw rewards
    std::mt19937_64 rng(12);
    const RolloutBatch rb = random_batch(tiny_arch(), rng, 3, 5);
    const auto rets = n_step_returns(rb, 0.0);
    for (size_t e = 0; e < rb.envs.size(); ++e)
        for (size_t t = 0; t < rb.envs[e].steps.size(); ++t)
            CHECK(rets[e][t] == rb.envs[e].steps[t].reward);
}

TEST_CASE("truncated steps bootstrap with the stored next-state value") {
    RolloutBatch batch;
    EnvRollout env;
    StepRecord a;
    a.reward = -0.1;
    StepRecord b;
    b.reward = -0.1;
    b.truncated = true;
    b.truncated_bootstrap = 3.0;
    env.steps = {a, b};
    batch.envs.push_back(env);
    const auto r = n_step_returns(batch, 0.5);
    CHECK(r[0][1] == Catch::Approx(-0.1 + 0.5 * 3.0));
    CHECK(r[0][0] == Catch::Approx(-0.1 + 0.5 * r[0][1]));
}

TEST_CASE("uniform policy entropy is ln 5") {
    const ArchDescriptor arch = tiny_arch();
    PolicyParams p = init_params(arch, 1);
    for (size_t i = p.layout.pi_w; i < p.layout.total; ++i) p.w[i] = 0.0;
    std::mt19937_64 rng(21);
    const RolloutBatch batch = random_batch(arch, rng, 2, 3);
    const LossResult res = a2c_loss(p, batch, {});
    CHECK(res.entropy == Catch::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("zero advantages annihilate the policy-gradient term") {
    const ArchDescriptor arch = tiny_arch();
    const PolicyParams p = init_params(arch, 4);
    std::mt19937_64 rng(33);
    // one-step env where the recorded return equals the current value exactly
    RolloutBatch batch;
    EnvRollout env;
    StepRecord s;
    s.obs = random_obs(arch, rng);
    const auto [logits, value] = forward(p, s.obs);
    s.action = 2;
    s.reward = value;    // terminal → return == reward == V(s) → A = 0
    s.terminal = true;
    env.steps = {s};
    batch.envs.push_back(env);

    A2CHyper hyper;
    hyper.entropy_coef = 0.0;    // isolate the policy term
    hyper.value_loss_coef = 0.0;
    const LossResult res = a2c_loss(p, batch, hyper);
    CHECK(res.policy_loss == 0.0);
    for (double g : res.grad) CHECK(g == 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
    const ArchDescriptor arch = tiny_arch();
    std::mt19937_64 rng(77);
    const A2CHyper hyper;
    int checked = 0, ok = 0;
    for (int trial = 0; trial < 4; ++trial) {
        PolicyParams p = init_params(arch, 100 + trial);
        const RolloutBatch batch = random_batch(arch, rng, 2, 3);
        const LossResult res = a2c_loss(p, batch, hyper);
        const auto adv = base_advantages(p, batch, hyper);
        const double h = 1e-4;
        for (size_t i = 0; i < p.w.size(); ++i) {
            const double orig = p.w[i];
            p.w[i] = orig + h;
            const double lp = surrogate_loss(p, batch, hyper, adv);
            p.w[i] = orig - h;
            const double lm = surrogate_loss(p, batch, hyper, adv);
            p.w[i] = orig;
            const double fd = (lp - lm) / (2 * h);
            const double denom = std::max({std::abs(fd), std::abs(res.grad[i]), 1e-8});
            ++checked;
            if (std::abs(fd - res.grad[i]) / denom <= 1e-4) ++ok;
        }
    }
    INFO(ok << " of " << checked << " parameters within tolerance");
    CHECK(ok >= checked * 99 / 100);
}

TEST_CASE("softmax normalizes within 1e-9 for random logits") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        double logits[5], probs[5];
        for (double &l : logits) l = ((rng() >> 11) * 0x1.0p-53) * 40.0 - 20.0;
        softmax(logits, 5, probs);
        double sum = 0;
        for (double q : probs) {
            CHECK(q >= 0.0);
            sum += q;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("rmsprop worked examples") {
    const ArchDescriptor arch = tiny_arch();
    A2CHyper hyper;
    hyper.grad_clip = 0.0;    // isolate the update rule

    // zero gradient: parameters unchanged, accumulators decay by alpha
    PolicyParams p = init_params(arch, 3);
    p.rms.assign(p.rms.size(), 0.5);
    const std::vector<double> before = p.w;
    rmsprop_step(p, std::vector<double>(p.w.size(), 0.0), hyper);
    CHECK(p.w == before);
    for (double a : p.rms) CHECK(a == Catch::Approx(0.5 * 0.99));

    // first step with g = 1 from zero accumulators
    PolicyParams q = init_params(arch, 3);
    const double w0 = q.w[0];
    std::vector<double> g(q.w.size(), 0.0);
    g[0] = 1.0;
    rmsprop_step(q, g, hyper);
    const double delta1 = q.w[0] - w0;
    CHECK(delta1 == Catch::Approx(-7e-4 / (std::sqrt(0.01) + 1e-5)).epsilon(1e-12));
    CHECK(delta1 == Catch::Approx(-6.9993e-3).epsilon(1e-4));

    // a second identical step moves less
    const double w1 = q.w[0];
    rmsprop_step(q, g, hyper);
    CHECK(std::abs(q.w[0] - w1) < std::abs(delta1));

    // mismatched gradient size is rejected
    CHECK_THROWS_AS(rmsprop_step(q, std::vector<double>(3, 0.0), hyper), ContractViolation);
}

TEST_CASE("global-norm clipping caps the update magnitude") {
    const ArchDescriptor arch = tiny_arch();
    A2CHyper hyper;
    hyper.grad_clip = 0.5;
    PolicyParams p = init_params(arch, 6);
    std::vector<double> g(p.w.size(), 0.0);
    g[0] = 30.0;
    g[1] = 40.0;    // norm 50 → scaled by 0.01
    PolicyParams q = p;
    rmsprop_step(q, g, hyper);
    // the effective gradient was (0.3, 0.4); verify against a manual update
    auto expected = [&](double ge, double w, double acc) {
        const double a2 = 0.99 * acc + 0.01 * ge * ge;
        return w - 7e-4 * ge / (std::sqrt(a2) + 1e-5);
    };
    CHECK(q.w[0] == Catch::Approx(expected(0.3, p.w[0], p.rms[0])).epsilon(1e-12));
    CHECK(q.w[1] == Catch::Approx(expected(0.4, p.w[1], p.rms[1])).epsilon(1e-12));
}

TEST_CASE("seeded training micro-loop is bitwise deterministic") {
    const ArchDescriptor arch = tiny_arch();
    auto run = [&](uint64_t seed) {
        PolicyParams p = init_params(arch, seed);
        std::mt19937_64 rng(seed);
        for (int iter = 0; iter < 5; ++iter) {
            const RolloutBatch batch = random_batch(arch, rng, 2, 4);
            rmsprop_step(p, a2c_loss(p, batch, {}).grad, {});
        }
        return p.w;
    };
    CHECK(run(11) == run(11));
    CHECK(run(11) != run(12));
}

TEST_CASE("checkpoint round-trip is lossless") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "sokorl_agent_ckpt.bin";
    PolicyParams p = init_params(desk_arch(kSymbolicChannels, 7, 7), 42);
    std::mt19937_64 rng(8);
    for (double &a : p.rms) a = (rng() >> 11) * 0x1.0p-53;
    save_checkpoint(path.string(), p);
    const PolicyParams q = load_checkpoint(path.string());
    CHECK(q.arch == p.arch);
    CHECK(q.w == p.w);
    CHECK(q.rms == p.rms);
    fs::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path.string()), ValidationError);
}

TEST_CASE("initialization is seed-deterministic with near-zero heads") {
    const ArchDescriptor arch = desk_arch(kSymbolicChannels, 7, 7);
    const PolicyParams a = init_params(arch, 5);
    const PolicyParams b = init_params(arch, 5);
    CHECK(a.w == b.w);
    for (int i = 0; i < arch.n_actions; ++i) CHECK(a.w[a.layout.pi_b + i] == 0.0);
    for (int i = 0; i < arch.n_actions * arch.fc_units; ++i)
        CHECK(std::abs(a.w[a.layout.pi_w + i]) < 0.1);
    for (double acc : a.rms) CHECK(acc == 0.0);
}

TEST_CASE("empty batch is rejected") {
    const PolicyParams p = init_params(tiny_arch(), 1);
    CHECK_THROWS_AS(a2c_loss(p, RolloutBatch{}, {}), ContractViolation);
}

// ---- state-table architecture --------------------------------------------

namespace {

Observation one_hot_obs(const ArchDescriptor &arch, std::mt19937_64 &rng) {
    // one active channel per cell, like the symbolic encoder
    Observation obs;
    obs.encoding = Encoding::Symbolic;
    obs.channels = arch.in_channels;
    obs.height = arch.in_h;
    obs.width = arch.in_w;
    const int cells = arch.in_h * arch.in_w;
    obs.data.assign(static_cast<size_t>(arch.in_channels) * cells, 0.0);
    for (int c = 0; c < cells; ++c)
        obs.data[static_cast<size_t>(rng() % arch.in_channels) * cells + c] = 1.0;
    return obs;
}

}    // namespace

TEST_CASE("table arch layout and validation") {
    const ArchDescriptor arch = table_arch(2, 5, 5, 64);
    const NetLayout lay = make_layout(arch);
    CHECK(lay.tab == 0);
    CHECK(lay.total == 64u * (kNumActions + 1));

    ArchDescriptor bad = arch;
    bad.state_buckets = 0;    // neither trunk nor table
    CHECK_THROWS_AS(make_layout(bad), ContractViolation);
    bad.convs = {{4, 3, 1}};    // convs without an FC layer
    bad.state_buckets = 64;
    CHECK_THROWS_AS(make_layout(bad), ContractViolation);
}

TEST_CASE("freshly initialized table gives a uniform policy and zero value") {
    const ArchDescriptor arch = table_arch(2, 5, 5, 64);
    const PolicyParams p = init_params(arch, 3);
    for (double w : p.w) CHECK(w == 0.0);
    std::mt19937_64 rng(4);
    const auto [logits, value] = forward(p, one_hot_obs(arch, rng));
    for (double l : logits) CHECK(l == 0.0);
    CHECK(value == 0.0);
}

TEST_CASE("distinct states map to distinct table rows and never interfere") {
    const ArchDescriptor arch = table_arch(kSymbolicChannels, 7, 7);
    PolicyParams p = init_params(arch, 1);
    std::mt19937_64 rng(9);
    const Observation a = one_hot_obs(arch, rng);
    const Observation b = one_hot_obs(arch, rng);
    const size_t ba = state_bucket(arch, a.data);
    const size_t bb = state_bucket(arch, b.data);
    CHECK(state_bucket(arch, a.data) == ba);    // deterministic
    REQUIRE(ba != bb);                          // 2^16 buckets: collision ~0 here
    // bump state a's row; state b's outputs stay untouched
    const auto [lb0, vb0] = forward(p, b);
    for (int i = 0; i <= kNumActions; ++i) p.w[p.layout.tab + ba * (kNumActions + 1) + i] = 1.0;
    const auto [lb1, vb1] = forward(p, b);
    CHECK(lb0 == lb1);
    CHECK(vb0 == vb1);
    const auto [la, va] = forward(p, a);
    for (double l : la) CHECK(l == 1.0);
    CHECK(va == 1.0);
}

TEST_CASE("table arch gradients match central finite differences") {
    const ArchDescriptor arch = table_arch(2, 5, 5, 64);
    std::mt19937_64 rng(55);
    const A2CHyper hyper;
    int checked = 0, ok = 0;
    for (int trial = 0; trial < 4; ++trial) {
        PolicyParams p = init_params(arch, 200 + trial);
        // start from random table weights so ties and zeros do not mask bugs
        for (double &w : p.w) w = ((rng() >> 11) * 0x1.0p-53) - 0.5;
        RolloutBatch batch;
        for (int e = 0; e < 2; ++e) {
            EnvRollout env;
            for (int t = 0; t < 3; ++t) {
                StepRecord s;
                s.obs = one_hot_obs(arch, rng);
                s.action = static_cast<int>(rng() % arch.n_actions);
                s.reward = ((rng() >> 11) * 0x1.0p-53) * 4.0 - 2.0;
                if (t == 2 && rng() % 3 == 0) s.terminal = true;
                env.steps.push_back(std::move(s));
            }
            env.tail_bootstrap = ((rng() >> 11) * 0x1.0p-53) - 0.5;
            batch.envs.push_back(std::move(env));
        }
        const LossResult res = a2c_loss(p, batch, hyper);
        const auto adv = base_advantages(p, batch, hyper);
        const double h = 1e-4;
        for (size_t i = 0; i < p.w.size(); ++i) {
            const double orig = p.w[i];
            p.w[i] = orig + h;
            const double lp = surrogate_loss(p, batch, hyper, adv);
            p.w[i] = orig - h;
            const double lm = surrogate_loss(p, batch, hyper, adv);
            p.w[i] = orig;
            const double fd = (lp - lm) / (2 * h);
            const double denom = std::max({std::abs(fd), std::abs(res.grad[i]), 1e-8});
            ++checked;
            if (std::abs(fd - res.grad[i]) / denom <= 1e-4) ++ok;
        }
    }
    INFO(ok << " of " << checked << " parameters within tolerance");
    CHECK(ok == checked);
}

TEST_CASE("trunk plus table gradients match central finite differences") {
    ArchDescriptor arch = tiny_arch();
    arch.state_buckets = 32;
    std::mt19937_64 rng(66);
    const A2CHyper hyper;
    PolicyParams p = init_params(arch, 300);
    const RolloutBatch batch = random_batch(arch, rng, 2, 3);
    const LossResult res = a2c_loss(p, batch, hyper);
    const auto adv = base_advantages(p, batch, hyper);
    const double h = 1e-4;
    int checked = 0, ok = 0;
    for (size_t i = 0; i < p.w.size(); ++i) {
        const double orig = p.w[i];
        p.w[i] = orig + h;
        const double lp = surrogate_loss(p, batch, hyper, adv);
        p.w[i] = orig - h;
        const double lm = surrogate_loss(p, batch, hyper, adv);
        p.w[i] = orig;
        const double fd = (lp - lm) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(res.grad[i]), 1e-8});
        ++checked;
        if (std::abs(fd - res.grad[i]) / denom <= 1e-4) ++ok;
    }
    INFO(ok << " of " << checked << " parameters within tolerance");
    CHECK(ok >= checked * 99 / 100);
}

TEST_CASE("table arch checkpoint round-trip is lossless") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "sokorl_table_ckpt.bin";
    PolicyParams p = init_params(table_arch(kSymbolicChannels, 7, 7, 128), 11);
    std::mt19937_64 rng(12);
    for (double &w : p.w) w = (rng() >> 11) * 0x1.0p-53;
    for (double &a : p.rms) a = (rng() >> 11) * 0x1.0p-53;
    save_checkpoint(path.string(), p);
    const PolicyParams q = load_checkpoint(path.string());
    CHECK(q.arch == p.arch);
    CHECK(q.w == p.w);
    CHECK(q.rms == p.rms);
    fs::remove(path);
}
