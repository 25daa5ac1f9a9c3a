#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "sokorl/net.hpp"

namespace sokorl {

// Table-2 defaults plus the two recorded extras (clipping, eval greediness
// lives in the harness).
struct A2CHyper {
    double learning_rate = 7e-4;
    double gamma = 0.99;
    double entropy_coef = 0.1;
    double value_loss_coef = 0.5;
    double rmsprop_eps = 1e-5;
    double rmsprop_alpha = 0.99;
    int rollout_len = 5;
    int n_envs = 30;
    double grad_clip = 0.5;    // global norm; 0 disables
};

struct StepRecord {
    Observation obs;
    int action = 0;
    double reward = 0.0;    // shaped when shaping is on
    double value = 0.0;     // V(s_t) at collection time
    bool terminal = false;
    bool truncated = false;
    double truncated_bootstrap = 0.0;    // V(s') when truncated mid-rollout
};

struct EnvRollout {
    std::vector<StepRecord> steps;
    // V(s_tail); only meaningful when the last step is neither terminal nor
    // truncated.
    double tail_bootstrap = 0.0;
};

struct RolloutBatch {
    std::vector<EnvRollout> envs;
};

// Truncated n-step returns: R_t = r_t + gamma * R_{t+1}, with R after a
// solved step 0, after a step-cap truncation V(s') and at a live tail
// V(s_tail).
inline std::vector<std::vector<double>> n_step_returns(const RolloutBatch &batch, double gamma) {
    std::vector<std::vector<double>> out;
    out.reserve(batch.envs.size());
    for (const EnvRollout &env : batch.envs) {
        std::vector<double> r(env.steps.size(), 0.0);
        double running = env.tail_bootstrap;
        for (int t = static_cast<int>(env.steps.size()) - 1; t >= 0; --t) {
            const StepRecord &s = env.steps[t];
            if (s.terminal)
                running = s.reward;
            else if (s.truncated)
                running = s.reward + gamma * s.truncated_bootstrap;
            else
                running = s.reward + gamma * running;
            r[t] = running;
        }
        out.push_back(std::move(r));
    }
    return out;
}

inline void softmax(const double *logits, int n, double *probs) {
    double mx = logits[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        probs[i] = std::exp(logits[i] - mx);
        sum += probs[i];
    }
    for (int i = 0; i < n; ++i) probs[i] /= sum;
}

inline int sample_categorical(const double *probs, int n, std::mt19937_64 &rng) {
    const double u = (rng() >> 11) * 0x1.0p-53;
    double acc = 0;
    for (int i = 0; i < n; ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return n - 1;
}

inline int argmax_fixed_order(const double *v, int n) {
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

struct LossResult {
    double loss = 0, policy_loss = 0, value_loss = 0, entropy = 0;
    std::vector<double> grad;
};

// loss = policy + c_v * value - c_H * entropy over all transitions in the
// batch, advantages treated as constants in the policy term.
inline LossResult a2c_loss(const PolicyParams &params, const RolloutBatch &batch,
                           const A2CHyper &hyper) {
    size_t n_samples = 0;
    for (const auto &env : batch.envs) n_samples += env.steps.size();
    if (n_samples == 0) throw ContractViolation("a2c_loss on an empty batch");

    const auto returns = n_step_returns(batch, hyper.gamma);
    const int na = params.arch.n_actions;
    LossResult res;
    res.grad.assign(params.layout.total, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n_samples);

    std::vector<double> logits(na), probs(na), dlogits(na);
    ForwardCache cache;
    for (size_t e = 0; e < batch.envs.size(); ++e) {
        for (size_t t = 0; t < batch.envs[e].steps.size(); ++t) {
            const StepRecord &s = batch.envs[e].steps[t];
            double value = 0;
            forward(params, s.obs.data, logits.data(), &value, &cache);
            softmax(logits.data(), na, probs.data());
            const double ret = returns[e][t];
            const double adv = ret - value;
            const double logp = std::log(std::max(probs[s.action], 1e-300));
            double ent = 0;
            for (int a = 0; a < na; ++a)
                if (probs[a] > 0) ent -= probs[a] * std::log(probs[a]);

            res.policy_loss += -logp * adv * inv_n;
            res.value_loss += adv * adv * inv_n;
            res.entropy += ent * inv_n;

            // d loss / d logits
            for (int a = 0; a < na; ++a) {
                const double d_policy = adv * (probs[a] - (a == s.action ? 1.0 : 0.0));
                const double d_entropy = probs[a] * (-std::log(std::max(probs[a], 1e-300)) - ent);
                dlogits[a] = inv_n * (d_policy - hyper.entropy_coef * d_entropy);
            }
            const double dvalue = inv_n * hyper.value_loss_coef * (-2.0 * adv);
            backward(params, cache, dlogits.data(), dvalue, res.grad);
        }
    }
    res.loss = res.policy_loss + hyper.value_loss_coef * res.value_loss - hyper.entropy_coef * res.entropy;
    if (!std::isfinite(res.loss)) {
        std::ostringstream msg;
        msg << "non-finite loss: policy=" << res.policy_loss << " value=" << res.value_loss
            << " entropy=" << res.entropy << " samples=" << n_samples;
        throw TrainingAbort(msg.str());
    }
    return res;
}

inline double global_norm(const std::vector<double> &g) {
    double sq = 0;
    for (double v : g) sq += v * v;
    return std::sqrt(sq);
}

// acc <- alpha*acc + (1-alpha)*g^2 ; w <- w - lr*g/(sqrt(acc)+eps), after an
// optional global-norm clip.
inline void rmsprop_step(PolicyParams &params, std::vector<double> gradients, const A2CHyper &hyper) {
    if (gradients.size() != params.w.size())
        throw ContractViolation("gradient size does not match parameters");
    if (hyper.grad_clip > 0) {
        const double norm = global_norm(gradients);
        if (norm > hyper.grad_clip) {
            const double scale = hyper.grad_clip / norm;
            for (double &g : gradients) g *= scale;
        }
    }
    for (size_t i = 0; i < params.w.size(); ++i) {
        const double g = gradients[i];
        params.rms[i] = hyper.rmsprop_alpha * params.rms[i] + (1.0 - hyper.rmsprop_alpha) * g * g;
        params.w[i] -= hyper.learning_rate * g / (std::sqrt(params.rms[i]) + hyper.rmsprop_eps);
    }
}

}    // namespace sokorl
