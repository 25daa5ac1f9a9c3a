#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <vector>

#include "sokorl/engine.hpp"
#include "sokorl/errors.hpp"

namespace sokorl {

struct ConvSpec {
    int out_channels;
    int kernel;
    int stride;
    bool operator==(const ConvSpec &) const = default;
};

struct ArchDescriptor {
    int in_channels = 0;
    int in_h = 0;
    int in_w = 0;
    std::vector<ConvSpec> convs;
    int fc_units = 0;
    int n_actions = kNumActions;
    // > 0 adds a hashed state table whose row (n_actions logits + 1 value)
    // is added to the head outputs; with no trunk (fc_units == 0) the heads
    // are read from the table alone.
    int state_buckets = 0;
    bool operator==(const ArchDescriptor &) const = default;
};

// Two small 3x3 convolutions and a 256-unit layer for symbolic grids.
inline ArchDescriptor desk_arch(int in_channels, int h, int w) {
    return {in_channels, h, w, {{32, 3, 1}, {64, 3, 1}}, 256};
}

// Pure state-table policy/value over symbolic one-hot grids: each exact game
// state hashes to a table row holding its logits and value. Distinct states
// share no parameters, so updates never interfere across states; this is the
// architecture that trains reliably at this batch size (see README).
inline ArchDescriptor table_arch(int in_channels, int h, int w, int buckets = 1 << 16) {
    ArchDescriptor a{in_channels, h, w, {}, 0};
    a.state_buckets = buckets;
    return a;
}

// The larger pixel-input stack (8x8/4, 4x4/2, 3x3/1; 32/64/64; FC 512).
inline ArchDescriptor pixel_arch(int h, int w) {
    return {3, h, w, {{32, 8, 4}, {64, 4, 2}, {64, 3, 1}}, 512};
}

struct LayerShape {
    int ch, h, w;
    int size() const { return ch * h * w; }
};

struct NetLayout {
    std::vector<LayerShape> shapes;    // input followed by each conv output
    std::vector<size_t> conv_w, conv_b;
    size_t fc_w = 0, fc_b = 0, pi_w = 0, pi_b = 0, v_w = 0, v_b = 0;
    size_t tab = 0;    // state table: state_buckets rows of (n_actions + 1)
    int flat = 0;
    size_t total = 0;
};

inline NetLayout make_layout(const ArchDescriptor &arch) {
    NetLayout lay;
    lay.shapes.push_back({arch.in_channels, arch.in_h, arch.in_w});
    size_t off = 0;
    for (const ConvSpec &cs : arch.convs) {
        const LayerShape &in = lay.shapes.back();
        const int oh = (in.h - cs.kernel) / cs.stride + 1;
        const int ow = (in.w - cs.kernel) / cs.stride + 1;
        if (oh < 1 || ow < 1 || (in.h - cs.kernel) % cs.stride != 0 ||
            (in.w - cs.kernel) % cs.stride != 0)
            throw ContractViolation("conv layer does not fit the input grid");
        lay.conv_w.push_back(off);
        off += static_cast<size_t>(cs.out_channels) * in.ch * cs.kernel * cs.kernel;
        lay.conv_b.push_back(off);
        off += cs.out_channels;
        lay.shapes.push_back({cs.out_channels, oh, ow});
    }
    lay.flat = lay.shapes.back().size();
    if (arch.fc_units > 0) {
        lay.fc_w = off;
        off += static_cast<size_t>(arch.fc_units) * lay.flat;
        lay.fc_b = off;
        off += arch.fc_units;
        lay.pi_w = off;
        off += static_cast<size_t>(arch.n_actions) * arch.fc_units;
        lay.pi_b = off;
        off += arch.n_actions;
        lay.v_w = off;
        off += arch.fc_units;
        lay.v_b = off;
        off += 1;
    } else {
        if (!arch.convs.empty())
            throw ContractViolation("conv layers require a fully connected layer");
        if (arch.state_buckets <= 0)
            throw ContractViolation("architecture needs a trunk or a state table");
        lay.fc_w = lay.fc_b = lay.pi_w = lay.pi_b = lay.v_w = lay.v_b = off;
    }
    if (arch.state_buckets > 0) {
        lay.tab = off;
        off += static_cast<size_t>(arch.state_buckets) * (arch.n_actions + 1);
    }
    lay.total = off;
    return lay;
}

// Table row index for an observation: FNV-1a over the indices of its active
// (> 0.5) entries. Symbolic observations are one-hot per cell, so the active
// index set identifies the exact game state.
inline size_t state_bucket(const ArchDescriptor &arch, const std::vector<double> &input) {
    uint64_t h = 14695981039346656037ull;
    for (size_t i = 0; i < input.size(); ++i) {
        if (input[i] <= 0.5) continue;
        uint64_t x = i;
        for (int b = 0; b < 8; ++b) {
            h ^= x & 0xff;
            h *= 1099511628211ull;
            x >>= 8;
        }
    }
    return static_cast<size_t>(h % static_cast<uint64_t>(arch.state_buckets));
}

// Network weights plus RMSprop accumulators; flat storage, layout derived
// from the (fixed) architecture descriptor.
struct PolicyParams {
    ArchDescriptor arch;
    NetLayout layout;
    std::vector<double> w;
    std::vector<double> rms;
};

namespace detail {

inline double draw_normal(std::mt19937_64 &rng) {
    // Box-Muller on raw 53-bit uniforms; identical across standard libraries.
    const double u1 = ((rng() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Row-orthogonalized Gaussian matrix (rows <= cols), scaled by gain.
inline void orthogonal_init(double *m, int rows, int cols, double gain, std::mt19937_64 &rng) {
    for (int i = 0; i < rows * cols; ++i) m[i] = draw_normal(rng);
    if (rows <= cols) {
        for (int i = 0; i < rows; ++i) {
            double *ri = m + static_cast<size_t>(i) * cols;
            for (int j = 0; j < i; ++j) {
                const double *rj = m + static_cast<size_t>(j) * cols;
                double dot = 0;
                for (int k = 0; k < cols; ++k) dot += ri[k] * rj[k];
                for (int k = 0; k < cols; ++k) ri[k] -= dot * rj[k];
            }
            double norm = 0;
            for (int k = 0; k < cols; ++k) norm += ri[k] * ri[k];
            norm = std::sqrt(std::max(norm, 1e-12));
            for (int k = 0; k < cols; ++k) ri[k] /= norm;
        }
        for (int i = 0; i < rows * cols; ++i) m[i] *= gain;
    } else {
        const double scale = gain / std::sqrt(static_cast<double>(cols));
        for (int i = 0; i < rows * cols; ++i) m[i] *= scale;
    }
}

}    // namespace detail

// Orthogonal-style hidden layers (gain sqrt(2) for ReLU), near-zero heads so
// the initial policy is close to uniform. The state table starts at exactly
// zero: uniform policy and zero value for every state.
inline PolicyParams init_params(const ArchDescriptor &arch, uint64_t seed) {
    PolicyParams p;
    p.arch = arch;
    p.layout = make_layout(arch);
    p.w.assign(p.layout.total, 0.0);
    p.rms.assign(p.layout.total, 0.0);
    std::mt19937_64 rng(seed ^ 0xda3e39cb94b95bdbull);
    const double relu_gain = std::sqrt(2.0);
    for (size_t li = 0; li < arch.convs.size(); ++li) {
        const ConvSpec &cs = arch.convs[li];
        const LayerShape &in = p.layout.shapes[li];
        detail::orthogonal_init(p.w.data() + p.layout.conv_w[li], cs.out_channels,
                                in.ch * cs.kernel * cs.kernel, relu_gain, rng);
    }
    if (arch.fc_units > 0) {
        detail::orthogonal_init(p.w.data() + p.layout.fc_w, arch.fc_units, p.layout.flat, relu_gain,
                                rng);
        for (int i = 0; i < arch.n_actions * arch.fc_units; ++i)
            p.w[p.layout.pi_w + i] = 0.01 * detail::draw_normal(rng);
        for (int i = 0; i < arch.fc_units; ++i)
            p.w[p.layout.v_w + i] = 0.01 * detail::draw_normal(rng);
    }
    return p;
}

// Post-ReLU activations (and the state-table row) kept for the backward pass.
struct ForwardCache {
    std::vector<std::vector<double>> acts;    // input, conv outputs..., fc output
    size_t bucket = 0;
};

inline void forward(const PolicyParams &p, const std::vector<double> &input, double *logits,
                    double *value, ForwardCache *cache = nullptr) {
    const NetLayout &lay = p.layout;
    if (input.size() != static_cast<size_t>(lay.shapes[0].size()))
        throw ContractViolation("observation shape does not match the architecture");
    size_t bucket = 0;
    if (p.arch.state_buckets > 0) bucket = state_bucket(p.arch, input);
    if (cache) {
        cache->acts.clear();
        cache->acts.push_back(input);
        cache->bucket = bucket;
    }
    if (p.arch.fc_units == 0) {
        const double *row = p.w.data() + lay.tab + bucket * (p.arch.n_actions + 1);
        for (int a = 0; a < p.arch.n_actions; ++a) logits[a] = row[a];
        *value = row[p.arch.n_actions];
        return;
    }
    std::vector<double> cur = input;
    std::vector<double> next;
    for (size_t li = 0; li < p.arch.convs.size(); ++li) {
        const ConvSpec &cs = p.arch.convs[li];
        const LayerShape &in = lay.shapes[li];
        const LayerShape &out = lay.shapes[li + 1];
        next.assign(static_cast<size_t>(out.size()), 0.0);
        const double *W = p.w.data() + lay.conv_w[li];
        const double *b = p.w.data() + lay.conv_b[li];
        const int ksq = cs.kernel * cs.kernel;
        for (int oc = 0; oc < out.ch; ++oc) {
            const double *Woc = W + static_cast<size_t>(oc) * in.ch * ksq;
            for (int oy = 0; oy < out.h; ++oy) {
                for (int ox = 0; ox < out.w; ++ox) {
                    double acc = b[oc];
                    const int iy0 = oy * cs.stride, ix0 = ox * cs.stride;
                    for (int ic = 0; ic < in.ch; ++ic) {
                        const double *plane = cur.data() + static_cast<size_t>(ic) * in.h * in.w;
                        const double *Wic = Woc + static_cast<size_t>(ic) * ksq;
                        for (int ky = 0; ky < cs.kernel; ++ky) {
                            const double *row = plane + static_cast<size_t>(iy0 + ky) * in.w + ix0;
                            const double *Wrow = Wic + static_cast<size_t>(ky) * cs.kernel;
                            for (int kx = 0; kx < cs.kernel; ++kx) acc += Wrow[kx] * row[kx];
                        }
                    }
                    next[(static_cast<size_t>(oc) * out.h + oy) * out.w + ox] = acc > 0 ? acc : 0.0;
                }
            }
        }
        cur.swap(next);
        if (cache) cache->acts.push_back(cur);
    }
    // FC + ReLU
    std::vector<double> fc(p.arch.fc_units);
    {
        const double *W = p.w.data() + lay.fc_w;
        const double *b = p.w.data() + lay.fc_b;
        for (int u = 0; u < p.arch.fc_units; ++u) {
            double acc = b[u];
            const double *Wu = W + static_cast<size_t>(u) * lay.flat;
            for (int i = 0; i < lay.flat; ++i) acc += Wu[i] * cur[i];
            fc[u] = acc > 0 ? acc : 0.0;
        }
    }
    if (cache) cache->acts.push_back(fc);
    // Heads (linear)
    for (int a = 0; a < p.arch.n_actions; ++a) {
        double acc = p.w[lay.pi_b + a];
        const double *Wa = p.w.data() + lay.pi_w + static_cast<size_t>(a) * p.arch.fc_units;
        for (int u = 0; u < p.arch.fc_units; ++u) acc += Wa[u] * fc[u];
        logits[a] = acc;
    }
    {
        double acc = p.w[lay.v_b];
        const double *Wv = p.w.data() + lay.v_w;
        for (int u = 0; u < p.arch.fc_units; ++u) acc += Wv[u] * fc[u];
        *value = acc;
    }
    if (p.arch.state_buckets > 0) {
        const double *row = p.w.data() + lay.tab + bucket * (p.arch.n_actions + 1);
        for (int a = 0; a < p.arch.n_actions; ++a) logits[a] += row[a];
        *value += row[p.arch.n_actions];
    }
}

inline std::pair<std::vector<double>, double> forward(const PolicyParams &p, const Observation &obs) {
    std::vector<double> logits(p.arch.n_actions);
    double value = 0;
    forward(p, obs.data, logits.data(), &value, nullptr);
    return {std::move(logits), value};
}

// Accumulates d(loss)/d(params) into grad given upstream gradients on the
// heads. cache must come from forward() on the same params and input.
inline void backward(const PolicyParams &p, const ForwardCache &cache, const double *dlogits,
                     double dvalue, std::vector<double> &grad) {
    const NetLayout &lay = p.layout;
    if (p.arch.state_buckets > 0) {
        double *g = grad.data() + lay.tab + cache.bucket * (p.arch.n_actions + 1);
        for (int a = 0; a < p.arch.n_actions; ++a) g[a] += dlogits[a];
        g[p.arch.n_actions] += dvalue;
    }
    if (p.arch.fc_units == 0) return;
    const size_t n_convs = p.arch.convs.size();
    const std::vector<double> &fc = cache.acts[n_convs + 1];
    const std::vector<double> &flat_in = cache.acts[n_convs];

    // Heads
    std::vector<double> dfc(p.arch.fc_units, 0.0);
    for (int a = 0; a < p.arch.n_actions; ++a) {
        const double g = dlogits[a];
        if (g == 0.0) continue;
        double *gW = grad.data() + lay.pi_w + static_cast<size_t>(a) * p.arch.fc_units;
        const double *Wa = p.w.data() + lay.pi_w + static_cast<size_t>(a) * p.arch.fc_units;
        for (int u = 0; u < p.arch.fc_units; ++u) {
            gW[u] += g * fc[u];
            dfc[u] += g * Wa[u];
        }
        grad[lay.pi_b + a] += g;
    }
    if (dvalue != 0.0) {
        double *gW = grad.data() + lay.v_w;
        const double *Wv = p.w.data() + lay.v_w;
        for (int u = 0; u < p.arch.fc_units; ++u) {
            gW[u] += dvalue * fc[u];
            dfc[u] += dvalue * Wv[u];
        }
        grad[lay.v_b] += dvalue;
    }
    // FC (ReLU mask via post-activation)
    std::vector<double> dflat(lay.flat, 0.0);
    {
        const double *W = p.w.data() + lay.fc_w;
        for (int u = 0; u < p.arch.fc_units; ++u) {
            if (fc[u] <= 0.0 || dfc[u] == 0.0) continue;
            const double g = dfc[u];
            double *gW = grad.data() + lay.fc_w + static_cast<size_t>(u) * lay.flat;
            const double *Wu = W + static_cast<size_t>(u) * lay.flat;
            for (int i = 0; i < lay.flat; ++i) {
                gW[i] += g * flat_in[i];
                dflat[i] += g * Wu[i];
            }
            grad[lay.fc_b + u] += g;
        }
    }
    // Convs, last to first
    std::vector<double> dout = std::move(dflat);
    for (int li = static_cast<int>(n_convs) - 1; li >= 0; --li) {
        const ConvSpec &cs = p.arch.convs[li];
        const LayerShape &in = lay.shapes[li];
        const LayerShape &out = lay.shapes[li + 1];
        const std::vector<double> &out_act = cache.acts[li + 1];
        const std::vector<double> &in_act = cache.acts[li];
        std::vector<double> din(in.size(), 0.0);
        const double *W = p.w.data() + lay.conv_w[li];
        double *gW = grad.data() + lay.conv_w[li];
        double *gb = grad.data() + lay.conv_b[li];
        const int ksq = cs.kernel * cs.kernel;
        for (int oc = 0; oc < out.ch; ++oc) {
            const double *Woc = W + static_cast<size_t>(oc) * in.ch * ksq;
            double *gWoc = gW + static_cast<size_t>(oc) * in.ch * ksq;
            for (int oy = 0; oy < out.h; ++oy) {
                for (int ox = 0; ox < out.w; ++ox) {
                    const size_t oi = (static_cast<size_t>(oc) * out.h + oy) * out.w + ox;
                    if (out_act[oi] <= 0.0) continue;    // ReLU gate
                    const double g = dout[oi];
                    if (g == 0.0) continue;
                    gb[oc] += g;
                    const int iy0 = oy * cs.stride, ix0 = ox * cs.stride;
                    for (int ic = 0; ic < in.ch; ++ic) {
                        const double *plane = in_act.data() + static_cast<size_t>(ic) * in.h * in.w;
                        double *dplane = din.data() + static_cast<size_t>(ic) * in.h * in.w;
                        const double *Wic = Woc + static_cast<size_t>(ic) * ksq;
                        double *gWic = gWoc + static_cast<size_t>(ic) * ksq;
                        for (int ky = 0; ky < cs.kernel; ++ky) {
                            const size_t ri = static_cast<size_t>(iy0 + ky) * in.w + ix0;
                            for (int kx = 0; kx < cs.kernel; ++kx) {
                                gWic[ky * cs.kernel + kx] += g * plane[ri + kx];
                                dplane[ri + kx] += g * Wic[ky * cs.kernel + kx];
                            }
                        }
                    }
                }
            }
        }
        dout = std::move(din);
    }
}

// ---- checkpoint io ----------------------------------------------------

inline constexpr uint64_t kCheckpointMagic = 0x534f4b4f524c3031ull;    // "SOKORL01"

inline void save_checkpoint(const std::string &path, const PolicyParams &p) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write checkpoint: " + path);
    auto put_u64 = [&](uint64_t v) { out.write(reinterpret_cast<const char *>(&v), 8); };
    auto put_i32 = [&](int32_t v) { out.write(reinterpret_cast<const char *>(&v), 4); };
    put_u64(kCheckpointMagic);
    put_i32(1);    // version
    put_i32(p.arch.in_channels);
    put_i32(p.arch.in_h);
    put_i32(p.arch.in_w);
    put_i32(static_cast<int32_t>(p.arch.convs.size()));
    for (const ConvSpec &cs : p.arch.convs) {
        put_i32(cs.out_channels);
        put_i32(cs.kernel);
        put_i32(cs.stride);
    }
    put_i32(p.arch.fc_units);
    put_i32(p.arch.n_actions);
    put_i32(p.arch.state_buckets);
    put_u64(p.w.size());
    out.write(reinterpret_cast<const char *>(p.w.data()), static_cast<std::streamsize>(p.w.size() * 8));
    put_u64(p.rms.size());
    out.write(reinterpret_cast<const char *>(p.rms.data()),
              static_cast<std::streamsize>(p.rms.size() * 8));
    if (!out) throw ValidationError("checkpoint write failed: " + path);
}

inline PolicyParams load_checkpoint(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint: " + path);
    auto get_u64 = [&]() {
        uint64_t v = 0;
        in.read(reinterpret_cast<char *>(&v), 8);
        return v;
    };
    auto get_i32 = [&]() {
        int32_t v = 0;
        in.read(reinterpret_cast<char *>(&v), 4);
        return v;
    };
    if (get_u64() != kCheckpointMagic) throw ValidationError("not a checkpoint file: " + path);
    if (get_i32() != 1) throw ValidationError("unsupported checkpoint version: " + path);
    PolicyParams p;
    p.arch.in_channels = get_i32();
    p.arch.in_h = get_i32();
    p.arch.in_w = get_i32();
    const int n_convs = get_i32();
    for (int i = 0; i < n_convs; ++i) {
        ConvSpec cs{};
        cs.out_channels = get_i32();
        cs.kernel = get_i32();
        cs.stride = get_i32();
        p.arch.convs.push_back(cs);
    }
    p.arch.fc_units = get_i32();
    p.arch.n_actions = get_i32();
    p.arch.state_buckets = get_i32();
    p.layout = make_layout(p.arch);
    p.w.resize(get_u64());
    in.read(reinterpret_cast<char *>(p.w.data()), static_cast<std::streamsize>(p.w.size() * 8));
    p.rms.resize(get_u64());
    in.read(reinterpret_cast<char *>(p.rms.data()), static_cast<std::streamsize>(p.rms.size() * 8));
    if (!in || p.w.size() != p.layout.total || p.rms.size() != p.layout.total)
        throw ValidationError("corrupt checkpoint: " + path);
    return p;
}

}    // namespace sokorl
