#ifndef MMAE_FUSER_HPP
#define MMAE_FUSER_HPP

#include <string>
#include <vector>

#include "mmae/errors.hpp"
#include "mmae/nn.hpp"

namespace mmae {

// Multi-scale attention fuser: each recalled latent is linearly projected to
// the decoder dimension, scored by a small shared gate, and the projections
// are blended with softmax attention over scales.
template <class S>
struct Fuser {
    int scale_count = 0;
    int out_dim = 0;
    int gate_hidden = 32;
    std::vector<Param<S>> proj; // one (out_dim x in_dim) matrix per scale
    Param<S> gate_w1, gate_b1, gate_w2, gate_b2;

    void build(const std::vector<int>& in_dims, int out_dim_, int gate_hidden_, Rng& rng) {
        scale_count = static_cast<int>(in_dims.size());
        out_dim = out_dim_;
        gate_hidden = gate_hidden_;
        proj.clear();
        for (int i = 0; i < scale_count; ++i) {
            proj.push_back(
                make_param<S>("fuser.proj." + std::to_string(i + 1), {out_dim, in_dims[i]}));
            init_uniform_fan_in(proj.back(), in_dims[i], rng);
        }
        gate_w1 = make_param<S>("fuser.gate.w1", {gate_hidden, out_dim});
        gate_b1 = make_param<S>("fuser.gate.b1", {gate_hidden});
        gate_w2 = make_param<S>("fuser.gate.w2", {1, gate_hidden});
        gate_b2 = make_param<S>("fuser.gate.b2", {1});
        init_uniform_fan_in(gate_w1, out_dim, rng);
        init_uniform_fan_in(gate_w2, gate_hidden, rng);
    }

    void collect(std::vector<Param<S>*>& out) {
        for (auto& p : proj) out.push_back(&p);
        out.push_back(&gate_w1);
        out.push_back(&gate_b1);
        out.push_back(&gate_w2);
        out.push_back(&gate_b2);
    }
};

template <class S>
struct FuseCache {
    std::vector<VecX<S>> inputs;
    std::vector<VecX<S>> projected;
    std::vector<VecX<S>> gate_pre;    // W1 p + b1 before LReLU
    std::vector<VecX<S>> gate_hidden; // after LReLU
    VecX<S> scores;
    VecX<S> attention;
};

template <class S>
struct FuseResult {
    VecX<S> fused;
    VecX<S> attention; // strictly positive, sums to 1
};

template <class S>
FuseResult<S> fuse(const std::vector<VecX<S>>& latents, const Fuser<S>& fuser,
                   FuseCache<S>* cache = nullptr) {
    if (static_cast<int>(latents.size()) != fuser.scale_count)
        throw InputError("fuse: got " + std::to_string(latents.size()) + " latents, expected " +
                         std::to_string(fuser.scale_count));
    const int k = fuser.scale_count;
    std::vector<VecX<S>> projected(k), gate_pre(k), gate_hidden(k);
    VecX<S> scores(k);
    for (int i = 0; i < k; ++i) {
        if (latents[i].size() != fuser.proj[i].value.cols())
            throw InputError("fuse: latent " + std::to_string(i + 1) + " has length " +
                             std::to_string(latents[i].size()) + ", expected " +
                             std::to_string(fuser.proj[i].value.cols()));
        projected[i] = fuser.proj[i].value * latents[i];
        gate_pre[i] = fuser.gate_w1.value * projected[i] + fuser.gate_b1.value.col(0);
        gate_hidden[i] = gate_pre[i];
        leaky_relu_inplace(gate_hidden[i]);
        scores(i) = fuser.gate_w2.value.row(0).dot(gate_hidden[i]) + fuser.gate_b2.value(0, 0);
    }
    VecX<S> att = (scores.array() - scores.maxCoeff()).exp();
    att /= att.sum();

    FuseResult<S> res;
    res.fused = VecX<S>::Zero(fuser.out_dim);
    for (int i = 0; i < k; ++i) res.fused += att(i) * projected[i];
    res.attention = att;

    if (cache) {
        cache->inputs = latents;
        cache->projected = std::move(projected);
        cache->gate_pre = std::move(gate_pre);
        cache->gate_hidden = std::move(gate_hidden);
        cache->scores = scores;
        cache->attention = att;
    }
    return res;
}

// Backward through fuse. Accumulates parameter gradients and returns
// dL/d(latent_i) for every scale.
template <class S>
std::vector<VecX<S>> fuse_backward(const FuseCache<S>& cache, const VecX<S>& g_fused,
                                   Fuser<S>& fuser) {
    const int k = fuser.scale_count;
    // Gradient w.r.t. attention and projected latents from the blend.
    VecX<S> g_att(k);
    std::vector<VecX<S>> g_proj(k);
    for (int i = 0; i < k; ++i) {
        g_att(i) = cache.projected[i].dot(g_fused);
        g_proj[i] = cache.attention(i) * g_fused;
    }
    // Softmax over scores.
    const S avg = cache.attention.dot(g_att);
    VecX<S> g_score(k);
    for (int i = 0; i < k; ++i) g_score(i) = cache.attention(i) * (g_att(i) - avg);

    // Gate and projections.
    std::vector<VecX<S>> g_inputs(k);
    for (int i = 0; i < k; ++i) {
        fuser.gate_w2.grad.row(0) += g_score(i) * cache.gate_hidden[i].transpose();
        fuser.gate_b2.grad(0, 0) += g_score(i);
        VecX<S> g_hidden = g_score(i) * fuser.gate_w2.value.row(0).transpose();
        leaky_relu_backward_inplace(cache.gate_pre[i], g_hidden);
        fuser.gate_w1.grad.noalias() += g_hidden * cache.projected[i].transpose();
        fuser.gate_b1.grad.col(0) += g_hidden;
        g_proj[i] += fuser.gate_w1.value.transpose() * g_hidden;

        fuser.proj[i].grad.noalias() += g_proj[i] * cache.inputs[i].transpose();
        g_inputs[i] = fuser.proj[i].value.transpose() * g_proj[i];
    }
    return g_inputs;
}

} // namespace mmae

#endif
