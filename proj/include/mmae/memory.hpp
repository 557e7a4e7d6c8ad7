#ifndef MMAE_MEMORY_HPP
#define MMAE_MEMORY_HPP

#include <cmath>
#include <string>
#include <vector>

#include "mmae/errors.hpp"
#include "mmae/nn.hpp"

namespace mmae {

// Per-scale bank of prototype slots. Rows of `slots.value` are the slot
// vectors; they are ordinary trainable parameters.
template <class S>
struct MemoryBank {
    int scale_index = 0; // 1-based, matches checkpoint names memory.{i}.slots
    Param<S> slots;      // n x D

    int slot_count() const { return static_cast<int>(slots.value.rows()); }
    int dim() const { return static_cast<int>(slots.value.cols()); }

    void build(int scale_index_1based, int n, int latent_dim, Rng& rng) {
        scale_index = scale_index_1based;
        slots = make_param<S>("memory." + std::to_string(scale_index_1based) + ".slots",
                              {n, latent_dim});
        // Unit-norm random directions keep every slot away from zero norm.
        for (int j = 0; j < n; ++j) {
            VecX<S> v(latent_dim);
            for (int d = 0; d < latent_dim; ++d) v(d) = static_cast<S>(rng.normal());
            slots.value.row(j) = (v / v.norm()).transpose();
        }
    }

    void collect(std::vector<Param<S>*>& out) { out.push_back(&slots); }
};

// Addressing weights over one bank: nonnegative, sum to one.
template <class S>
struct AddressWeights {
    VecX<S> weights;
    std::vector<int> support; // indices with weight > 0
};

template <class S>
struct MemoryReadResult {
    VecX<S> recalled; // convex combination of slots
    AddressWeights<S> weights;      // post-shrinkage
    AddressWeights<S> soft_weights; // pre-shrinkage softmax
    S entropy = S(0);
    bool fallback = false; // every soft weight was <= lambda
};

// Cache for the backward pass.
template <class S>
struct MemoryReadCache {
    VecX<S> query;
    VecX<S> similarity; // cosine similarity per slot
    VecX<S> soft;       // softmax weights
    VecX<S> hard;       // renormalized survivors
    std::vector<int> support;
    S renorm_sum = S(0); // sum of surviving soft weights
    bool fallback = false;
    int fallback_index = 0;
};

template <class S>
S cosine_similarity(const VecX<S>& f, const VecX<S>& m) {
    const S nf = f.norm(), nm = m.norm();
    if (!(nf > S(0)) || !(nm > S(0)))
        throw NumericError("cosine similarity: zero-norm vector");
    return f.dot(m) / (nf * nm);
}

// Softmax over cosine similarities against every slot.
template <class S>
AddressWeights<S> soft_address(const VecX<S>& f, const MemoryBank<S>& bank) {
    const int n = bank.slot_count();
    VecX<S> sim(n);
    for (int j = 0; j < n; ++j) sim(j) = cosine_similarity<S>(f, bank.slots.value.row(j).transpose());
    VecX<S> w = (sim.array() - sim.maxCoeff()).exp();
    w /= w.sum();
    AddressWeights<S> out;
    out.weights = w;
    out.support.resize(n);
    for (int j = 0; j < n; ++j) out.support[j] = j;
    return out;
}

// Zero entries <= lambda, then L1-renormalize the survivors. If everything is
// shrunk away, fall back to a one-hot on the argmax (lowest index on ties).
template <class S>
AddressWeights<S> hard_shrink(const AddressWeights<S>& w, S lambda) {
    const int n = static_cast<int>(w.weights.size());
    AddressWeights<S> out;
    out.weights = VecX<S>::Zero(n);
    S sum = S(0);
    int zeroed = 0;
    for (int j = 0; j < n; ++j) {
        if (w.weights(j) > lambda) {
            out.weights(j) = w.weights(j);
            sum += w.weights(j);
        } else {
            ++zeroed;
        }
    }
    if (zeroed == 0) {
        out.weights = w.weights; // nothing shrunk, keep weights bit-for-bit
        for (int j = 0; j < n; ++j)
            if (out.weights(j) > S(0)) out.support.push_back(j);
        return out;
    }
    if (sum <= S(0)) {
        int best = 0;
        for (int j = 1; j < n; ++j)
            if (w.weights(j) > w.weights(best)) best = j;
        out.weights(best) = S(1);
        out.support = {best};
        return out;
    }
    out.weights /= sum;
    for (int j = 0; j < n; ++j)
        if (out.weights(j) > S(0)) out.support.push_back(j);
    return out;
}

// Full addressing: soft weights, hard shrinkage, convex slot combination and
// the entropy of the final weights (the sparsity regularizer term).
template <class S>
MemoryReadResult<S> read_memory(const VecX<S>& f, const MemoryBank<S>& bank, S lambda,
                                MemoryReadCache<S>* cache = nullptr) {
    if (f.size() != bank.dim())
        throw InputError("read_memory: query length " + std::to_string(f.size()) +
                         " does not match slot dim " + std::to_string(bank.dim()));
    MemoryReadResult<S> res;
    res.soft_weights = soft_address(f, bank);
    res.weights = hard_shrink(res.soft_weights, lambda);
    res.fallback = res.weights.support.size() == 1 && res.soft_weights.weights.maxCoeff() <= lambda;
    res.recalled = bank.slots.value.transpose() * res.weights.weights;
    res.entropy = S(0);
    for (int j : res.weights.support) {
        const S wj = res.weights.weights(j);
        res.entropy -= wj * std::log(wj);
    }
    if (cache) {
        cache->query = f;
        VecX<S> sim(bank.slot_count());
        for (int j = 0; j < bank.slot_count(); ++j)
            sim(j) = cosine_similarity<S>(f, bank.slots.value.row(j).transpose());
        cache->similarity = sim;
        cache->soft = res.soft_weights.weights;
        cache->hard = res.weights.weights;
        cache->support = res.weights.support;
        cache->fallback = res.fallback;
        cache->fallback_index = res.weights.support.empty() ? 0 : res.weights.support[0];
        S s = S(0);
        for (int j = 0; j < bank.slot_count(); ++j)
            if (res.soft_weights.weights(j) > lambda) s += res.soft_weights.weights(j);
        cache->renorm_sum = s;
    }
    return res;
}

// Backward through read_memory. g_recalled is dL/d(recalled latent), g_entropy
// is dL/d(entropy). Accumulates into bank.slots.grad; returns dL/d(query).
// In the all-shrunk fallback the output is a bare slot lookup, so only that
// slot receives gradient.
template <class S>
VecX<S> memory_backward(const MemoryReadCache<S>& cache, const VecX<S>& g_recalled, S g_entropy,
                        MemoryBank<S>& bank) {
    const int n = bank.slot_count();
    const int dim = bank.dim();

    if (cache.fallback) {
        bank.slots.grad.row(cache.fallback_index) += g_recalled.transpose();
        return VecX<S>::Zero(dim);
    }

    // dL/d(hard weights): through the combination and the entropy.
    VecX<S> g_hard = VecX<S>::Zero(n);
    for (int j : cache.support) {
        g_hard(j) = bank.slots.value.row(j).dot(g_recalled);
        g_hard(j) += g_entropy * (-(std::log(cache.hard(j)) + S(1)));
        bank.slots.grad.row(j) += cache.hard(j) * g_recalled.transpose();
    }

    // Renormalization: hard_j = soft_j / Z over survivors.
    VecX<S> g_soft = VecX<S>::Zero(n);
    S dot = S(0);
    for (int j : cache.support) dot += g_hard(j) * cache.hard(j);
    for (int j : cache.support) g_soft(j) = (g_hard(j) - dot) / cache.renorm_sum;

    // Softmax over similarities.
    const S avg = cache.soft.dot(g_soft);
    VecX<S> g_sim(n);
    for (int j = 0; j < n; ++j) g_sim(j) = cache.soft(j) * (g_soft(j) - avg);

    // Cosine similarity.
    VecX<S> g_query = VecX<S>::Zero(dim);
    const S qnorm = cache.query.norm();
    for (int j = 0; j < n; ++j) {
        if (g_sim(j) == S(0)) continue;
        const VecX<S> slot = bank.slots.value.row(j).transpose();
        const S mnorm = slot.norm();
        const S inv = S(1) / (qnorm * mnorm);
        g_query += g_sim(j) * (slot * inv - cache.similarity(j) * cache.query / (qnorm * qnorm));
        bank.slots.grad.row(j) +=
            (g_sim(j) * (cache.query * inv - cache.similarity(j) * slot / (mnorm * mnorm)))
                .transpose();
    }
    return g_query;
}

} // namespace mmae

#endif
