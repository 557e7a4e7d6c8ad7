#ifndef MMAE_MODEL_HPP
#define MMAE_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mmae/codec.hpp"
#include "mmae/errors.hpp"
#include "mmae/fuser.hpp"
#include "mmae/memory.hpp"
#include "mmae/pyramid.hpp"

namespace mmae {

// Everything that defines the network shape and addressing behaviour.
struct ModelConfig {
    int scales = 5;            // pyramid levels, K
    double downsample = 0.5;   // per-level resolution factor
    int base_height = 256;
    int base_width = 256;
    int channels = 3;
    int latent_dim = 1024;
    int base_channels = 32;    // first conv width; doubles per stride-2 stage
    int target_spatial = 8;    // encoder flatten grid side
    int memory_slots = 60;     // per scale
    double shrink_threshold = -1.0; // negative -> 1/memory_slots
    double sparsity_weight = 2e-4;  // entropy regularizer weight
    int gate_hidden = 32;      // fuser gate hidden width
    std::string dtype = "float32";

    double effective_shrink() const {
        return shrink_threshold >= 0.0 ? shrink_threshold : 1.0 / memory_slots;
    }

    PyramidConfig pyramid() const {
        PyramidConfig p;
        p.levels = scales;
        p.factor = downsample;
        p.base_height = base_height;
        p.base_width = base_width;
        return p;
    }

    void validate() const {
        pyramid().validate();
        if (base_height != base_width)
            throw ConfigError("model: base resolution must be square, got " +
                              std::to_string(base_height) + "x" + std::to_string(base_width));
        if (channels != 1 && channels != 3)
            throw ConfigError("model: channels must be 1 or 3, got " + std::to_string(channels));
        if (latent_dim < 1) throw ConfigError("model: latent_dim must be positive");
        if (base_channels < 1) throw ConfigError("model: base_channels must be positive");
        if (memory_slots < 1) throw ConfigError("model: memory_slots must be >= 1");
        const double lam = effective_shrink();
        if (!(lam >= 0.0 && lam < 1.0))
            throw ConfigError("model: shrink threshold must lie in [0,1), got " +
                              std::to_string(lam));
        if (sparsity_weight < 0.0) throw ConfigError("model: sparsity_weight must be >= 0");
        if (dtype != "float32" && dtype != "float64")
            throw ConfigError("model: dtype must be float32 or float64, got " + dtype);
        // Each pyramid level must be reducible to the flatten grid.
        for (auto [h, w] : pyramid().level_sizes()) {
            if (h != w)
                throw ConfigError("model: pyramid level " + std::to_string(h) + "x" +
                                  std::to_string(w) + " is not square");
            EncoderSpec::deduce(h, channels, latent_dim, target_spatial, base_channels);
        }
    }
};

template <class S>
struct ForwardCache {
    std::vector<EncoderCache<S>> enc;
    std::vector<MemoryReadCache<S>> mem;
    FuseCache<S> fuse;
    DecoderCache<S> dec;
    std::vector<VecX<S>> latents;
};

template <class S>
struct ForwardResult {
    FeatureMap<S> reconstruction;
    std::vector<MemoryReadResult<S>> reads; // addressing diagnostics per scale
    VecX<S> attention;                      // fuser attention over scales
};

template <class S>
struct Model {
    ModelConfig cfg;
    std::vector<Encoder<S>> encoders;
    Decoder<S> decoder;
    std::vector<MemoryBank<S>> memories;
    Fuser<S> fuser;

    static Model build(const ModelConfig& cfg, std::uint64_t seed) {
        cfg.validate();
        Rng rng(seed);
        Model model;
        model.cfg = cfg;
        const auto sizes = cfg.pyramid().level_sizes();
        std::vector<int> in_dims;
        for (int i = 0; i < cfg.scales; ++i) {
            Encoder<S> enc;
            enc.spec = EncoderSpec::deduce(sizes[i].first, cfg.channels, cfg.latent_dim,
                                           cfg.target_spatial, cfg.base_channels);
            enc.build(i + 1, rng);
            model.encoders.push_back(std::move(enc));
            in_dims.push_back(cfg.latent_dim);
        }
        model.decoder.spec =
            DecoderSpec::mirror(model.encoders[0].spec, sizes[0].first, cfg.channels);
        model.decoder.build(rng);
        for (int i = 0; i < cfg.scales; ++i) {
            MemoryBank<S> bank;
            bank.build(i + 1, cfg.memory_slots, cfg.latent_dim, rng);
            model.memories.push_back(std::move(bank));
        }
        model.fuser.build(in_dims, cfg.latent_dim, cfg.gate_hidden, rng);
        return model;
    }

    std::vector<Param<S>*> params() {
        std::vector<Param<S>*> out;
        for (auto& e : encoders) e.collect(out);
        decoder.collect(out);
        for (auto& b : memories) b.collect(out);
        fuser.collect(out);
        return out;
    }

    // Pyramid -> per-scale encode -> memory read -> fuse -> decode.
    ForwardResult<S> forward(const Image& x, ForwardCache<S>* cache = nullptr) const {
        if (x.height != cfg.base_height || x.width != cfg.base_width ||
            x.channels != cfg.channels)
            throw InputError("forward: input " + std::to_string(x.height) + "x" +
                             std::to_string(x.width) + "x" + std::to_string(x.channels) +
                             " does not match model base " + std::to_string(cfg.base_height) +
                             "x" + std::to_string(cfg.base_width) + "x" +
                             std::to_string(cfg.channels));
        const ImagePyramid pyr = build_pyramid(x, cfg.pyramid());
        const S lambda = static_cast<S>(cfg.effective_shrink());

        ForwardCache<S> local;
        ForwardCache<S>& c = cache ? *cache : local;
        c.enc.resize(cfg.scales);
        c.mem.resize(cfg.scales);
        c.latents.resize(cfg.scales);

        ForwardResult<S> res;
        std::vector<VecX<S>> recalled(cfg.scales);
        for (int i = 0; i < cfg.scales; ++i) {
            c.latents[i] = encoders[i].forward(to_feature_map<S>(pyr.levels[i]), c.enc[i]);
            MemoryReadResult<S> read = read_memory<S>(c.latents[i], memories[i], lambda, &c.mem[i]);
            recalled[i] = read.recalled;
            res.reads.push_back(std::move(read));
        }
        FuseResult<S> fused = fuse(recalled, fuser, &c.fuse);
        res.attention = fused.attention;
        res.reconstruction = decoder.forward(fused.fused, c.dec);
        return res;
    }

    // g_recon: dL/d(reconstruction), g_entropy: dL/d(entropy_i), same for all
    // scales. Accumulates into every parameter's grad.
    void backward(const ForwardCache<S>& cache, const MatX<S>& g_recon, S g_entropy) {
        VecX<S> g_fused = decoder.backward(g_recon, cache.dec);
        std::vector<VecX<S>> g_recalled = fuse_backward(cache.fuse, g_fused, fuser);
        for (int i = 0; i < cfg.scales; ++i) {
            VecX<S> g_latent = memory_backward(cache.mem[i], g_recalled[i], g_entropy, memories[i]);
            encoders[i].backward(g_latent, cache.enc[i]);
        }
    }

    void zero_grad() {
        for (auto* p : params()) p->zero_grad();
    }
};

} // namespace mmae

#endif
