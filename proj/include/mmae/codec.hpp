#ifndef MMAE_CODEC_HPP
#define MMAE_CODEC_HPP

#include <string>
#include <vector>

#include "mmae/errors.hpp"
#include "mmae/image.hpp"
#include "mmae/nn.hpp"

namespace mmae {

// Per-scale encoder: stride-2 3x3 convolutions (LReLU 0.2 after each) down to
// a target_spatial x target_spatial grid, then flatten and a linear head to
// the latent dimension. Inputs must be square.
struct EncoderSpec {
    int input_side = 0;
    int in_channels = 0;
    int latent_dim = 0;
    int target_spatial = 8;
    std::vector<int> channel_schedule; // output channels per stride-2 stage

    int stages() const { return static_cast<int>(channel_schedule.size()); }
    int flat_size() const {
        const int last = channel_schedule.empty() ? in_channels : channel_schedule.back();
        return target_spatial * target_spatial * last;
    }
    void validate() const;

    // Stage count deduced from input_side/target_spatial; channel counts
    // double per stage starting at base_channels.
    static EncoderSpec deduce(int input_side, int in_channels, int latent_dim, int target_spatial,
                              int base_channels);
};

// Decoder: linear seed to seed_spatial^2 x seed_channels, then 2x pixel-shuffle
// stages (3x3 conv stride 1), LReLU between stages, sigmoid squashing at the
// output so every pixel lands in (0, 1).
struct DecoderSpec {
    int output_side = 0;
    int out_channels = 0;
    int latent_dim = 0;
    int seed_spatial = 8;
    int seed_channels = 0;
    std::vector<int> stage_out_channels; // per pixel-shuffle stage; last == out_channels

    int stages() const { return static_cast<int>(stage_out_channels.size()); }
    void validate() const;

    // Mirrors an encoder schedule: seed from its last channel count, upsample
    // back through the reversed schedule to out_channels.
    static DecoderSpec mirror(const EncoderSpec& enc, int output_side, int out_channels);
};

template <class S>
struct EncoderCache {
    std::vector<Conv2dCache<S>> conv;
    std::vector<FeatureMap<S>> pre_act; // conv outputs before LReLU
    VecX<S> flat;
};

template <class S>
struct Encoder {
    EncoderSpec spec;
    std::vector<Param<S>> conv_w, conv_b;
    Param<S> head_w, head_b;

    void build(int scale_index, Rng& rng);
    VecX<S> forward(const FeatureMap<S>& x, EncoderCache<S>& cache) const;
    // Accumulates parameter gradients. Input gradients are not produced: the
    // encoder input is data.
    void backward(const VecX<S>& g_latent, const EncoderCache<S>& cache);
    void collect(std::vector<Param<S>*>& out);
};

template <class S>
struct DecoderCache {
    VecX<S> latent;
    VecX<S> seed_pre; // seed linear output before LReLU
    FeatureMap<S> seed_map;
    std::vector<Conv2dCache<S>> conv;
    std::vector<FeatureMap<S>> conv_out;    // conv outputs (pre shuffle)
    std::vector<FeatureMap<S>> shuffled;    // post shuffle, pre activation
    FeatureMap<S> output;                   // post sigmoid
};

template <class S>
struct Decoder {
    DecoderSpec spec;
    Param<S> seed_w, seed_b;
    std::vector<Param<S>> conv_w, conv_b;

    void build(Rng& rng);
    FeatureMap<S> forward(const VecX<S>& latent, DecoderCache<S>& cache) const;
    // Returns the latent gradient; accumulates parameter gradients.
    VecX<S> backward(const MatX<S>& g_out, const DecoderCache<S>& cache);
    void collect(std::vector<Param<S>*>& out);
};

// Spec-surface wrappers with input validation.
template <class S>
VecX<S> encode(const Image& x, const Encoder<S>& enc);
template <class S>
Image decode(const VecX<S>& latent, const Decoder<S>& dec);

template <class S>
FeatureMap<S> to_feature_map(const Image& img) {
    FeatureMap<S> f(img.channels, img.height, img.width);
    f.m = img.chw.template cast<S>();
    return f;
}

template <class S>
Image to_image(const FeatureMap<S>& f) {
    Image img(f.channels, f.height, f.width);
    img.chw = f.m.template cast<double>();
    return img;
}

// ---------------------------------------------------------------------------
// implementation
// ---------------------------------------------------------------------------

inline void EncoderSpec::validate() const {
    if (input_side < target_spatial)
        throw ConfigError("encoder: input side " + std::to_string(input_side) +
                          " below target spatial " + std::to_string(target_spatial));
    int side = input_side;
    for (int s = 0; s < stages(); ++s) side /= 2;
    if (side != target_spatial || (input_side % (1 << stages())) != 0)
        throw ConfigError("encoder: input side " + std::to_string(input_side) +
                          " is not target_spatial * 2^stages");
    if (latent_dim < 1 || in_channels < 1) throw ConfigError("encoder: bad latent dim or channels");
}

inline EncoderSpec EncoderSpec::deduce(int input_side, int in_channels, int latent_dim,
                                       int target_spatial, int base_channels) {
    EncoderSpec spec;
    spec.input_side = input_side;
    spec.in_channels = in_channels;
    spec.latent_dim = latent_dim;
    spec.target_spatial = target_spatial;
    int side = input_side, ch = base_channels;
    while (side > target_spatial) {
        if (side % 2 != 0)
            throw ConfigError("encoder: input side " + std::to_string(input_side) +
                              " cannot be halved down to target spatial " +
                              std::to_string(target_spatial));
        spec.channel_schedule.push_back(ch);
        side /= 2;
        ch *= 2;
    }
    spec.validate();
    return spec;
}

inline void DecoderSpec::validate() const {
    int side = seed_spatial;
    for (int s = 0; s < stages(); ++s) side *= 2;
    if (side != output_side)
        throw ConfigError("decoder: seed " + std::to_string(seed_spatial) + " with " +
                          std::to_string(stages()) + " stages does not reach output side " +
                          std::to_string(output_side));
    if (!stage_out_channels.empty() && stage_out_channels.back() != out_channels)
        throw ConfigError("decoder: last stage must emit the output channel count");
    if (stage_out_channels.empty() && seed_channels != out_channels)
        throw ConfigError("decoder: stage-free decoder must seed the output channels");
}

inline DecoderSpec DecoderSpec::mirror(const EncoderSpec& enc, int output_side, int out_channels) {
    DecoderSpec spec;
    spec.output_side = output_side;
    spec.out_channels = out_channels;
    spec.latent_dim = enc.latent_dim;
    spec.seed_spatial = enc.target_spatial;
    spec.seed_channels = enc.channel_schedule.empty() ? enc.in_channels : enc.channel_schedule.back();
    for (int s = enc.stages() - 2; s >= 0; --s) spec.stage_out_channels.push_back(enc.channel_schedule[s]);
    if (enc.stages() > 0) spec.stage_out_channels.push_back(out_channels);
    spec.validate();
    return spec;
}

template <class S>
void Encoder<S>::build(int scale_index, Rng& rng) {
    spec.validate();
    const std::string prefix = "encoder." + std::to_string(scale_index) + ".";
    conv_w.clear();
    conv_b.clear();
    int in_ch = spec.in_channels;
    for (int s = 0; s < spec.stages(); ++s) {
        const int out_ch = spec.channel_schedule[s];
        conv_w.push_back(make_param<S>(prefix + "conv" + std::to_string(s + 1) + ".weight",
                                       {out_ch, in_ch, 3, 3}));
        conv_b.push_back(
            make_param<S>(prefix + "conv" + std::to_string(s + 1) + ".bias", {out_ch}));
        init_uniform_fan_in(conv_w.back(), static_cast<long>(in_ch) * 9, rng);
        in_ch = out_ch;
    }
    head_w = make_param<S>(prefix + "head.weight", {spec.latent_dim, spec.flat_size()});
    head_b = make_param<S>(prefix + "head.bias", {spec.latent_dim});
    init_uniform_fan_in(head_w, spec.flat_size(), rng);
}

template <class S>
VecX<S> Encoder<S>::forward(const FeatureMap<S>& x, EncoderCache<S>& cache) const {
    cache.conv.resize(spec.stages());
    cache.pre_act.resize(spec.stages());
    FeatureMap<S> a = x;
    for (int s = 0; s < spec.stages(); ++s) {
        a = conv2d_forward(a, conv_w[s], conv_b[s], /*stride=*/2, cache.conv[s]);
        cache.pre_act[s] = a;
        leaky_relu_inplace(a.m);
    }
    cache.flat = flatten(a);
    return linear_forward(cache.flat, head_w, head_b);
}

template <class S>
void Encoder<S>::backward(const VecX<S>& g_latent, const EncoderCache<S>& cache) {
    VecX<S> g_flat = linear_backward(g_latent, cache.flat, head_w, head_b);
    if (spec.stages() == 0) return;
    const int last = spec.stages() - 1;
    FeatureMap<S> g = unflatten(g_flat, spec.channel_schedule[last], spec.target_spatial,
                                spec.target_spatial);
    for (int s = last; s >= 0; --s) {
        leaky_relu_backward_inplace(cache.pre_act[s].m, g.m);
        FeatureMap<S> gx;
        conv2d_backward(g.m, cache.conv[s], /*stride=*/2, conv_w[s], conv_b[s],
                        s > 0 ? &gx : nullptr);
        if (s > 0) g = std::move(gx);
    }
}

template <class S>
void Encoder<S>::collect(std::vector<Param<S>*>& out) {
    for (auto& p : conv_w) out.push_back(&p);
    for (auto& p : conv_b) out.push_back(&p);
    out.push_back(&head_w);
    out.push_back(&head_b);
}

template <class S>
void Decoder<S>::build(Rng& rng) {
    spec.validate();
    const long seed_flat = static_cast<long>(spec.seed_channels) * spec.seed_spatial * spec.seed_spatial;
    seed_w = make_param<S>("decoder.seed.weight", {seed_flat, spec.latent_dim});
    seed_b = make_param<S>("decoder.seed.bias", {seed_flat});
    init_uniform_fan_in(seed_w, spec.latent_dim, rng);
    conv_w.clear();
    conv_b.clear();
    int in_ch = spec.seed_channels;
    for (int s = 0; s < spec.stages(); ++s) {
        const int out_ch = spec.stage_out_channels[s] * 4; // pixel shuffle folds 4 into space
        conv_w.push_back(make_param<S>("decoder.up" + std::to_string(s + 1) + ".weight",
                                       {out_ch, in_ch, 3, 3}));
        conv_b.push_back(make_param<S>("decoder.up" + std::to_string(s + 1) + ".bias", {out_ch}));
        init_uniform_fan_in(conv_w.back(), static_cast<long>(in_ch) * 9, rng);
        in_ch = spec.stage_out_channels[s];
    }
}

template <class S>
FeatureMap<S> Decoder<S>::forward(const VecX<S>& latent, DecoderCache<S>& cache) const {
    cache.latent = latent;
    cache.seed_pre = linear_forward(latent, seed_w, seed_b);
    VecX<S> seed_act = cache.seed_pre;
    leaky_relu_inplace(seed_act);
    cache.seed_map = unflatten(seed_act, spec.seed_channels, spec.seed_spatial, spec.seed_spatial);

    cache.conv.resize(spec.stages());
    cache.conv_out.resize(spec.stages());
    cache.shuffled.resize(spec.stages());
    FeatureMap<S> a = cache.seed_map;
    for (int s = 0; s < spec.stages(); ++s) {
        FeatureMap<S> c = conv2d_forward(a, conv_w[s], conv_b[s], /*stride=*/1, cache.conv[s]);
        cache.conv_out[s] = c;
        FeatureMap<S> up = pixel_shuffle_forward(c);
        cache.shuffled[s] = up;
        if (s + 1 < spec.stages()) {
            leaky_relu_inplace(up.m);
        } else {
            sigmoid_inplace(up.m);
        }
        a = std::move(up);
    }
    if (spec.stages() == 0) {
        // Degenerate square-latent decoder: sigmoid directly on the seed map.
        a = cache.seed_map;
        sigmoid_inplace(a.m);
    }
    cache.output = a;
    return a;
}

template <class S>
VecX<S> Decoder<S>::backward(const MatX<S>& g_out, const DecoderCache<S>& cache) {
    FeatureMap<S> g;
    g.m = g_out;
    if (spec.stages() == 0) {
        g.channels = spec.seed_channels;
        g.height = g.width = spec.seed_spatial;
        sigmoid_backward_inplace(cache.output.m, g.m);
    } else {
        g.channels = spec.out_channels;
        g.height = g.width = spec.output_side;
        for (int s = spec.stages() - 1; s >= 0; --s) {
            if (s + 1 < spec.stages()) {
                leaky_relu_backward_inplace(cache.shuffled[s].m, g.m);
            } else {
                sigmoid_backward_inplace(cache.output.m, g.m);
            }
            FeatureMap<S> g_conv = pixel_shuffle_backward(g, cache.conv_out[s].channels,
                                                          cache.conv_out[s].height,
                                                          cache.conv_out[s].width);
            FeatureMap<S> gx;
            conv2d_backward(g_conv.m, cache.conv[s], /*stride=*/1, conv_w[s], conv_b[s], &gx);
            g = std::move(gx);
        }
    }
    // g now matches the seed map; undo LReLU on the seed linear output.
    VecX<S> g_seed = flatten(g);
    leaky_relu_backward_inplace(cache.seed_pre, g_seed);
    return linear_backward(g_seed, cache.latent, seed_w, seed_b);
}

template <class S>
void Decoder<S>::collect(std::vector<Param<S>*>& out) {
    out.push_back(&seed_w);
    out.push_back(&seed_b);
    for (auto& p : conv_w) out.push_back(&p);
    for (auto& p : conv_b) out.push_back(&p);
}

template <class S>
VecX<S> encode(const Image& x, const Encoder<S>& enc) {
    if (x.height != enc.spec.input_side || x.width != enc.spec.input_side ||
        x.channels != enc.spec.in_channels)
        throw InputError("encode: input " + std::to_string(x.height) + "x" +
                         std::to_string(x.width) + "x" + std::to_string(x.channels) +
                         " does not match encoder spec " + std::to_string(enc.spec.input_side) +
                         "^2 x " + std::to_string(enc.spec.in_channels));
    EncoderCache<S> cache;
    return enc.forward(to_feature_map<S>(x), cache);
}

template <class S>
Image decode(const VecX<S>& latent, const Decoder<S>& dec) {
    if (latent.size() != dec.spec.latent_dim)
        throw InputError("decode: latent length " + std::to_string(latent.size()) +
                         " does not match decoder latent dim " +
                         std::to_string(dec.spec.latent_dim));
    DecoderCache<S> cache;
    return to_image(dec.forward(latent, cache));
}

} // namespace mmae

#endif
