#ifndef MMAE_CHECKPOINT_HPP
#define MMAE_CHECKPOINT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmae/model.hpp"

namespace mmae {

// Type-erased named array: raw little-endian bytes plus logical shape.
struct RawArray {
    std::string name;
    std::string dtype; // "f32" | "f64"
    std::vector<long> shape;
    std::vector<std::uint8_t> bytes;
};

// Single-file container: magic, manifest (JSON: config echo, epoch, loss
// history, array directory), then the raw array data. Arrays are row-major,
// little-endian.
void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<RawArray>& arrays);

struct Checkpoint {
    nlohmann::json meta;
    std::vector<RawArray> arrays;
};

Checkpoint load_checkpoint(const std::string& path);

template <class S>
constexpr const char* dtype_tag() {
    return sizeof(S) == 4 ? "f32" : "f64";
}

template <class S>
std::vector<RawArray> export_params(Model<S>& model) {
    std::vector<RawArray> arrays;
    for (auto* p : model.params()) {
        RawArray a;
        a.name = p->name;
        a.dtype = dtype_tag<S>();
        a.shape = p->shape;
        a.bytes.resize(static_cast<std::size_t>(p->value.size()) * sizeof(S));
        S* out = reinterpret_cast<S*>(a.bytes.data());
        for (long r = 0; r < p->value.rows(); ++r)
            for (long c = 0; c < p->value.cols(); ++c) *out++ = p->value(r, c);
        arrays.push_back(std::move(a));
    }
    return arrays;
}

template <class S>
void import_params(Model<S>& model, const std::vector<RawArray>& arrays);

// Convenience wrappers tying a model to its container file.
template <class S>
void save_model(const std::string& path, Model<S>& model, const nlohmann::json& config_echo,
                int epoch, const nlohmann::json& loss_history);

template <class S>
Model<S> load_model(const std::string& path);

// Reads just the manifest (for dtype dispatch and config recovery).
nlohmann::json load_checkpoint_meta(const std::string& path);

ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json model_config_to_json(const ModelConfig& cfg);

} // namespace mmae

#endif
