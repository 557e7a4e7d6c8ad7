#include "mmae/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "mmae/errors.hpp"

namespace mmae {

namespace {

constexpr char kMagic[8] = {'M', 'M', 'A', 'E', 'C', 'K', 'P', '1'};

void write_u64(std::ofstream& out, std::uint64_t v) {
    std::uint8_t buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::ifstream& in) {
    std::uint8_t buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<RawArray>& arrays) {
    nlohmann::json manifest = meta;
    nlohmann::json dir = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& a : arrays) {
        dir.push_back({{"name", a.name},
                       {"dtype", a.dtype},
                       {"shape", a.shape},
                       {"offset", offset},
                       {"byte_length", a.bytes.size()}});
        offset += a.bytes.size();
    }
    manifest["arrays"] = dir;
    const std::string mtext = manifest.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint: cannot open for writing: " + path);
    out.write(kMagic, 8);
    write_u64(out, mtext.size());
    out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    for (const auto& a : arrays)
        out.write(reinterpret_cast<const char*>(a.bytes.data()),
                  static_cast<std::streamsize>(a.bytes.size()));
    if (!out) throw IoError("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw IoError("checkpoint: bad magic in " + path);
    const std::uint64_t mlen = read_u64(in);
    std::string mtext(mlen, '\0');
    in.read(mtext.data(), static_cast<std::streamsize>(mlen));
    if (!in) throw IoError("checkpoint: truncated manifest in " + path);

    Checkpoint ck;
    ck.meta = nlohmann::json::parse(mtext);
    for (const auto& e : ck.meta.at("arrays")) {
        RawArray a;
        a.name = e.at("name").get<std::string>();
        a.dtype = e.at("dtype").get<std::string>();
        a.shape = e.at("shape").get<std::vector<long>>();
        a.bytes.resize(e.at("byte_length").get<std::size_t>());
        in.read(reinterpret_cast<char*>(a.bytes.data()),
                static_cast<std::streamsize>(a.bytes.size()));
        if (!in) throw IoError("checkpoint: truncated array data in " + path);
        ck.arrays.push_back(std::move(a));
    }
    return ck;
}

nlohmann::json load_checkpoint_meta(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw IoError("checkpoint: bad magic in " + path);
    const std::uint64_t mlen = read_u64(in);
    std::string mtext(mlen, '\0');
    in.read(mtext.data(), static_cast<std::streamsize>(mlen));
    if (!in) throw IoError("checkpoint: truncated manifest in " + path);
    return nlohmann::json::parse(mtext);
}

template <class S>
void import_params(Model<S>& model, const std::vector<RawArray>& arrays) {
    std::map<std::string, const RawArray*> by_name;
    for (const auto& a : arrays) by_name[a.name] = &a;
    for (auto* p : model.params()) {
        auto it = by_name.find(p->name);
        if (it == by_name.end())
            throw IoError("checkpoint: missing array " + p->name);
        const RawArray& a = *it->second;
        if (a.dtype != dtype_tag<S>())
            throw IoError("checkpoint: array " + p->name + " has dtype " + a.dtype +
                          ", expected " + dtype_tag<S>());
        if (a.shape != p->shape)
            throw IoError("checkpoint: array " + p->name + " has unexpected shape");
        if (a.bytes.size() != static_cast<std::size_t>(p->value.size()) * sizeof(S))
            throw IoError("checkpoint: array " + p->name + " has unexpected byte length");
        const S* src = reinterpret_cast<const S*>(a.bytes.data());
        for (long r = 0; r < p->value.rows(); ++r)
            for (long c = 0; c < p->value.cols(); ++c) p->value(r, c) = *src++;
    }
}

nlohmann::json model_config_to_json(const ModelConfig& cfg) {
    return nlohmann::json{{"scales", cfg.scales},
                          {"downsample", cfg.downsample},
                          {"base_resolution", {cfg.base_height, cfg.base_width}},
                          {"channels", cfg.channels},
                          {"latent_dim", cfg.latent_dim},
                          {"base_channels", cfg.base_channels},
                          {"target_spatial", cfg.target_spatial},
                          {"memory_slots", cfg.memory_slots},
                          {"shrink_threshold",
                           cfg.shrink_threshold >= 0.0 ? nlohmann::json(cfg.shrink_threshold)
                                                       : nlohmann::json(nullptr)},
                          {"sparsity_weight", cfg.sparsity_weight},
                          {"gate_hidden", cfg.gate_hidden},
                          {"dtype", cfg.dtype}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.scales = j.at("scales").get<int>();
    cfg.downsample = j.at("downsample").get<double>();
    cfg.base_height = j.at("base_resolution").at(0).get<int>();
    cfg.base_width = j.at("base_resolution").at(1).get<int>();
    cfg.channels = j.at("channels").get<int>();
    cfg.latent_dim = j.at("latent_dim").get<int>();
    cfg.base_channels = j.at("base_channels").get<int>();
    cfg.target_spatial = j.at("target_spatial").get<int>();
    cfg.memory_slots = j.at("memory_slots").get<int>();
    cfg.shrink_threshold =
        j.at("shrink_threshold").is_null() ? -1.0 : j.at("shrink_threshold").get<double>();
    cfg.sparsity_weight = j.at("sparsity_weight").get<double>();
    cfg.gate_hidden = j.at("gate_hidden").get<int>();
    cfg.dtype = j.at("dtype").get<std::string>();
    return cfg;
}

template <class S>
void save_model(const std::string& path, Model<S>& model, const nlohmann::json& config_echo,
                int epoch, const nlohmann::json& loss_history) {
    nlohmann::json meta{{"format", "mmae-checkpoint"},
                        {"version", 1},
                        {"dtype", dtype_tag<S>()},
                        {"epoch", epoch},
                        {"model", model_config_to_json(model.cfg)},
                        {"config", config_echo},
                        {"loss_history", loss_history}};
    save_checkpoint(path, meta, export_params(model));
}

template <class S>
Model<S> load_model(const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.meta.at("dtype").get<std::string>() != dtype_tag<S>())
        throw IoError("checkpoint: dtype mismatch loading " + path);
    ModelConfig cfg = model_config_from_json(ck.meta.at("model"));
    Model<S> model = Model<S>::build(cfg, /*seed=*/0);
    import_params(model, ck.arrays);
    return model;
}

template void import_params<float>(Model<float>&, const std::vector<RawArray>&);
template void import_params<double>(Model<double>&, const std::vector<RawArray>&);
template void save_model<float>(const std::string&, Model<float>&, const nlohmann::json&, int,
                                const nlohmann::json&);
template void save_model<double>(const std::string&, Model<double>&, const nlohmann::json&, int,
                                 const nlohmann::json&);
template Model<float> load_model<float>(const std::string&);
template Model<double> load_model<double>(const std::string&);

} // namespace mmae
