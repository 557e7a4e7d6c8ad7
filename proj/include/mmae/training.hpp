#ifndef MMAE_TRAINING_HPP
#define MMAE_TRAINING_HPP

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmae/checkpoint.hpp"
#include "mmae/errors.hpp"
#include "mmae/model.hpp"
#include "mmae/rng.hpp"

namespace mmae {

struct TrainConfig {
    int epochs = 2000;
    int batch_size = 64;
    double learning_rate = 1e-4;
    double weight_decay = 1e-5;
    std::uint64_t seed = 0;
    int checkpoint_every = 500; // epochs; 0 disables periodic checkpoints
    bool check_finite_every_step = false;

    void validate() const {
        if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
        if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
        if (checkpoint_every < 0) throw ConfigError("train: checkpoint_every must be >= 0");
    }
};

struct EpochStats {
    int epoch = 0;            // 1-based
    double recon_loss = 0.0;  // mean per-image summed squared error
    double sparsity_loss = 0.0; // alpha-weighted mean entropy sum
    double wall_seconds = 0.0;
};

// Adaptive-moment optimizer with L2 weight decay folded into the gradient.
template <class S>
struct Adam {
    double learning_rate = 1e-4;
    double weight_decay = 1e-5;
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
    long step_count = 0;
    std::vector<MatX<S>> m1, m2;

    void init(const std::vector<Param<S>*>& params) {
        m1.clear();
        m2.clear();
        for (auto* p : params) {
            m1.push_back(MatX<S>::Zero(p->value.rows(), p->value.cols()));
            m2.push_back(MatX<S>::Zero(p->value.rows(), p->value.cols()));
        }
        step_count = 0;
    }

    void step(const std::vector<Param<S>*>& params) {
        ++step_count;
        const S c1 = static_cast<S>(1.0 / (1.0 - std::pow(beta1, step_count)));
        const S c2 = static_cast<S>(1.0 / (1.0 - std::pow(beta2, step_count)));
        const S b1 = static_cast<S>(beta1), b2 = static_cast<S>(beta2);
        const S lr = static_cast<S>(learning_rate), wd = static_cast<S>(weight_decay);
        const S eps = static_cast<S>(epsilon);
        for (std::size_t i = 0; i < params.size(); ++i) {
            Param<S>& p = *params[i];
            MatX<S> g = p.grad + wd * p.value;
            m1[i] = b1 * m1[i] + (S(1) - b1) * g;
            m2[i] = b2 * m2[i] + (S(1) - b2) * g.cwiseProduct(g);
            p.value.array() -=
                lr * (c1 * m1[i].array()) / ((c2 * m2[i].array()).sqrt() + eps);
        }
    }
};

// Per-sample objective: summed squared reconstruction error plus the
// alpha-weighted entropy of the addressing weights at every scale.
template <class S>
double sample_loss(const Image& x, const ForwardResult<S>& fwd, double alpha) {
    const Eigen::MatrixXd recon = fwd.reconstruction.m.template cast<double>();
    const double sse = (x.chw - recon).squaredNorm();
    double entropy_sum = 0.0;
    for (const auto& read : fwd.reads) entropy_sum += static_cast<double>(read.entropy);
    return sse + alpha * entropy_sum;
}

template <class S>
struct TrainState {
    Adam<S> optimizer;
    std::vector<EpochStats> history;
    int epoch = 0;
};

namespace detail {

template <class S>
void check_parameters_finite(Model<S>& model, int epoch, int batch) {
    for (auto* p : model.params()) {
        if (!p->value.allFinite())
            throw NumericError("training: non-finite values in " + p->name + " after epoch " +
                               std::to_string(epoch) + " batch " + std::to_string(batch));
    }
    for (auto& bank : model.memories) {
        for (int j = 0; j < bank.slot_count(); ++j) {
            if (!(bank.slots.value.row(j).norm() > S(1e-8)))
                throw NumericError("training: memory slot " + std::to_string(j) + " of scale " +
                                   std::to_string(bank.scale_index) +
                                   " collapsed to zero norm at epoch " + std::to_string(epoch));
        }
    }
}

} // namespace detail

// Unsupervised training on normal images. Writes train_log.csv and periodic
// checkpoints into out_dir when it is non-empty. Deterministic for a fixed
// seed and config: init, shuffling and batch order all come from the seed.
template <class S>
TrainState<S> train(Model<S>& model, const std::vector<Image>& dataset, const TrainConfig& cfg,
                    const std::string& out_dir = "",
                    const nlohmann::json& config_echo = nlohmann::json()) {
    cfg.validate();
    if (dataset.empty()) throw ConfigError("train: dataset is empty");
    for (const auto& img : dataset) {
        if (img.height != model.cfg.base_height || img.width != model.cfg.base_width ||
            img.channels != model.cfg.channels)
            throw InputError("train: dataset image does not match the configured base resolution");
    }

    TrainState<S> state;
    state.optimizer.learning_rate = cfg.learning_rate;
    state.optimizer.weight_decay = cfg.weight_decay;
    auto params = model.params();
    state.optimizer.init(params);

    const double alpha = model.cfg.sparsity_weight;
    Rng order_rng = Rng(cfg.seed).fork(1);
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::FILE* log = nullptr;
    if (!out_dir.empty()) {
        log = std::fopen((out_dir + "/train_log.csv").c_str(), "w");
        if (!log) throw IoError("train: cannot write train_log.csv in " + out_dir);
        std::fprintf(log, "epoch,recon_loss,sparsity_loss,wall_seconds\n");
    }

    const auto t0 = std::chrono::steady_clock::now();
    ForwardCache<S> cache;

    nlohmann::json history_json = nlohmann::json::array();
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        double epoch_sse = 0.0, epoch_entropy = 0.0;

        const int n = static_cast<int>(dataset.size());
        int batch_index = 0;
        for (int start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            const int b = std::min(cfg.batch_size, n - start);
            model.zero_grad();
            double batch_loss = 0.0;
            for (int k = 0; k < b; ++k) {
                const Image& x = dataset[order[start + k]];
                ForwardResult<S> fwd = model.forward(x, &cache);

                const MatX<S> xs = x.chw.template cast<S>();
                MatX<S> g_recon = (S(2) / S(b)) * (fwd.reconstruction.m - xs);
                model.backward(cache, g_recon, static_cast<S>(alpha / b));

                const double sse = (x.chw - fwd.reconstruction.m.template cast<double>()).squaredNorm();
                double ent = 0.0;
                for (const auto& read : fwd.reads) ent += static_cast<double>(read.entropy);
                epoch_sse += sse;
                epoch_entropy += ent;
                batch_loss += (sse + alpha * ent) / b;
            }
            if (!std::isfinite(batch_loss))
                throw NumericError("training: non-finite loss at epoch " + std::to_string(epoch) +
                                   " batch " + std::to_string(batch_index));
            state.optimizer.step(params);
            if (cfg.check_finite_every_step)
                detail::check_parameters_finite(model, epoch, batch_index);
        }
        detail::check_parameters_finite(model, epoch, -1);

        EpochStats stats;
        stats.epoch = epoch;
        stats.recon_loss = epoch_sse / dataset.size();
        stats.sparsity_loss = alpha * epoch_entropy / dataset.size();
        stats.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        state.history.push_back(stats);
        state.epoch = epoch;
        history_json.push_back({stats.epoch, stats.recon_loss, stats.sparsity_loss});

        if (log) {
            std::fprintf(log, "%d,%.17g,%.17g,%.3f\n", stats.epoch, stats.recon_loss,
                         stats.sparsity_loss, stats.wall_seconds);
            std::fflush(log);
        }
        if (!out_dir.empty() && cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 &&
            epoch != cfg.epochs) {
            save_model(out_dir + "/ckpt_epoch_" + std::to_string(epoch) + ".mmae", model,
                       config_echo, epoch, history_json);
        }
    }

    if (log) std::fclose(log);
    if (!out_dir.empty()) {
        save_model(out_dir + "/model.mmae", model, config_echo, state.epoch, history_json);
    }
    return state;
}

} // namespace mmae

#endif
