#ifndef MMAE_SCORING_HPP
#define MMAE_SCORING_HPP

#include <Eigen/Dense>
#include <string>

#include "mmae/image.hpp"
#include "mmae/model.hpp"

namespace mmae {

// Per-pixel anomaly scores, row-major (p = y * width + x). Scores are the
// channel-summed squared reconstruction error, so they are nonnegative.
struct ScoreMap {
    int height = 0;
    int width = 0;
    Eigen::VectorXd v;
    std::string id;

    ScoreMap() = default;
    ScoreMap(int h, int w) : height(h), width(w), v(Eigen::VectorXd::Zero(static_cast<long>(h) * w)) {}

    double at(int y, int x) const { return v(static_cast<long>(y) * width + x); }
    double& at(int y, int x) { return v(static_cast<long>(y) * width + x); }
};

// score(p) = sum over channels of (x(p,c) - x_hat(p,c))^2.
ScoreMap anomaly_map_from_reconstruction(const Image& x, const Image& reconstruction);

template <class S>
ScoreMap anomaly_map(const Image& x, const Model<S>& model) {
    ForwardResult<S> fwd = model.forward(x);
    return anomaly_map_from_reconstruction(x, to_image(fwd.reconstruction));
}

// mask(p) = 1 iff score(p) > threshold (strict).
Mask binarize(const ScoreMap& map, double threshold);

// 3x3 box smoothing, only applied when explicitly enabled in config.
ScoreMap smooth_map(const ScoreMap& map);

// Dense float32 little-endian grid with a small header (magic, H, W).
void write_anomaly_map(const std::string& path, const ScoreMap& map);
ScoreMap read_anomaly_map(const std::string& path);

// 8-bit heatmap raster for visual inspection, normalized to the map maximum.
void write_heatmap(const std::string& path, const ScoreMap& map);

} // namespace mmae

#endif
