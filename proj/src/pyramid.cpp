#include "mmae/pyramid.hpp"

#include <cmath>
#include <string>

#include "mmae/errors.hpp"

namespace mmae {

std::vector<std::pair<int, int>> PyramidConfig::level_sizes() const {
    std::vector<std::pair<int, int>> sizes;
    sizes.reserve(levels);
    double f = 1.0;
    for (int i = 0; i < levels; ++i) {
        sizes.emplace_back(static_cast<int>(std::lround(base_height * f)),
                           static_cast<int>(std::lround(base_width * f)));
        f *= factor;
    }
    return sizes;
}

void PyramidConfig::validate() const {
    if (levels < 1) throw ConfigError("pyramid: levels must be >= 1, got " + std::to_string(levels));
    if (!(factor > 0.0 && factor < 1.0) && levels > 1)
        throw ConfigError("pyramid: downsample factor must lie in (0,1), got " +
                          std::to_string(factor));
    if (base_height < 4 || base_width < 4)
        throw ConfigError("pyramid: base resolution must be at least 4x4");
    const auto sizes = level_sizes();
    for (int i = 0; i < levels; ++i) {
        if (sizes[i].first < 4 || sizes[i].second < 4)
            throw ConfigError("pyramid: level " + std::to_string(i + 1) + " resolution " +
                              std::to_string(sizes[i].first) + "x" + std::to_string(sizes[i].second) +
                              " is below the 4x4 minimum");
        if (i > 0 && (sizes[i].first >= sizes[i - 1].first || sizes[i].second >= sizes[i - 1].second))
            throw ConfigError("pyramid: level sizes must be strictly decreasing");
    }
}

ImagePyramid build_pyramid(const Image& x, const PyramidConfig& cfg) {
    cfg.validate();
    if (x.height != cfg.base_height || x.width != cfg.base_width)
        throw ConfigError("pyramid: input resolution " + std::to_string(x.height) + "x" +
                          std::to_string(x.width) + " does not match configured base " +
                          std::to_string(cfg.base_height) + "x" + std::to_string(cfg.base_width));

    ImagePyramid pyr;
    pyr.levels.reserve(cfg.levels);
    pyr.levels.push_back(x);
    const auto sizes = cfg.level_sizes();
    for (int i = 1; i < cfg.levels; ++i) {
        pyr.levels.push_back(resize_area(x, sizes[i].first, sizes[i].second));
    }
    return pyr;
}

} // namespace mmae
