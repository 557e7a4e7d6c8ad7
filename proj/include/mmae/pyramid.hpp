#ifndef MMAE_PYRAMID_HPP
#define MMAE_PYRAMID_HPP

#include <utility>
#include <vector>

#include "mmae/image.hpp"

namespace mmae {

// Multi-resolution schedule: level i (1-based) has resolution
// (round(H * factor^(i-1)), round(W * factor^(i-1))).
struct PyramidConfig {
    int levels = 1;          // number of scales
    double factor = 0.5;     // downsample factor in (0, 1)
    int base_height = 0;
    int base_width = 0;

    // Throws ConfigError if the schedule is unusable (non-decreasing levels,
    // any side below 4, or out-of-range parameters).
    void validate() const;

    std::vector<std::pair<int, int>> level_sizes() const;
};

struct ImagePyramid {
    std::vector<Image> levels; // levels[0] is the input, bit for bit
};

ImagePyramid build_pyramid(const Image& x, const PyramidConfig& cfg);

} // namespace mmae

#endif
