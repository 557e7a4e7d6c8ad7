#ifndef MMAE_IMAGE_HPP
#define MMAE_IMAGE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace mmae {

// Dense real raster. Channel-planar storage: `chw` has one row per channel,
// columns enumerate pixels row-major (p = y * width + x). Sample-domain
// images keep values in [0, 1]; intermediate buffers are unconstrained.
struct Image {
    int channels = 0;
    int height = 0;
    int width = 0;
    Eigen::MatrixXd chw; // channels x (height*width)

    Image() = default;
    Image(int c, int h, int w)
        : channels(c), height(h), width(w), chw(Eigen::MatrixXd::Zero(c, static_cast<long>(h) * w)) {}

    static Image constant(int c, int h, int w, double value) {
        Image img(c, h, w);
        img.chw.setConstant(value);
        return img;
    }

    double& at(int c, int y, int x) { return chw(c, static_cast<long>(y) * width + x); }
    double at(int c, int y, int x) const { return chw(c, static_cast<long>(y) * width + x); }

    long pixel_count() const { return static_cast<long>(height) * width; }

    bool same_shape(const Image& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

// Binary mask, row-major, values in {0, 1}.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> v;

    Mask() = default;
    Mask(int h, int w) : height(h), width(w), v(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t& at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }

    long count_positive() const {
        long n = 0;
        for (auto b : v) n += b != 0;
        return n;
    }
};

// Area-averaging (box) resample of every channel to (out_h, out_w).
// Exactly constant-preserving; output range stays within the input range.
Image resize_area(const Image& src, int out_h, int out_w);

// Nearest-neighbour resample, then re-binarize at 0.5.
Mask resize_nearest(const Mask& src, int out_h, int out_w);

} // namespace mmae

#endif
