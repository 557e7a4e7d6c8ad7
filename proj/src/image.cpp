#include "mmae/image.hpp"

#include <algorithm>
#include <cmath>

namespace mmae {

namespace {

// Resample one axis by box filtering: output cell i covers the source span
// [i*scale, (i+1)*scale). Weights are the overlap lengths, normalized so a
// constant signal is reproduced exactly.
void resample_axis(const Eigen::MatrixXd& src, Eigen::MatrixXd& dst, int n_in, int n_out,
                   bool along_rows_of_pixels, int other, int channels, int src_width,
                   int dst_width) {
    const double scale = static_cast<double>(n_in) / n_out;
    for (int i = 0; i < n_out; ++i) {
        const double lo = i * scale;
        const double hi = (i + 1) * scale;
        const int first = static_cast<int>(std::floor(lo));
        const int last = std::min(n_in - 1, static_cast<int>(std::ceil(hi)) - 1);
        for (int o = 0; o < other; ++o) {
            for (int c = 0; c < channels; ++c) {
                double acc = 0.0, wsum = 0.0;
                for (int j = first; j <= last; ++j) {
                    const double w = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
                    if (w <= 0.0) continue;
                    const long p = along_rows_of_pixels ? static_cast<long>(o) * src_width + j
                                                        : static_cast<long>(j) * src_width + o;
                    acc += w * src(c, p);
                    wsum += w;
                }
                const long q = along_rows_of_pixels ? static_cast<long>(o) * dst_width + i
                                                    : static_cast<long>(i) * dst_width + o;
                dst(c, q) = acc / wsum;
            }
        }
    }
}

} // namespace

Image resize_area(const Image& src, int out_h, int out_w) {
    if (out_h == src.height && out_w == src.width) return src;

    // Horizontal pass, then vertical. Box filtering is separable.
    Image mid(src.channels, src.height, out_w);
    resample_axis(src.chw, mid.chw, src.width, out_w, /*along_rows_of_pixels=*/true, src.height,
                  src.channels, src.width, out_w);

    Image out(src.channels, out_h, out_w);
    resample_axis(mid.chw, out.chw, src.height, out_h, /*along_rows_of_pixels=*/false, out_w,
                  src.channels, out_w, out_w);
    return out;
}

Mask resize_nearest(const Mask& src, int out_h, int out_w) {
    Mask out(out_h, out_w);
    const double sy = static_cast<double>(src.height) / out_h;
    const double sx = static_cast<double>(src.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        int yy = std::min(src.height - 1, static_cast<int>((y + 0.5) * sy));
        for (int x = 0; x < out_w; ++x) {
            int xx = std::min(src.width - 1, static_cast<int>((x + 0.5) * sx));
            out.at(y, x) = src.at(yy, xx) >= 1 ? 1 : 0;
        }
    }
    return out;
}

} // namespace mmae
