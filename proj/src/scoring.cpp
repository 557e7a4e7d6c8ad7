#include "mmae/scoring.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "mmae/errors.hpp"

namespace mmae {

ScoreMap anomaly_map_from_reconstruction(const Image& x, const Image& reconstruction) {
    if (!x.same_shape(reconstruction))
        throw InputError("anomaly map: reconstruction shape does not match input");
    ScoreMap map(x.height, x.width);
    const Eigen::MatrixXd diff = x.chw - reconstruction.chw;
    map.v = diff.array().square().colwise().sum().transpose();
    return map;
}

Mask binarize(const ScoreMap& map, double threshold) {
    Mask mask(map.height, map.width);
    for (long p = 0; p < map.v.size(); ++p) mask.v[p] = map.v(p) > threshold ? 1 : 0;
    return mask;
}

ScoreMap smooth_map(const ScoreMap& map) {
    ScoreMap out(map.height, map.width);
    out.id = map.id;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            double acc = 0.0;
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= map.height || xx < 0 || xx >= map.width) continue;
                    acc += map.at(yy, xx);
                    ++n;
                }
            }
            out.at(y, x) = acc / n;
        }
    }
    return out;
}

namespace {
constexpr char kMapMagic[4] = {'A', 'M', 'A', 'P'};

void write_u32(std::ofstream& out, std::uint32_t v) {
    std::uint8_t buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
    std::uint8_t buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}
} // namespace

void write_anomaly_map(const std::string& path, const ScoreMap& map) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("anomaly map: cannot write " + path);
    out.write(kMapMagic, 4);
    write_u32(out, static_cast<std::uint32_t>(map.height));
    write_u32(out, static_cast<std::uint32_t>(map.width));
    std::vector<float> buf(map.v.size());
    for (long p = 0; p < map.v.size(); ++p) buf[p] = static_cast<float>(map.v(p));
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("anomaly map: write failed: " + path);
}

ScoreMap read_anomaly_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("anomaly map: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMapMagic, 4) != 0)
        throw IoError("anomaly map: bad magic in " + path);
    const int h = static_cast<int>(read_u32(in));
    const int w = static_cast<int>(read_u32(in));
    if (!in || h <= 0 || w <= 0) throw IoError("anomaly map: bad header in " + path);
    ScoreMap map(h, w);
    std::vector<float> buf(static_cast<std::size_t>(h) * w);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw IoError("anomaly map: truncated data in " + path);
    for (long p = 0; p < map.v.size(); ++p) map.v(p) = buf[p];
    return map;
}

void write_heatmap(const std::string& path, const ScoreMap& map) {
    const double peak = map.v.size() > 0 ? map.v.maxCoeff() : 0.0;
    cv::Mat gray(map.height, map.width, CV_8UC1);
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const double s = peak > 0.0 ? map.at(y, x) / peak : 0.0;
            gray.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(std::lround(255.0 * s));
        }
    }
    cv::Mat color;
    cv::applyColorMap(gray, color, cv::COLORMAP_JET);
    if (!cv::imwrite(path, color)) throw IoError("heatmap: cannot write " + path);
}

} // namespace mmae
