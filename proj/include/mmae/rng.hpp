#ifndef MMAE_RNG_HPP
#define MMAE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mmae {

// Deterministic random stream. All draws are derived from raw mt19937_64
// output with fixed arithmetic, so sequences are reproducible across
// platforms and standard-library versions (std::*_distribution is not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t integer(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[integer(i)]);
        }
    }

    // Independent substream keyed by `stream`, e.g. one per image index.
    Rng fork(std::uint64_t stream) const {
        return Rng(mix(seed_ ^ mix(stream)));
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace mmae

#endif
