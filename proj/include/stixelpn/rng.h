#pragma once

#include <cmath>
#include <cstdint>

namespace stixelpn {

// splitmix64 generator with explicit distributions. The standard-library
// distributions are implementation-defined, so everything that feeds file
// outputs or checkpoints goes through this to keep runs reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive bounds
    int uniform_int(int lo, int hi) {
        const std::uint64_t n = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Box-Muller without the cached spare so the stream position is a pure
    // function of the call count.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586477 * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Independent stream for (seed, index) pairs, e.g. one per frame.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        Rng r(seed ^ (0xA0761D6478BD642Full + stream * 0xE7037ED1A0B428DBull));
        return r.next_u64();
    }

private:
    std::uint64_t state_;
};

}  // namespace stixelpn
