#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace motic {

// SplitMix64: a 64-bit Weyl-sequence counter pushed through an avalanche
// finalizer (Steele/Lea/Flood, "Fast Splittable Pseudorandom Number
// Generators"). One generator per purpose, derived from the root seed via
// Rng::stream, so the draw order of one consumer never shifts another.
// std:: distributions are implementation-defined and are not used anywhere;
// all sampling below is spelled out so runs are bit-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Independent stream for (root seed, stream id).
    static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
        Rng r(finalize(seed + 0x9E3779B97F4A7C15ULL * (stream_id + 1)));
        return r;
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return finalize(state_);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Box-Muller; the second deviate of each pair is cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - next_unit();  // (0, 1]
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = kTwoPi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    std::vector<double> gaussian_vec(int n) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (auto& x : v) x = gaussian();
        return v;
    }

    // Uniform in [0, n) via 128-bit multiply-shift.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Fisher-Yates, descending.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
        }
    }

private:
    static std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static constexpr double kTwoPi = 6.283185307179586476925286766559;

    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stream ids used across the project. Keeping them in one table makes the
// derivation auditable and stops accidental reuse.
namespace rng_streams {
constexpr std::uint64_t kData = 1;        // synthetic benchmark sampling
constexpr std::uint64_t kInit = 2;        // encoder weight init
constexpr std::uint64_t kAugment = 3;     // query/key view noise
constexpr std::uint64_t kShuffle = 4;     // per-epoch batch order
constexpr std::uint64_t kTransforms = 5;  // virtual-class orthogonal maps
constexpr std::uint64_t kClassifier = 6;  // classifier weight init
constexpr std::uint64_t kGradcheck = 7;   // gradient-check instances
constexpr std::uint64_t kDemo = 8;        // Monte-Carlo demos
}  // namespace rng_streams

}  // namespace motic
