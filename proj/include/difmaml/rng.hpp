#pragma once

#include <cmath>
#include <cstdint>

namespace difmaml {

// splitmix64 finalizer; used for seed expansion and substream derivation.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Hierarchical seed material. Substreams are derived from the parent seed and
// a key, never from an evolving generator state, so the draw count of one
// stream cannot shift another.
struct SeedKey {
    std::uint64_t v = 0;

    SeedKey child(std::uint64_t key) const {
        return SeedKey{mix64(v ^ (0xD1B54A32D192ED03ULL * (key + 1)))};
    }
};

// xoshiro256++ stream seeded via splitmix64. Uniform and normal draws are
// implemented here (not via <random> distributions) so that sampled values
// are identical across platforms and standard-library versions.
class RngStream {
public:
    RngStream() : RngStream(SeedKey{0}) {}

    explicit RngStream(SeedKey seed) {
        std::uint64_t x = seed.v;
        for (auto& s : state_) {
            x += 0x9E3779B97F4A7C15ULL;
            s = mix64(x);
        }
        has_spare_ = false;
        spare_ = 0.0;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1); 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal, Box-Muller; the spare is cached in the stream state.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
    double spare_;
    bool has_spare_;
};

}  // namespace difmaml
