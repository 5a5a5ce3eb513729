#pragma once

// Deterministic random streams used everywhere randomness is needed.
//
// Stream derivation: a per-stream 64-bit state is obtained by chaining the
// splitmix64 avalanche finalizer over (master_seed, stream_id, shard).  Draws
// are the splitmix64 sequence from that state.  Gaussian variates come from
// Box-Muller on 53-bit uniforms in (0,1], which samples the exact normal
// distribution (no polynomial approximation of the inverse CDF involved).
// Results are identical across platforms for a given key.

#include <cmath>
#include <cstdint>

namespace deckit {

inline std::uint64_t avalanche64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_state(std::uint64_t master_seed, std::uint64_t stream_id,
                                  std::uint64_t shard = 0) {
    std::uint64_t s = avalanche64(master_seed);
    s = avalanche64(s ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1)));
    s = avalanche64(s ^ (0xc2b2ae3d27d4eb4fULL * (shard + 1)));
    return s;
}

// FNV-1a, used to give each named check its own stream_id space.
inline std::uint64_t fnv1a64(const char* s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (; *s; ++s) h = (h ^ static_cast<unsigned char>(*s)) * 0x100000001b3ULL;
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t state) : state_(state) {}
    Rng(std::uint64_t master_seed, std::uint64_t stream_id, std::uint64_t shard = 0)
        : state_(stream_state(master_seed, stream_id, shard)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0,1]: 53-bit mantissa, never returns 0, so log() is safe.
    double next_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double next_rademacher() { return (next_u64() >> 63) ? -1.0 : 1.0; }

    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_unit();
        double u2 = next_unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Index uniform on [0, bound) by rejection; exact, no modulo bias.
    std::uint64_t next_index(std::uint64_t bound) {
        if (bound <= 1) return 0;
        std::uint64_t limit = ~0ULL - (~0ULL % bound + 1) % bound;
        for (;;) {
            std::uint64_t v = next_u64();
            if (v <= limit) return v % bound;
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace deckit
