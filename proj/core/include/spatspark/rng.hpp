#pragma once

#include <array>
#include <cstdint>
#include <cstddef>

namespace spatspark {

// splitmix64: seed expander and hash mixer.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

inline std::uint64_t splitmix64_once(std::uint64_t x) { return SplitMix64(x).next(); }

// Deterministic combine of seed components (mask seeds, shuffle seeds).
inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64_once(splitmix64_once(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}
inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return hash_mix(hash_mix(a, b), c);
}

// xoshiro256**, seeded with splitmix64 per the reference recommendation.
struct Xoshiro256ss {
    std::array<std::uint64_t, 4> s;

    explicit Xoshiro256ss(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s) w = sm.next();
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // uniform in [0,1), 53-bit
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // unbiased uniform in [0, n), n > 0, via rejection
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t threshold = (0ULL - n) % n;
        std::uint64_t r;
        do {
            r = next();
        } while (r < threshold);
        return r % n;
    }

    // standard normal via Box-Muller (cosine branch only, keeps the stream simple)
    double normal();

    // zero-mean normal with stddev sigma, rejection-clipped to [-clip, clip]
    double truncated_normal(double sigma, double clip);
};

// 64-bit FNV-1a, used for container/checkpoint checksums and config fingerprints.
struct Fnv1a64 {
    static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;
    std::uint64_t h = kOffset;
    void update(const void* bytes, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(bytes);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= kPrime;
        }
    }
    std::uint64_t digest() const { return h; }
};

inline std::uint64_t fnv1a64(const void* bytes, std::size_t n) {
    Fnv1a64 f;
    f.update(bytes, n);
    return f.digest();
}

}  // namespace spatspark
