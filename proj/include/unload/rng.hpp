#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace unload {

// splitmix64, used for seed derivation only.
inline uint64_t splitmix64_next(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive a named sub-seed from a base seed. Tags keep the env / net-init /
// exploration / replay streams independent of each other.
inline uint64_t derive_seed(uint64_t base, std::string_view tag) {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the tag
    for (char c : tag) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    uint64_t s = base ^ h;
    return splitmix64_next(s);
}

inline uint64_t derive_seed(uint64_t base, uint64_t counter) {
    uint64_t s = base ^ (0x9e3779b97f4a7c15ULL * (counter + 1));
    return splitmix64_next(s);
}

// Deterministic RNG with fixed helper arithmetic. std::* distributions are
// implementation-defined, so all draws go through these helpers to keep
// sequences stable across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // [0, 1), 53-bit resolution
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // [0, n), n > 0
    uint64_t uniform_int(uint64_t n) {
        // rejection sampling, unbiased
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t r;
        do {
            r = gen_();
        } while (r >= limit);
        return r % n;
    }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 gen_;
};

}  // namespace unload
