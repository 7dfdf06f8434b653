#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "i2c/errors.hpp"

namespace i2c {

// Deterministic random stream. All randomness in the project flows through
// this class so that results are reproducible bit-for-bit from a seed.
// Distributions are hand-rolled on top of the raw 64-bit stream because the
// std:: distribution objects are not pinned across standard library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed != 0 ? seed : 0x9e3779b97f4a7c15ull) {}

    // Derives an independent stream from a seed and a list of salts, e.g.
    // (global seed, epoch, image index). splitmix64 mixing.
    static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> salts) {
        std::uint64_t s = mix(seed ^ 0x2545f4914f6cdd1dull);
        for (std::uint64_t v : salts) s = mix(s ^ mix(v + 0x9e3779b97f4a7c15ull));
        return Rng(s);
    }

    std::uint64_t next_u64() {
        // xorshift* generator; small state, solid statistics for this use.
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    // Uniform double in [0, 1) using the top 53 bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), rejection-sampled to remove modulo bias.
    int uniform_int(int n) {
        if (n <= 0) throw UsageError("Rng::uniform_int requires n > 0");
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return static_cast<int>(x % un);
    }

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            const int j = uniform_int(i + 1);
            std::swap(v[i], v[static_cast<std::size_t>(j)]);
        }
    }

    // Draws k distinct values from [0, n) in random order (partial shuffle).
    std::vector<int> sample_without_replacement(int n, int k) {
        if (k > n) throw UsageError("sample_without_replacement: k > n");
        std::vector<int> pool(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        for (int i = 0; i < k; ++i) {
            const int j = i + uniform_int(n - i);
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        pool.resize(static_cast<std::size_t>(k));
        return pool;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace i2c
