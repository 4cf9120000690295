#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <vector>

namespace fp {

// Deterministic random stream. All float draws go through explicit integer
// arithmetic (no std::uniform_real_distribution etc.) so that sequences are
// byte-identical across standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 24 bits of mantissa.
    float uniform() {
        return static_cast<float>(gen_() >> 40) * (1.0f / 16777216.0f);
    }

    float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; generates pairs, caches the spare.
    float normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        float u1 = uniform();
        float u2 = uniform();
        // Guard log(0); the offset is below the 24-bit resolution of uniform().
        float r = std::sqrt(-2.0f * std::log(u1 + 1.1754944e-38f));
        float theta = 6.2831853071795864769f * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Uniform integer in [0, n); n > 0. Uses rejection to avoid modulo bias.
    std::uint64_t bounded(std::uint64_t n) {
        std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            std::uint64_t r = gen_();
            if (r >= threshold) return r % n;
        }
    }

    // Fisher-Yates; std::shuffle's draw pattern is implementation-defined,
    // this one is pinned.
    template <class T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    float spare_ = 0.0f;
    bool have_spare_ = false;
};

// splitmix64 finalizer; used to derive decorrelated child seeds from a base
// seed plus stream labels, so that e.g. model init and batch order never
// share a stream.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t index = 0) {
    return mix_seed(mix_seed(base) ^ mix_seed(stream * 0x632be59bd9b4e019ull + index));
}

}  // namespace fp
