#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace conefield {

/// SplitMix64 generator (Steele, Lea & Flood 2014). Chosen over the standard
/// engines because its output is a pure integer function of the seed, so
/// streams are cheap to fork per (time, vertex) cell and results are
/// bit-identical on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n) by rejection, bias-free.
    std::uint64_t next_below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }

private:
    std::uint64_t state_;
};

/// One SplitMix64 scramble round; used to mix stream identifiers into seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives the seed of an independent substream, e.g. stream_seed(seed, t, v)
/// for the RNG owned by cell (v, t). Documented scheme: successive scramble
/// rounds over seed and tags, so any scheduling of cells draws the same values.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t h = mix64(seed ^ 0x2545f4914f6cdd1dULL);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    return h;
}

/// Fisher-Yates shuffle driven by SplitMix64. std::shuffle is not
/// reproducible across standard libraries; this is.
template <typename T>
void seeded_shuffle(std::vector<T>& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

/// Draws an index from a discrete distribution by inverse CDF.
/// Weights need not be normalized.
inline std::size_t draw_discrete(std::span<const double> weights, SplitMix64& rng) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = rng.next_unit() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
}

/// FNV-1a 64-bit hash, used for content fingerprints in provenance records.
inline std::uint64_t fnv1a64(std::span<const char> bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace conefield
