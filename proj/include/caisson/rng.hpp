#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace caisson {

// FNV-1a over raw bytes; used for text keys, universe hashes and to derive
// per-token / per-symbol RNG streams.
inline uint64_t fnv1a64(std::string_view bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Hand-rolled generator so corpora, embeddings and SOM training are
// bit-reproducible across standard libraries (std:: distributions are
// implementation-defined).
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    uint32_t bounded(uint32_t n) { return static_cast<uint32_t>(next_u64() % n); }

    // Standard normal via Box-Muller; no spare caching so the stream
    // position is a pure function of the number of calls.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Index into a discrete distribution given by non-negative weights.
    template <typename Seq>
    size_t categorical(const Seq& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double r = uniform() * total;
        double acc = 0.0;
        size_t last = 0;
        size_t i = 0;
        for (double w : weights) {
            acc += w;
            if (r < acc) return i;
            last = i;
            ++i;
        }
        return last;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = bounded(static_cast<uint32_t>(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

}  // namespace caisson
