#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "caisson/errors.hpp"

namespace caisson {

// Four-lane accumulation: fixed combine order keeps results reproducible
// while giving the compiler enough ILP to keep the SOM hot loops fast.
inline float dot(std::span<const float> a, std::span<const float> b) {
    float s0 = 0.f, s1 = 0.f, s2 = 0.f, s3 = 0.f;
    size_t n = a.size();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

inline float squared_distance(std::span<const float> a, std::span<const float> b) {
    float s0 = 0.f, s1 = 0.f, s2 = 0.f, s3 = 0.f;
    size_t n = a.size();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float d0 = a[i] - b[i];
        float d1 = a[i + 1] - b[i + 1];
        float d2 = a[i + 2] - b[i + 2];
        float d3 = a[i + 3] - b[i + 3];
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    for (; i < n; ++i) {
        float d = a[i] - b[i];
        s0 += d * d;
    }
    return (s0 + s1) + (s2 + s3);
}

inline double norm(std::span<const float> a) { return std::sqrt(static_cast<double>(dot(a, a))); }

inline void normalize(std::vector<float>& v) {
    double n = norm(v);
    if (n < 1e-12) throw ValidationError("cannot normalize a zero vector");
    float inv = static_cast<float>(1.0 / n);
    for (float& x : v) x *= inv;
}

// Cosine similarity; 0 when either vector is (numerically) zero, so queries
// with empty entity/concept segments score neutrally instead of NaN.
inline double cosine(std::span<const float> a, std::span<const float> b) {
    double na = norm(a);
    double nb = norm(b);
    if (na < 1e-12 || nb < 1e-12) return 0.0;
    return static_cast<double>(dot(a, b)) / (na * nb);
}

inline std::vector<float> concat(std::span<const float> a, std::span<const float> b) {
    std::vector<float> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

}  // namespace caisson
