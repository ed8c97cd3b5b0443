#pragma once

#include "newton_sketch/core.hpp"

#include <span>

namespace nsketch {

namespace detail {

// Unnormalized in-place butterflies. Levels are taken two at a time
// (radix 4), with one radix-2 level left over when log2(len) is odd.
inline void fwht_butterflies(std::span<double> v) {
    const std::size_t len = v.size();
    double* p = v.data();
    std::size_t h = 1;
    for (; 4 * h <= len; h *= 4) {
        for (std::size_t i = 0; i < len; i += 4 * h) {
            for (std::size_t j = i; j < i + h; ++j) {
                const double a = p[j], b = p[j + h], c = p[j + 2 * h], d = p[j + 3 * h];
                const double ab = a + b, amb = a - b, cd = c + d, cmd = c - d;
                p[j] = ab + cd;
                p[j + h] = amb + cmd;
                p[j + 2 * h] = ab - cd;
                p[j + 3 * h] = amb - cmd;
            }
        }
    }
    if (2 * h <= len) {
        for (std::size_t j = 0; j < h; ++j) {
            const double x = p[j];
            const double y = p[j + h];
            p[j] = x + y;
            p[j + h] = x - y;
        }
    }
}

}  // namespace detail

/// In-place orthonormal Walsh-Hadamard transform (entries of H are
/// +-1/sqrt(n)). The transform is symmetric and orthogonal, hence involutive.
inline void fwht_inplace(std::span<double> v) {
    if (!is_power_of_two(static_cast<Index>(v.size())))
        throw DimensionError("fwht: length " + std::to_string(v.size()) + " is not a power of two");
    detail::fwht_butterflies(v);
    const double scale = 1.0 / std::sqrt(static_cast<double>(v.size()));
    for (double& x : v) x *= scale;
}

inline Vector fwht(const Vector& v) {
    Vector out = v;
    fwht_inplace(std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
    return out;
}

/// Applies H to every column of M in place.
inline void fwht_columns_inplace(Matrix& M) {
    const Index n = M.rows();
    if (!is_power_of_two(n))
        throw DimensionError("fwht: row count " + std::to_string(n) + " is not a power of two");
    for (Index j = 0; j < M.cols(); ++j) detail::fwht_butterflies(std::span<double>(M.col(j).data(), static_cast<std::size_t>(n)));
    M *= 1.0 / std::sqrt(static_cast<double>(n));
}

}  // namespace nsketch
