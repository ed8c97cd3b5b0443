#pragma once

#include "newton_sketch/core.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

namespace nsketch {

namespace detail {

// Projection of v onto {x >= 0, sum x = radius} by the sort-and-threshold rule.
inline Vector project_onto_simplex_face(const Vector& v, double radius) {
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumulative += u[j];
        const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
        if (u[j] - candidate > 0.0) theta = candidate;
    }
    return (v.array() - theta).max(0.0).matrix();
}

}  // namespace detail

/// Euclidean projection onto {x >= 0, sum x <= 1}.
inline Vector project_simplex(const Vector& v) {
    Vector clipped = v.cwiseMax(0.0);
    if (clipped.sum() <= 1.0) return clipped;
    return detail::project_onto_simplex_face(v, 1.0);
}

/// Euclidean projection onto {||x||_1 <= radius}.
inline Vector project_l1_ball(const Vector& v, double radius) {
    if (!(radius > 0)) throw InvalidParameter("project_l1_ball: radius must be positive");
    if (v.lpNorm<1>() <= radius) return v;
    const Vector magnitude = detail::project_onto_simplex_face(v.cwiseAbs(), radius);
    return (v.array().sign() * magnitude.array()).matrix();
}

inline Vector project_nonneg(const Vector& v) { return v.cwiseMax(0.0); }

enum class ConstraintKind { free, simplex, l1_ball, nonneg };

struct ConstraintSet {
    ConstraintKind kind = ConstraintKind::free;
    double radius = 1.0;  // l1_ball only

    static ConstraintSet free() { return {}; }
    static ConstraintSet simplex() { return {ConstraintKind::simplex, 1.0}; }
    static ConstraintSet l1_ball(double radius) { return {ConstraintKind::l1_ball, radius}; }
    static ConstraintSet nonneg() { return {ConstraintKind::nonneg, 1.0}; }

    bool is_free() const noexcept { return kind == ConstraintKind::free; }

    Vector project(const Vector& v) const {
        switch (kind) {
            case ConstraintKind::free: return v;
            case ConstraintKind::simplex: return project_simplex(v);
            case ConstraintKind::l1_ball: return project_l1_ball(v, radius);
            case ConstraintKind::nonneg: return project_nonneg(v);
        }
        return v;
    }

    bool contains(const Vector& x, double tol = 1e-12) const {
        switch (kind) {
            case ConstraintKind::free: return true;
            case ConstraintKind::simplex: return (x.array() >= -tol).all() && x.sum() <= 1.0 + tol;
            case ConstraintKind::l1_ball: return x.lpNorm<1>() <= radius + tol;
            case ConstraintKind::nonneg: return (x.array() >= -tol).all();
        }
        return false;
    }
};

}  // namespace nsketch
