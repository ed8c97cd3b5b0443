#pragma once

#include "newton_sketch/core.hpp"
#include "newton_sketch/objectives.hpp"

#include <optional>
#include <string>

namespace nsketch::harness {

/// ceil(c d) with the default accuracy, ceil(c d / eps^2) otherwise; never
/// more than n rows.
inline Index sketch_size_unconstrained(Index d, std::optional<double> epsilon = std::nullopt, double c = 6.0,
                                       std::optional<Index> n = std::nullopt) {
    if (d < 1) throw InvalidParameter("sketch_size_unconstrained: d must be >= 1");
    double m = c * static_cast<double>(d);
    if (epsilon) {
        if (!(*epsilon > 0.0 && *epsilon <= 1.0))
            throw InvalidParameter("sketch_size_unconstrained: epsilon must lie in (0, 1]");
        m /= *epsilon * *epsilon;
    }
    Index rows = std::max<Index>(1, static_cast<Index>(tolerant_ceil(m)));
    if (n) rows = std::min(rows, *n);
    return rows;
}

/// m = ceil(4 s log d), natural log, capped at n.
inline Index portfolio_sketch_size(Index s, Index d, std::optional<Index> n = std::nullopt) {
    if (s < 1 || d < 1) throw InvalidParameter("portfolio_sketch_size: s, d must be >= 1");
    Index rows = std::max<Index>(
        1, static_cast<Index>(tolerant_ceil(4.0 * static_cast<double>(s) * std::log(static_cast<double>(d)))));
    if (n) rows = std::min(rows, *n);
    return rows;
}

/// Extremes of psi'' over |u| <= bound.
struct CurvatureRange {
    double min = 1.0;
    double max = 1.0;
    double ratio() const { return max / min; }
};

inline CurvatureRange glm_curvature_range(GlmKind kind, double bound) {
    const GlmFamily family{kind};
    switch (kind) {
        case GlmKind::square: return {1.0, 1.0};
        case GlmKind::logistic: return {family.d2psi(bound), family.d2psi(0.0)};
        case GlmKind::poisson: return {family.d2psi(-bound), family.d2psi(bound)};
    }
    return {};
}

struct L1SizingReport {
    Index m = 0;
    double curvature_ratio = 1.0;
    double max_column_norm_sq = 0.0;
    double restricted_eigenvalue = 0.0;  // lower bound used for gamma_s^-(A)
};

/// Sketch size for l1-constrained GLMs:
///   m = ceil(c0 (psi''_max / psi''_min) (max_j ||A_j||^2 / gamma) s log d)
/// with gamma = lambda_min(A^T A) unless a restricted eigenvalue is supplied.
/// Curvature extremes are taken over |u| <= R max_i ||a_i||_inf.
inline L1SizingReport sketch_size_l1_glm(const Matrix& A, Index s, GlmKind family, double radius, double c0 = 1.0,
                                         std::optional<double> restricted_eigenvalue = std::nullopt) {
    if (s < 1) throw InvalidParameter("sketch_size_l1_glm: s must be >= 1");
    if (!(radius > 0.0)) throw InvalidParameter("sketch_size_l1_glm: R must be positive");
    L1SizingReport report;
    if (restricted_eigenvalue) {
        report.restricted_eigenvalue = *restricted_eigenvalue;
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(A.transpose() * A, Eigen::EigenvaluesOnly);
        report.restricted_eigenvalue = eig.eigenvalues().minCoeff();
    }
    const double scale_floor = 1e-12 * std::max(1.0, A.colwise().squaredNorm().maxCoeff());
    if (!(report.restricted_eigenvalue > scale_floor))
        throw InvalidParameter("sketch_size_l1_glm: lambda_min(A^T A) <= 0; supply a restricted eigenvalue");
    const double bound = radius * A.cwiseAbs().maxCoeff();
    report.curvature_ratio = glm_curvature_range(family, bound).ratio();
    report.max_column_norm_sq = A.colwise().squaredNorm().maxCoeff();
    const double logd = std::log(static_cast<double>(A.cols()));
    const double m = c0 * report.curvature_ratio * report.max_column_norm_sq / report.restricted_eigenvalue *
                     static_cast<double>(s) * logd;
    report.m = std::max<Index>(1, static_cast<Index>(tolerant_ceil(m)));
    return report;
}

}  // namespace nsketch::harness
