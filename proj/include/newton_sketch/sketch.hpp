#pragma once

#include "newton_sketch/core.hpp"
#include "newton_sketch/fwht.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace nsketch {

enum class SketchKind {
    gaussian,
    rademacher,
    ros_hadamard,
    row_sampling_uniform,
    row_sampling_l2norm,
    identity,
};

inline std::string_view to_string(SketchKind kind) {
    switch (kind) {
        case SketchKind::gaussian: return "gaussian";
        case SketchKind::rademacher: return "rademacher";
        case SketchKind::ros_hadamard: return "ros";
        case SketchKind::row_sampling_uniform: return "rows";
        case SketchKind::row_sampling_l2norm: return "rows-l2";
        case SketchKind::identity: return "identity";
    }
    return "unknown";
}

inline SketchKind parse_sketch_kind(std::string_view name) {
    if (name == "gaussian") return SketchKind::gaussian;
    if (name == "rademacher") return SketchKind::rademacher;
    if (name == "ros" || name == "ros_hadamard") return SketchKind::ros_hadamard;
    if (name == "rows" || name == "row_sampling_uniform") return SketchKind::row_sampling_uniform;
    if (name == "rows-l2" || name == "row_sampling_l2norm") return SketchKind::row_sampling_l2norm;
    if (name == "identity") return SketchKind::identity;
    throw InvalidSpec("unknown sketch kind '" + std::string(name) + "'");
}

struct SketchSpec {
    SketchKind kind = SketchKind::gaussian;
    Index m = 1;  // sketch rows
    Index n = 1;  // ambient rows
    std::uint64_t seed = 0;
};

inline void validate(const SketchSpec& spec) {
    if (spec.m < 1) throw InvalidSpec("sketch: m must be >= 1");
    if (spec.n < 1) throw InvalidSpec("sketch: n must be >= 1");
    if (spec.kind == SketchKind::identity && spec.m != spec.n)
        throw InvalidSpec("sketch: identity kind requires m == n (got m=" + std::to_string(spec.m) +
                          ", n=" + std::to_string(spec.n) + ")");
}

/// A realized random matrix S (m x n) scaled so that E[S^T S] = I_n.
///
/// Immutable after construction, except for the l2-norm row sampler whose
/// sampling distribution depends on the first matrix it is applied to; that
/// realization is computed once under a once_flag and then frozen.
class SketchOperator {
public:
    explicit SketchOperator(const SketchSpec& spec) : spec_(spec) {
        validate(spec_);
        std::mt19937_64 rng(mix64(spec_.seed));
        const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(spec_.m));
        switch (spec_.kind) {
            case SketchKind::gaussian: {
                std::normal_distribution<double> normal(0.0, 1.0);
                dense_.resize(spec_.m, spec_.n);
                for (Index i = 0; i < spec_.m; ++i)
                    for (Index j = 0; j < spec_.n; ++j) dense_(i, j) = normal(rng) * inv_sqrt_m;
                break;
            }
            case SketchKind::rademacher: {
                dense_.resize(spec_.m, spec_.n);
                for (Index i = 0; i < spec_.m; ++i)
                    for (Index j = 0; j < spec_.n; ++j)
                        dense_(i, j) = ((rng() >> 63) ? inv_sqrt_m : -inv_sqrt_m);
                break;
            }
            case SketchKind::ros_hadamard: {
                padded_n_ = next_power_of_two(spec_.n);
                signs_.resize(padded_n_);
                for (Index j = 0; j < padded_n_; ++j) signs_(j) = (rng() >> 63) ? 1.0 : -1.0;
                std::uniform_int_distribution<Index> pick(0, padded_n_ - 1);
                rows_.resize(static_cast<std::size_t>(spec_.m));
                for (auto& r : rows_) r = pick(rng);
                break;
            }
            case SketchKind::row_sampling_uniform: {
                std::uniform_int_distribution<Index> pick(0, spec_.n - 1);
                rows_.resize(static_cast<std::size_t>(spec_.m));
                for (auto& r : rows_) r = pick(rng);
                row_scale_.assign(rows_.size(),
                                  std::sqrt(static_cast<double>(spec_.n) / static_cast<double>(spec_.m)));
                break;
            }
            case SketchKind::row_sampling_l2norm:
                lazy_ = std::make_shared<LazyRows>();
                break;
            case SketchKind::identity:
                break;
        }
    }

    const SketchSpec& spec() const noexcept { return spec_; }
    Index rows() const noexcept { return spec_.m; }
    Index cols() const noexcept { return spec_.n; }

    /// S * M. For ROS the transform runs at the next power of two on the
    /// zero-padded matrix; the padded coordinates contribute nothing.
    Matrix apply(const Matrix& M) const {
        if (M.rows() != spec_.n)
            throw DimensionError("sketch_apply: matrix has " + std::to_string(M.rows()) +
                                 " rows, sketch expects " + std::to_string(spec_.n));
        switch (spec_.kind) {
            case SketchKind::gaussian:
            case SketchKind::rademacher:
                return dense_ * M;
            case SketchKind::ros_hadamard:
                return apply_ros(M);
            case SketchKind::row_sampling_uniform:
                return gather(M, rows_, row_scale_);
            case SketchKind::row_sampling_l2norm: {
                std::call_once(lazy_->once, [&] { realize_l2(M); });
                return gather(M, lazy_->rows, lazy_->scale);
            }
            case SketchKind::identity:
                return M;
        }
        return M;
    }

    /// Explicit m x n matrix (test/diagnostic use; allocates m*n).
    Matrix dense() const { return apply(Matrix::Identity(spec_.n, spec_.n)); }

    /// Sampled row indices for the sampling-based kinds (ROS indices refer to
    /// the padded length).
    const std::vector<Index>& sampled_rows() const {
        if (spec_.kind == SketchKind::row_sampling_l2norm) return lazy_->rows;
        return rows_;
    }
    const Vector& ros_signs() const noexcept { return signs_; }
    Index padded_rows() const noexcept { return padded_n_; }

private:
    struct LazyRows {
        std::once_flag once;
        std::vector<Index> rows;
        std::vector<double> scale;
    };

    Matrix apply_ros(const Matrix& M) const {
        Matrix work = Matrix::Zero(padded_n_, M.cols());
        work.topRows(spec_.n) = signs_.head(spec_.n).asDiagonal() * M;
        fwht_columns_inplace(work);
        const double scale = std::sqrt(static_cast<double>(padded_n_) / static_cast<double>(spec_.m));
        Matrix out(spec_.m, M.cols());
        for (Index i = 0; i < spec_.m; ++i) out.row(i) = scale * work.row(rows_[static_cast<std::size_t>(i)]);
        return out;
    }

    static Matrix gather(const Matrix& M, const std::vector<Index>& rows, const std::vector<double>& scale) {
        Matrix out(static_cast<Index>(rows.size()), M.cols());
        for (std::size_t i = 0; i < rows.size(); ++i)
            out.row(static_cast<Index>(i)) = scale[i] * M.row(rows[i]);
        return out;
    }

    // p_j proportional to ||M e_j||^2 over the rows of M; falls back to
    // uniform when M is identically zero.
    void realize_l2(const Matrix& M) const {
        std::vector<double> weights(static_cast<std::size_t>(spec_.n));
        double total = 0.0;
        for (Index j = 0; j < spec_.n; ++j) {
            weights[static_cast<std::size_t>(j)] = M.row(j).squaredNorm();
            total += weights[static_cast<std::size_t>(j)];
        }
        if (!(total > 0.0) || !std::isfinite(total)) {
            std::fill(weights.begin(), weights.end(), 1.0);
            total = static_cast<double>(spec_.n);
        }
        std::mt19937_64 rng(mix64(spec_.seed));
        std::discrete_distribution<Index> pick(weights.begin(), weights.end());
        lazy_->rows.resize(static_cast<std::size_t>(spec_.m));
        lazy_->scale.resize(lazy_->rows.size());
        for (std::size_t i = 0; i < lazy_->rows.size(); ++i) {
            const Index j = pick(rng);
            const double p = weights[static_cast<std::size_t>(j)] / total;
            lazy_->rows[i] = j;
            lazy_->scale[i] = 1.0 / std::sqrt(static_cast<double>(spec_.m) * p);
        }
    }

    SketchSpec spec_;
    Matrix dense_;
    Vector signs_;
    Index padded_n_ = 0;
    std::vector<Index> rows_;
    std::vector<double> row_scale_;
    std::shared_ptr<LazyRows> lazy_;
};

inline SketchOperator build_sketch(const SketchSpec& spec) { return SketchOperator(spec); }

inline Matrix sketch_apply(const SketchOperator& op, const Matrix& M) { return op.apply(M); }

/// max-norm of (1/K) sum_k S_k^T S_k - I over K independent draws; the k-th
/// draw uses derive_seed(spec.seed, k).
inline double isotropy_deviation(const SketchSpec& spec, int trials) {
    if (trials < 1) throw InvalidParameter("isotropy_deviation: trials must be >= 1");
    validate(spec);
    Matrix sum = Matrix::Zero(spec.n, spec.n);
    for (int k = 0; k < trials; ++k) {
        SketchSpec draw = spec;
        draw.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(k));
        const Matrix S = SketchOperator(draw).dense();
        sum.noalias() += S.transpose() * S;
    }
    sum /= static_cast<double>(trials);
    sum -= Matrix::Identity(spec.n, spec.n);
    return sum.cwiseAbs().maxCoeff();
}

}  // namespace nsketch
