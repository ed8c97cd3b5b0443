#pragma once

#include "newton_sketch/harness/problems.hpp"
#include "newton_sketch/harness/trace_io.hpp"
#include "newton_sketch/interior_point.hpp"

#include <sstream>
#include <string>
#include <vector>

namespace nsketch::harness {

/// Sketch sizes written as multiples of d: "d", "4d", "16d" or plain integers.
inline std::vector<Index> parse_m_grid(const std::string& text, Index d) {
    std::vector<Index> grid;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) throw InvalidParameter("m-grid: empty entry in '" + text + "'");
        Index value = 0;
        try {
            std::size_t used = 0;
            if (item.back() == 'd') {
                const std::string factor = item.substr(0, item.size() - 1);
                const long long k = factor.empty() ? 1 : std::stoll(factor, &used);
                if (!factor.empty() && used != factor.size()) throw InvalidParameter("");
                value = static_cast<Index>(k) * d;
            } else {
                value = static_cast<Index>(std::stoll(item, &used));
                if (used != item.size()) throw InvalidParameter("");
            }
        } catch (const std::exception&) {
            throw InvalidParameter("m-grid: cannot parse '" + item + "'");
        }
        if (value < 1) throw InvalidParameter("m-grid: sizes must be >= 1");
        grid.push_back(value);
    }
    if (grid.empty()) throw InvalidParameter("m-grid: no sizes given");
    return grid;
}

struct LpPath {
    Index m = 0;  // 0 for the exact path
    std::uint64_t seed = 0;
    BarrierResult run;
    double deviation = 0.0;  // mean per-tau distance to the exact path
};

struct LpDemoResult {
    LpPath exact;
    std::vector<LpPath> sketched;  // grid-major, seeds inner
};

/// Point of the path at one tau: the iterate after the first Newton step of
/// that centering, or the center itself when no step was needed.
inline Vector path_point(const CentralPathEntry& entry) {
    const auto& it = entry.inner.iterates;
    return it.size() > 1 ? it[1] : entry.x;
}

inline double path_deviation(const BarrierResult& path, const BarrierResult& exact) {
    if (path.trace.size() != exact.trace.size()) throw DimensionError("path_deviation: paths have different lengths");
    double total = 0.0;
    for (std::size_t k = 0; k < path.trace.size(); ++k)
        total += (path_point(path.trace[k]) - path_point(exact.trace[k])).norm();
    return total / static_cast<double>(path.trace.size());
}

/// Exact and Gaussian-sketched barrier paths for one LP, one run per
/// (m, seed) pair.
inline LpDemoResult run_lp_demo(const LpInstance& inst, const std::vector<Index>& m_grid, int seeds,
                                BarrierConfig config) {
    const BarrierProblem problem = lp_barrier_problem(inst.A, inst.b, inst.c);
    config.strategy = BarrierStrategy::full_sketch;
    config.inner.record_iterates = true;

    LpDemoResult out;
    BarrierConfig exact = config;
    exact.inner.sketch.kind = SketchKind::identity;
    out.exact.run = barrier_solve(problem, exact, inst.x0);

    for (Index m : m_grid) {
        for (int s = 0; s < seeds; ++s) {
            BarrierConfig sketched = config;
            sketched.inner.sketch.kind = SketchKind::gaussian;
            sketched.inner.sketch.m = m;
            sketched.inner.sketch.seed = derive_seed(config.inner.sketch.seed, static_cast<std::uint64_t>(s));
            LpPath path;
            path.m = m;
            path.seed = sketched.inner.sketch.seed;
            path.run = barrier_solve(problem, sketched, inst.x0);
            path.deviation = path_deviation(path.run, out.exact.run);
            out.sketched.push_back(std::move(path));
        }
    }
    return out;
}

/// Mean deviation for each grid entry, averaged over seeds.
inline std::vector<double> mean_deviation_by_m(const LpDemoResult& demo, const std::vector<Index>& m_grid) {
    std::vector<double> means;
    for (Index m : m_grid) {
        double sum = 0.0;
        int count = 0;
        for (const auto& p : demo.sketched)
            if (p.m == m) {
                sum += p.deviation;
                ++count;
            }
        means.push_back(count > 0 ? sum / count : 0.0);
    }
    return means;
}

/// One row per iterate: tau, step within the centering, coordinates, <c, x>.
inline std::string lp_path_csv(const BarrierResult& run, const Vector& c) {
    std::ostringstream out;
    out << "tau,step";
    for (Index j = 0; j < c.size(); ++j) out << ",x" << j + 1;
    out << ",objective\n";
    for (const auto& entry : run.trace) {
        std::vector<Vector> points = entry.inner.iterates;
        if (points.empty() || points.back() != entry.x) points.push_back(entry.x);
        for (std::size_t s = 0; s < points.size(); ++s) {
            out << format_double(entry.tau) << ',' << s;
            for (Index j = 0; j < points[s].size(); ++j) out << ',' << format_double(points[s](j));
            out << ',' << format_double(c.dot(points[s])) << '\n';
        }
    }
    return out.str();
}

}  // namespace nsketch::harness
