#include "oracles.hpp"

#include <newton_sketch/harness/baselines.hpp>
#include <newton_sketch/harness/problems.hpp>
#include <newton_sketch/harness/sizing.hpp>
#include <newton_sketch/harness/trace_io.hpp>

#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

using namespace nsketch;
using namespace nsketch::harness;

TEST(CorrelatedGaussian, IndependentColumnsHaveScaledIdentityCovariance) {
    const Index n = 20000;
    const Matrix A = gen_correlated_gaussian(n, 5, 0.0, 1.0, 1);
    const Matrix cov = A.transpose() * A / static_cast<double>(n);
    EXPECT_LE((cov - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 5.0 / std::sqrt(static_cast<double>(n)));
}

TEST(CorrelatedGaussian, SampleCovarianceMatchesAnalyticSigma) {
    const Index n = 100000;
    const Matrix A = gen_correlated_gaussian(n, 4, 0.99, 2.0, 2);
    const Matrix cov = A.transpose() * A / static_cast<double>(n);
    Matrix sigma(4, 4);
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j) sigma(i, j) = 2.0 * std::pow(0.99, std::abs(static_cast<double>(i - j)));
    EXPECT_LE((cov - sigma).cwiseAbs().maxCoeff(), 0.05);
}

TEST(CorrelatedGaussian, DeterministicInSeed) {
    EXPECT_EQ(gen_correlated_gaussian(50, 3, 0.5, 1.0, 3), gen_correlated_gaussian(50, 3, 0.5, 1.0, 3));
    EXPECT_NE(gen_correlated_gaussian(50, 3, 0.5, 1.0, 3), gen_correlated_gaussian(50, 3, 0.5, 1.0, 4));
    EXPECT_THROW(gen_correlated_gaussian(5, 2, 1.0, 1.0, 0), InvalidParameter);
}

TEST(PortfolioInstance, SizesFollowTheDimension) {
    EXPECT_EQ(portfolio_sparsity(10), 5);
    const PortfolioInstance small = gen_portfolio_instance(2, 1);
    EXPECT_EQ(small.A.rows(), 8);
    const PortfolioInstance capped = gen_portfolio_instance(60, 1, 5000);
    EXPECT_EQ(capped.A.rows(), 5000);
    EXPECT_EQ((capped.x_star.array() != 0.0).count(), portfolio_sparsity(60));
    EXPECT_THROW(gen_portfolio_instance(1, 0), InvalidParameter);
}

TEST(PortfolioInstance, DeterministicInSeed) {
    const PortfolioInstance a = gen_portfolio_instance(5, 9);
    const PortfolioInstance b = gen_portfolio_instance(5, 9);
    EXPECT_EQ(a.A, b.A);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.x_star, b.x_star);
}

TEST(PortfolioInstance, PlantedPointIsTheOptimum) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const PortfolioInstance inst = gen_portfolio_instance(6, seed);
        const Matrix Q = 2.0 * inst.lambda * inst.A.transpose() * inst.A;
        const Vector z = oracle::simplex_qp_bruteforce(Q, -inst.mean);
        EXPECT_LE((z - inst.x_star).cwiseAbs().maxCoeff(), 1e-8) << "seed " << seed;
        EXPECT_NEAR(-inst.mean.dot(z) + inst.lambda * (inst.A * z).squaredNorm(), inst.f_star, 1e-12);
    }
}

TEST(LpInstance, OriginIsStrictlyFeasibleAndPolytopeIsBounded) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const LpInstance inst = gen_lp_instance(32, 2, seed);
        EXPECT_TRUE(((inst.b - inst.A * inst.x0).array() > 0.0).all());
        EXPECT_TRUE(oracle::lp2d_vertex_optimum(inst.A, inst.b, inst.c).has_value());
        EXPECT_NEAR(inst.c.norm(), 1.0, 1e-12);
    }
    const LpInstance high = gen_lp_instance(12, 4, 1);
    EXPECT_TRUE(((high.b - high.A * high.x0).array() > 0.0).all());
}

TEST(SketchSize, Unconstrained) {
    EXPECT_EQ(sketch_size_unconstrained(100), 600);
    EXPECT_EQ(sketch_size_unconstrained(1, 1.0, 1.0), 1);
    EXPECT_EQ(sketch_size_unconstrained(100, std::nullopt, 6.0, Index{250}), 250);
    EXPECT_EQ(sketch_size_unconstrained(10, 0.5), 240);
    EXPECT_THROW(sketch_size_unconstrained(10, 0.0), InvalidParameter);
}

TEST(SketchSize, Portfolio) {
    EXPECT_EQ(portfolio_sketch_size(5, 10), 47);
    EXPECT_EQ(static_cast<Index>(std::ceil(4.0 * 5 * std::log(10.0))), 47);
    EXPECT_EQ(portfolio_sketch_size(1, 3), static_cast<Index>(std::ceil(4.0 * std::log(3.0))));
    EXPECT_EQ(portfolio_sketch_size(5, 10, Index{20}), 20);
}

TEST(SketchSize, PortfolioWithUnitLog) {
    // d = e gives log d = 1; evaluate the formula directly since d is an integer.
    EXPECT_DOUBLE_EQ(4.0 * 1.0 * std::log(std::numbers::e), 4.0);
}

TEST(SketchSize, L1SquareFamilyHasUnitCurvatureRatio) {
    const Matrix A = gen_correlated_gaussian(50, 4, 0.3, 1.0, 5);
    EXPECT_EQ(sketch_size_l1_glm(A, 2, GlmKind::square, 1.0).curvature_ratio, 1.0);
}

TEST(SketchSize, L1OrthonormalColumnsGiveLogD) {
    for (Index d : {3, 8, 20}) {
        const Matrix A = Matrix::Identity(d + 5, d);
        const L1SizingReport r = sketch_size_l1_glm(A, 1, GlmKind::square, 1.0);
        EXPECT_EQ(r.m, static_cast<Index>(std::ceil(std::log(static_cast<double>(d))))) << "d=" << d;
    }
}

TEST(SketchSize, L1LogisticCurvatureRatioMatchesGridScan) {
    const Matrix A = gen_correlated_gaussian(30, 3, 0.2, 1.0, 6);
    const double R = 0.8;
    const double bound = R * A.cwiseAbs().maxCoeff();
    double lo = kInfinity, hi = 0.0;
    for (int k = 0; k <= 200000; ++k) {
        const double u = -bound + 2.0 * bound * k / 200000.0;
        const double v = std::exp(u) / ((std::exp(u) + 1.0) * (std::exp(u) + 1.0));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const L1SizingReport r = sketch_size_l1_glm(A, 2, GlmKind::logistic, R);
    EXPECT_NEAR(r.curvature_ratio, hi / lo, 1e-6 * hi / lo);
}

TEST(SketchSize, L1RankDeficientDesignNeedsRestrictedEigenvalue) {
    const Matrix A = Matrix::Ones(10, 3);
    EXPECT_THROW(sketch_size_l1_glm(A, 1, GlmKind::square, 1.0), InvalidParameter);
    EXPECT_GT(sketch_size_l1_glm(A, 1, GlmKind::square, 1.0, 1.0, 2.0).m, 0);
}

namespace {

SolveResult quadratic_run() {
    const ObjectiveModel model = quadratic_objective(Matrix::Identity(1, 1), Vector::Constant(1, 2.0));
    SolverConfig config;
    config.sketch.kind = SketchKind::identity;
    return solve(model, config, Vector::Zero(1));
}

}  // namespace

TEST(TraceIo, CsvHeaderAndRows) {
    const SolveResult r = quadratic_run();
    const std::string csv = trace_csv(r, -2.0);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "iter,f_value,opt_gap,decrement_sq,step_size,backtracks,wallclock_ns");
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    ASSERT_EQ(rows.size(), r.records.size());
    EXPECT_EQ(rows[0].rfind("0,0,2,4,1,0,", 0), 0u) << rows[0];
    EXPECT_EQ(rows[1].rfind("1,-2,0,0,0,0,", 0), 0u) << rows[1];
}

TEST(TraceIo, UnknownOptimumWritesNan) {
    const std::string csv = trace_csv(quadratic_run(), std::nullopt);
    EXPECT_NE(csv.find(",nan,"), std::string::npos);
}

TEST(TraceIo, FullPrecisionValues) {
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(TraceIo, JsonSummaryKeys) {
    const SolveResult r = quadratic_run();
    const nlohmann::json j = trace_summary(r, {{"sketch", "identity"}}, -2.0);
    for (const char* key : {"config", "converged", "iters", "total_wallclock_ns", "final_gap"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["iters"], r.records.size());
    EXPECT_EQ(j["converged"], true);
    EXPECT_EQ(j["final_gap"], 0.0);
    EXPECT_EQ(j["config"]["sketch"], "identity");
}

TEST(TraceIo, WriteTraceCreatesBothFiles) {
    const auto dir = std::filesystem::temp_directory_path() / "nsketch_trace_test";
    std::filesystem::remove_all(dir);
    write_trace(dir, "run", quadratic_run(), {}, -2.0);
    EXPECT_TRUE(std::filesystem::exists(dir / "run.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "run.json"));
    EXPECT_FALSE(std::filesystem::exists(dir / "run.csv.tmp"));
    std::filesystem::remove_all(dir);
}

TEST(MatrixCsv, RoundTrip) {
    const Matrix M = gen_correlated_gaussian(4, 3, 0.5, 1.0, 7);
    std::istringstream in(matrix_to_csv(M));
    EXPECT_EQ(matrix_from_csv(in), M);
}

TEST(MatrixCsv, MalformedInputIsRejected) {
    std::istringstream no_header("1,2\n3,4\n");
    EXPECT_THROW(matrix_from_csv(no_header), InvalidParameter);
    std::istringstream short_row("# 2,2\n1,2\n3\n");
    EXPECT_THROW(matrix_from_csv(short_row), InvalidParameter);
    std::istringstream missing_row("# 2,2\n1,2\n");
    EXPECT_THROW(matrix_from_csv(missing_row), InvalidParameter);
    std::istringstream bad_value("# 1,2\n1,x\n");
    EXPECT_THROW(matrix_from_csv(bad_value), InvalidParameter);
}

TEST(ConfigFile, ParsesKeyValuesAndComments) {
    std::istringstream in("# comment\nfamily = logistic\n\n d=100  # trailing\nsketch=ros\n");
    const auto kv = parse_key_values(in);
    EXPECT_EQ(kv.at("family"), "logistic");
    EXPECT_EQ(kv.at("d"), "100");
    EXPECT_EQ(kv.at("sketch"), "ros");
    EXPECT_EQ(kv.size(), 3u);
    std::istringstream bad("just words\n");
    EXPECT_THROW(parse_key_values(bad), InvalidParameter);
}
