// nsketch: command-line driver for the Newton Sketch solvers and benchmarks.
//
//   nsketch solve   --family logistic --n 512 --d 10 --sketch ros --out runs/
//   nsketch barrier --family lasso --n 50 --d 512 --strategy partial
//   nsketch bench   --experiment logistic --seeds 3 --out bench/
//   nsketch lp-demo --m-grid d,4d,16d --seeds 3 --out demo/
//   nsketch sizing  --family square --d 100
//
// Options may also come from a key=value file given with --config; flags on
// the command line take precedence. Exit status: 0 converged, 2 not
// converged, 1 usage error.

#include <newton_sketch/harness/bench.hpp>
#include <newton_sketch/harness/lp_demo.hpp>
#include <newton_sketch/newton_sketch.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace nsketch;
using namespace nsketch::harness;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kConverged = 0;
constexpr int kUsage = 1;
constexpr int kNotConverged = 2;

struct Options {
    std::string family = "logistic";
    Index n = 0;
    Index d = 0;
    Index m = 0;
    std::string sketch = "ros";
    std::uint64_t seed = 0;
    double delta = 0.0;
    double a = 0.1;
    double b = 0.5;
    double mu = 10.0;
    double tau0 = 1.0;
    double rho = 0.99;
    double scale = 2.0;
    double lambda = 0.0;
    double radius = 0.0;
    double epsilon = 0.0;
    Index s = 0;
    Index n_max = 100000;
    int max_iters = 0;
    int gd_iters = 1000;
    int seeds = 0;
    std::string strategy = "partial";
    std::string lasso_form = "stacked";
    std::string m_grid = "d,4d,16d";
    std::string experiment = "all";
    std::string data;
    std::string labels;
    std::string out;
    bool no_reference = false;
};

class UsageError : public Error {
public:
    using Error::Error;
};

template <class T>
T pick(T value, T fallback) {
    return value > T{} ? value : fallback;
}

json config_json(const Options& o) {
    return {{"family", o.family}, {"n", o.n},         {"d", o.d},         {"m", o.m},       {"sketch", o.sketch},
            {"seed", o.seed},     {"delta", o.delta}, {"a", o.a},         {"b", o.b},       {"mu", o.mu},
            {"tau0", o.tau0},     {"rho", o.rho},     {"scale", o.scale}, {"strategy", o.strategy}};
}

void print_json(const json& j) { std::cout << j.dump() << '\n'; }

std::optional<fs::path> out_dir(const Options& o) {
    if (o.out.empty()) return std::nullopt;
    return fs::path(o.out);
}

fs::path require_out(const Options& o, const char* command) {
    if (o.out.empty()) throw UsageError(std::string(command) + ": --out DIR is required");
    return fs::path(o.out);
}

SolverConfig solver_config(const Options& o, double default_delta, int default_iters) {
    SolverConfig c;
    c.sketch.kind = parse_sketch_kind(o.sketch);
    c.sketch.m = o.m;
    c.sketch.seed = o.seed;
    c.delta = pick(o.delta, default_delta);
    c.a = o.a;
    c.b = o.b;
    c.max_iters = pick(o.max_iters, default_iters);
    c.partial = o.strategy == "partial";
    validate(c);
    return c;
}

BarrierStrategy parse_strategy(const std::string& name) {
    if (name == "partial") return BarrierStrategy::partial_sketch;
    if (name == "full") return BarrierStrategy::full_sketch;
    throw UsageError("unknown strategy '" + name + "' (expected full or partial)");
}

LassoSqrtForm parse_lasso_form(const std::string& name) {
    if (name == "stacked") return LassoSqrtForm::stacked;
    if (name == "combined") return LassoSqrtForm::combined;
    throw UsageError("unknown lasso form '" + name + "' (expected stacked or combined)");
}

// ---------------------------------------------------------------------------
// Problem construction

struct Problem {
    ObjectiveModel model;
    ConstraintSet cs = ConstraintSet::free();
    Vector x0;
    std::optional<double> f_star;  // known in closed form
    Index default_m = 0;           // 0: solver default
};

GlmInstance load_or_generate_glm(const Options& o, bool logistic) {
    if (!o.data.empty()) {
        if (o.labels.empty()) throw UsageError("--data needs --labels");
        GlmInstance inst;
        inst.A = read_matrix_csv(o.data);
        const Matrix y = read_matrix_csv(o.labels);
        if (y.cols() != 1) throw UsageError("--labels must be a single-column matrix");
        inst.y = y.col(0);
        return inst;
    }
    const Index n = pick<Index>(o.n, 512), d = pick<Index>(o.d, 10);
    return logistic ? gen_logistic_instance(n, d, o.rho, o.scale, o.seed)
                    : gen_least_squares_instance(n, d, o.rho, o.scale, o.seed);
}

Problem build_problem(const Options& o) {
    Problem p;
    switch (parse_problem_family(o.family)) {
        case ProblemFamily::logistic_glm:
        case ProblemFamily::least_squares: {
            const bool logistic = parse_problem_family(o.family) == ProblemFamily::logistic_glm;
            GlmInstance inst = load_or_generate_glm(o, logistic);
            const Index d = inst.A.cols();
            p.model = glm_objective(std::move(inst.A), std::move(inst.y),
                                    GlmFamily{logistic ? GlmKind::logistic : GlmKind::square});
            if (o.radius > 0.0) p.cs = ConstraintSet::l1_ball(o.radius);
            p.x0 = Vector::Zero(d);
            return p;
        }
        case ProblemFamily::portfolio: {
            const Index d = pick<Index>(o.d, 10);
            const PortfolioInstance inst = gen_portfolio_instance(d, o.seed, o.n_max, pick(o.lambda, 0.5));
            p.model = quadratic_objective(std::sqrt(2.0 * inst.lambda) * inst.A, inst.mean);
            p.cs = ConstraintSet::simplex();
            p.x0 = Vector::Constant(d, 1.0 / static_cast<double>(d + 1));
            p.f_star = inst.f_star;
            p.default_m = portfolio_sketch_size(inst.sparsity, d, inst.A.rows());
            return p;
        }
        case ProblemFamily::lp: {
            const LpInstance inst = gen_lp_instance(pick<Index>(o.n, 32), pick<Index>(o.d, 2), o.seed);
            p.model = lp_barrier_objective(inst.A, inst.b, inst.c, o.tau0);
            p.x0 = inst.x0;
            return p;
        }
        case ProblemFamily::lasso_dual: {
            const LassoInstance inst = gen_lasso_instance(pick<Index>(o.n, 50), pick<Index>(o.d, 256), o.rho,
                                                          o.scale, o.seed);
            p.model = lasso_dual_barrier_objective(inst.A, inst.y, inst.lambda, o.tau0, parse_lasso_form(o.lasso_form));
            p.x0 = Vector::Zero(inst.A.rows());
            return p;
        }
    }
    throw UsageError("unsupported family");
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_solve(const Options& o) {
    Problem p = build_problem(o);
    SolverConfig config = solver_config(o, 1e-8, 100);
    if (config.sketch.m == 0) config.sketch.m = p.default_m;

    std::optional<double> f_star = p.f_star;
    if (!f_star && !o.no_reference) {
        try {
            f_star = reference_optimum(p.model, p.x0, p.cs, config.partial).f_final;
        } catch (const SolveError& e) {
            std::cerr << "warning: reference optimum unavailable: " << e.what() << '\n';
        }
    }
    json cfg = config_json(o);
    cfg["delta"] = config.delta;
    cfg["m"] = config.sketch.m;
    SolveResult result;
    int status = kConverged;
    try {
        result = solve(p.model, config, p.x0, p.cs);
        if (!result.converged) status = kNotConverged;
    } catch (const SolveError& e) {
        std::cerr << "error: " << e.what() << '\n';
        result = e.partial;
        status = kNotConverged;
    }
    if (const auto dir = out_dir(o)) write_trace(*dir, "solve", result, cfg, f_star);
    print_json(trace_summary(result, cfg, f_star));
    return status;
}

struct BarrierSetup {
    BarrierProblem problem;
    Vector x0;
    std::optional<LassoInstance> lasso;
};

BarrierSetup build_barrier(const Options& o) {
    BarrierSetup s;
    switch (parse_problem_family(o.family)) {
        case ProblemFamily::lp: {
            const LpInstance inst = gen_lp_instance(pick<Index>(o.n, 32), pick<Index>(o.d, 2), o.seed);
            s.problem = lp_barrier_problem(inst.A, inst.b, inst.c);
            s.x0 = inst.x0;
            return s;
        }
        case ProblemFamily::portfolio: {
            const Index d = pick<Index>(o.d, 10);
            const PortfolioInstance inst = gen_portfolio_instance(d, o.seed, o.n_max, pick(o.lambda, 0.5));
            s.problem = portfolio_barrier_problem(inst.A, inst.mean, inst.lambda);
            s.x0 = Vector::Constant(d, 1.0 / static_cast<double>(d + 1));
            return s;
        }
        case ProblemFamily::lasso_dual: {
            s.lasso = gen_lasso_instance(pick<Index>(o.n, 50), pick<Index>(o.d, 256), o.rho, o.scale, o.seed);
            s.problem = lasso_dual_barrier_problem(s.lasso->A, s.lasso->y, s.lasso->lambda,
                                                   parse_lasso_form(o.lasso_form));
            s.x0 = Vector::Zero(s.lasso->A.rows());
            return s;
        }
        default:
            throw UsageError("barrier: family must be lp, portfolio or lasso");
    }
}

int cmd_barrier(const Options& o) {
    const BarrierSetup setup = build_barrier(o);
    BarrierConfig config;
    config.tau0 = o.tau0;
    config.mu = o.mu;
    config.delta = pick(o.delta, 1e-6);
    config.strategy = parse_strategy(o.strategy);
    config.inner = solver_config(o, 1e-9, 200);

    BarrierResult result;
    int status = kConverged;
    try {
        result = barrier_solve(setup.problem, config, setup.x0);
    } catch (const BarrierError& e) {
        std::cerr << "error: " << e.what() << '\n';
        result = e.partial;
        status = kNotConverged;
    }
    std::vector<double> gaps;
    if (setup.lasso)
        for (const auto& e : result.trace) gaps.push_back(lasso_duality_gap(*setup.lasso, e.tau, e.x));

    json cfg = config_json(o);
    cfg["delta"] = config.delta;
    json summary = {{"config", cfg}, {"outer_iterations", result.outer_iterations},
                    {"centerings", result.trace.size()}};
    bool all_converged = !result.trace.empty();
    int inner_total = 0;
    for (const auto& e : result.trace) {
        all_converged = all_converged && e.inner_converged;
        inner_total += e.inner_iterations;
    }
    if (!all_converged) status = kNotConverged;
    summary["converged"] = status == kConverged;
    summary["inner_iterations"] = inner_total;
    if (!result.trace.empty()) {
        summary["f0_value"] = result.trace.back().f0_value;
        summary["bound"] = result.trace.back().bound;
    }
    if (!gaps.empty()) summary["duality_gap"] = gaps.back();

    if (const auto dir = out_dir(o)) {
        const SolveResult flat = flatten_barrier(result);
        write_trace(*dir, "barrier", flat, cfg, std::nullopt);
        write_file_atomic(*dir / "barrier_path.csv", central_path_csv(result, gaps.empty() ? nullptr : &gaps));
    }
    print_json(summary);
    return status;
}

int bench_logistic(const Options& o, const fs::path& dir, int seeds) {
    int status = kConverged;
    for (int k = 0; k < seeds; ++k) {
        LogisticBenchConfig c;
        c.n = pick<Index>(o.n, c.n);
        c.d = pick<Index>(o.d, c.d);
        c.rho = o.rho;
        c.scale = o.scale;
        c.seed = o.seed + static_cast<std::uint64_t>(k);
        c.sketch = parse_sketch_kind(o.sketch);
        c.m = o.m;
        c.delta = pick(o.delta, c.delta);
        c.a = o.a;
        c.b = o.b;
        c.max_iters = pick(o.max_iters, c.max_iters);
        c.gd_iters = o.gd_iters;
        const LogisticBench r = run_logistic_bench(c);

        json cfg = config_json(o);
        cfg["experiment"] = "logistic";
        cfg["seed"] = c.seed;
        const std::string stem = "logistic_seed" + std::to_string(c.seed);
        write_trace(dir, stem + "_sketch", r.sketch, cfg, r.f_star);
        write_trace(dir, stem + "_exact", r.exact, cfg, r.f_star);
        if (r.gd) write_trace(dir, stem + "_gd", *r.gd, cfg, r.f_star);

        json line = {{"experiment", "logistic"},
                     {"seed", c.seed},
                     {"sketch_iters", r.sketch.records.size()},
                     {"sketch_final_gap", r.sketch.f_final - r.f_star},
                     {"sketch_median_iter_ns", median_iteration_ns(r.sketch)},
                     {"exact_iters", r.exact.records.size()},
                     {"exact_median_iter_ns", median_iteration_ns(r.exact)}};
        if (r.gd) {
            line["gd_iters"] = r.gd->records.size();
            line["gd_final_gap"] = r.gd->f_final - r.f_star;
        }
        print_json(line);
        if (!r.sketch.converged || !r.exact.converged) status = kNotConverged;
    }
    return status;
}

int bench_lasso(const Options& o, const fs::path& dir, int seeds) {
    int status = kConverged;
    for (int k = 0; k < seeds; ++k) {
        LassoBenchConfig c;
        c.n = pick<Index>(o.n, c.n);
        c.d = pick<Index>(o.d, c.d);
        c.rho = o.rho;
        c.scale = o.scale;
        c.seed = o.seed + static_cast<std::uint64_t>(k);
        c.sketch = parse_sketch_kind(o.sketch);
        c.m = o.m;
        c.delta = pick(o.delta, c.delta);
        c.tau0 = o.tau0;
        c.mu = o.mu;
        c.max_iters = pick(o.max_iters, c.max_iters);
        const LassoBench r = run_lasso_bench(c);

        json cfg = config_json(o);
        cfg["experiment"] = "lasso";
        cfg["seed"] = c.seed;
        const std::string stem = "lasso_seed" + std::to_string(c.seed);
        for (const auto& [name, run] : {std::pair{"_sketch", &r.sketch}, std::pair{"_exact", &r.exact}}) {
            const SolveResult flat = flatten_barrier(run->barrier);
            write_trace(dir, stem + name, flat, cfg, std::nullopt);
            write_file_atomic(dir / (stem + name + "_path.csv"), central_path_csv(run->barrier, &run->gaps));
            if (!flat.converged) status = kNotConverged;
        }
        print_json({{"experiment", "lasso"},
                    {"seed", c.seed},
                    {"sketch_duality_gap", r.sketch.gaps.back()},
                    {"sketch_wallclock_ns", r.sketch.total_wallclock_ns},
                    {"exact_duality_gap", r.exact.gaps.back()},
                    {"exact_wallclock_ns", r.exact.total_wallclock_ns}});
    }
    return status;
}

int cmd_bench(const Options& o) {
    const fs::path dir = require_out(o, "bench");
    const int seeds = pick(o.seeds, 1);
    int status = kConverged;
    if (o.experiment != "all" && o.experiment != "logistic" && o.experiment != "lasso")
        throw UsageError("unknown experiment '" + o.experiment + "' (expected logistic, lasso or all)");
    if (o.experiment != "lasso") status = std::max(status, bench_logistic(o, dir, seeds));
    if (o.experiment != "logistic") status = std::max(status, bench_lasso(o, dir, seeds));
    return status;
}

int cmd_lp_demo(const Options& o) {
    const fs::path dir = require_out(o, "lp-demo");
    const Index n = pick<Index>(o.n, 32), d = pick<Index>(o.d, 2);
    const LpInstance inst = gen_lp_instance(n, d, o.seed);
    const std::vector<Index> grid = parse_m_grid(o.m_grid, d);
    BarrierConfig config;
    config.tau0 = o.tau0;
    config.mu = o.mu;
    config.delta = pick(o.delta, 1e-6);
    config.inner = solver_config(o, 1e-9, 200);
    const LpDemoResult demo = run_lp_demo(inst, grid, pick(o.seeds, 3), config);

    write_file_atomic(dir / "exact_path.csv", lp_path_csv(demo.exact.run, inst.c));
    std::ostringstream deviations;
    deviations << "m,seed,deviation\n";
    bool converged = true;
    int index = 0;
    for (const auto& p : demo.sketched) {
        const int s = index++ % pick(o.seeds, 3);
        write_file_atomic(dir / ("path_m" + std::to_string(p.m) + "_seed" + std::to_string(s) + ".csv"),
                          lp_path_csv(p.run, inst.c));
        deviations << p.m << ',' << s << ',' << format_double(p.deviation) << '\n';
        for (const auto& e : p.run.trace) converged = converged && e.inner_converged;
    }
    write_file_atomic(dir / "deviations.csv", deviations.str());

    const std::vector<double> means = mean_deviation_by_m(demo, grid);
    json summary = {{"m_grid", grid}, {"mean_deviation", means}};
    summary["nonincreasing"] = std::is_sorted(means.rbegin(), means.rend());
    summary["exact_objective"] = inst.c.dot(demo.exact.run.x);
    print_json(summary);
    return converged ? kConverged : kNotConverged;
}

int cmd_sizing(const Options& o) {
    const Index d = pick<Index>(o.d, 0);
    if (d < 1) throw UsageError("sizing: --d is required");
    const ProblemFamily family = parse_problem_family(o.family);
    if (family == ProblemFamily::portfolio) {
        const Index s = pick(o.s, portfolio_sparsity(d));
        std::cout << "s=" << s << '\n';
        std::cout << "m=" << portfolio_sketch_size(s, d) << '\n';
        return kConverged;
    }
    const std::optional<double> eps = o.epsilon > 0.0 ? std::optional<double>(o.epsilon) : std::nullopt;
    const std::optional<Index> n = o.n > 0 ? std::optional<Index>(o.n) : std::nullopt;
    std::cout << "m=" << sketch_size_unconstrained(d, eps, 6.0, n) << '\n';
    if (o.s > 0 && o.radius > 0.0 && o.n > 0) {
        const GlmKind kind = family == ProblemFamily::logistic_glm ? GlmKind::logistic : GlmKind::square;
        const Matrix A = gen_correlated_gaussian(o.n, d, o.rho, o.scale, o.seed);
        const L1SizingReport r = sketch_size_l1_glm(A, o.s, kind, o.radius);
        std::cout << "m_l1=" << r.m << '\n';
        std::cout << "curvature_ratio=" << format_double(r.curvature_ratio) << '\n';
        std::cout << "restricted_eigenvalue=" << format_double(r.restricted_eigenvalue) << '\n';
    }
    return kConverged;
}

// Turns `--config FILE` into leading --key=value arguments so that flags given
// on the command line override the file.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::vector<std::string> from_file;
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string path;
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a file name");
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            continue;
        }
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open config file '" + path + "'");
        for (const auto& [key, value] : parse_key_values(in)) from_file.push_back("--" + key + "=" + value);
        --i;
    }
    // CLI11 wants the subcommand name before its options.
    std::vector<std::string> out;
    auto first_positional = std::find_if(args.begin(), args.end(), [](const std::string& a) { return a.rfind("-", 0) != 0; });
    if (first_positional != args.end()) {
        out.push_back(*first_positional);
        args.erase(first_positional);
    }
    out.insert(out.end(), from_file.begin(), from_file.end());
    out.insert(out.end(), args.begin(), args.end());
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Newton Sketch solvers and benchmarks"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        sub->add_option("--family,--problem", o.family, "logistic | least_squares | portfolio | lp | lasso");
        sub->add_option("--n", o.n, "rows / observations (0: family default)");
        sub->add_option("--d", o.d, "dimension (0: family default)");
        sub->add_option("--m", o.m, "sketch rows (0: default rule)");
        sub->add_option("--sketch", o.sketch, "gaussian | rademacher | ros | rows | rows-l2 | identity");
        sub->add_option("--seed", o.seed);
        sub->add_option("--delta", o.delta, "tolerance (0: command default)");
        sub->add_option("--a", o.a, "Armijo parameter in (0, 1/2)");
        sub->add_option("--b", o.b, "backtracking factor in (0, 1)");
        sub->add_option("--mu", o.mu, "barrier growth factor");
        sub->add_option("--tau0", o.tau0, "initial barrier weight");
        sub->add_option("--rho", o.rho, "feature correlation");
        sub->add_option("--scale", o.scale, "feature variance");
        sub->add_option("--lambda", o.lambda, "regularization / risk weight (0: default)");
        sub->add_option("--radius", o.radius, "l1 radius (0: unconstrained)");
        sub->add_option("--epsilon", o.epsilon, "target sketch accuracy for sizing");
        sub->add_option("--s", o.s, "sparsity for sizing");
        sub->add_option("--n-max", o.n_max, "portfolio cap on n = d^3");
        sub->add_option("--max-iters", o.max_iters, "iteration cap (0: command default)");
        sub->add_option("--gd-iters", o.gd_iters, "gradient descent budget in bench (0 skips it)");
        sub->add_option("--seeds", o.seeds, "independent runs");
        sub->add_option("--strategy", o.strategy, "full | partial");
        sub->add_option("--lasso-form", o.lasso_form, "stacked | combined");
        sub->add_option("--m-grid", o.m_grid, "sketch sizes, e.g. d,4d,16d");
        sub->add_option("--experiment", o.experiment, "logistic | lasso | all");
        sub->add_option("--data", o.data, "design matrix CSV");
        sub->add_option("--labels", o.labels, "response CSV (single column)");
        sub->add_option("--out", o.out, "output directory");
        sub->add_flag("--no-reference", o.no_reference, "skip the reference optimum");
        sub->add_option("--config", "key=value file (handled before parsing)");
    };

    struct Command {
        const char* name;
        const char* help;
        int (*run)(const Options&);
    };
    const Command commands[] = {
        {"solve", "Newton Sketch on one problem instance", cmd_solve},
        {"barrier", "barrier method with sketched centering", cmd_barrier},
        {"bench", "logistic and Lasso reproductions", cmd_bench},
        {"lp-demo", "sketched and exact LP central paths", cmd_lp_demo},
        {"sizing", "sketch-size formulas", cmd_sizing},
    };
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        add_common(sub);
        subs.emplace_back(sub, &c);
    }

    try {
        std::vector<std::string> args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }

    for (const auto& [sub, command] : subs) {
        if (!sub->parsed()) continue;
        try {
            return command->run(o);
        } catch (const SolveError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kNotConverged;
        } catch (const BarrierError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kNotConverged;
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kUsage;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kUsage;
        }
    }
    return kUsage;
}
