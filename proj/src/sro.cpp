#include "sketchreg/sro.hpp"

#include "sketchreg/error.hpp"
#include "sketchreg/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace sketchreg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Threshold below which e_1 counts as exact relative to e_0.
constexpr double converged_ratio = 1e-8;

} // namespace

void Problem::validate() const {
    require(x.rows() >= 1 && x.cols() >= 1, "design matrix must be nonempty");
    require(y.size() == x.rows(), "response length does not match the design",
            ErrorCode::dimension_mismatch);
    require(x.allFinite() && y.allFinite(), "problem data must be finite", ErrorCode::numeric);
    require(reg.weights().size() == 0 || reg.weights().size() == x.cols(),
            "penalty weights do not match the design", ErrorCode::dimension_mismatch);
}

double Problem::objective(const Vector& beta) const {
    return 0.5 * (y - x * beta).squaredNorm() + reg.value(beta);
}

void SroConfig::validate() const {
    require(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
    require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    require(iterations >= 1, "iteration count N must be at least 1");
    require(sketch_size >= 0 && rank >= 0, "sketch size and rank must be nonnegative");
    solver.validate();
}

std::uint64_t sketch_seed(std::uint64_t master, int t) {
    return derive_seed(master, 0x5ce7c4, static_cast<std::uint64_t>(t));
}

Index resolve_sketch_size(const Problem& problem, const SroConfig& cfg) {
    if (cfg.sketch_size > 0) return cfg.sketch_size;
    Index r = cfg.rank;
    if (r == 0) {
        const auto q = column_basis(problem.x);
        r = std::max<Index>(1, q ? q->cols() : 1);
    }
    SketchBudget budget;
    budget.epsilon = cfg.epsilon();
    budget.delta = cfg.delta;
    budget.rank = r;
    budget.c_gaussian = cfg.c_gaussian;
    budget.c_sparse = cfg.c_sparse;
    return recommended_sketch_size(budget, cfg.embedding);
}

bool SroRun::converged() const {
    for (const auto& s : steps)
        if (!s.converged) return false;
    return true;
}

SolveResult direct_solve(const Problem& problem, const SolverConfig& cfg) {
    problem.validate();
    const auto gram = GramOperator::from_factor(problem.x);
    const QuadraticForm qf(gram, problem.x.transpose() * problem.y);
    return solve_quadratic(qf, problem.reg, cfg, Vector::Zero(problem.features()));
}

SolveResult reference_solve(const Problem& problem, const SolverConfig& cfg) {
    SolverConfig precise = cfg;
    precise.rel_tol = std::min(1e-12, cfg.rel_tol);
    precise.abs_tol = 0.0;
    precise.max_iters = 10 * cfg.max_iters;
    return direct_solve(problem, precise);
}

QuadraticForm isro_subproblem(std::shared_ptr<const GramOperator> sketched_gram,
                              const Problem& problem, const Vector& previous) {
    Vector b = sketched_gram->apply(previous);
    const Vector residual = problem.y - problem.x * previous;
    b.noalias() += problem.x.transpose() * residual;
    return QuadraticForm(std::move(sketched_gram), std::move(b));
}

namespace {

// Shared driver. `next_sketch(t)` returns the Gram operator for iteration t
// and reports the time it spent sketching.
template <class NextSketch>
SroRun run_iterations(const Problem& problem, const SroConfig& cfg, int iterations,
                      NextSketch&& next_sketch) {
    const auto t_start = Clock::now();
    SroRun run;
    run.iterates.push_back(Vector::Zero(problem.features()));
    for (int t = 1; t <= iterations; ++t) {
        const auto t_step = Clock::now();
        double sketch_secs = 0.0;
        auto gram = next_sketch(t, sketch_secs);
        const Vector& prev = run.iterates.back();
        const QuadraticForm qf = isro_subproblem(std::move(gram), problem, prev);
        // The first subproblem starts cold and follows the continuation path
        // for folded-concave penalties; later ones refine locally from β⁽ᵗ⁻¹⁾.
        const SolveResult res = t == 1 ? solve_quadratic(qf, problem.reg, cfg.solver, prev)
                                       : fista(qf, problem.reg, cfg.solver, prev);
        StepRecord rec;
        rec.solver_iterations = res.iterations;
        rec.converged = res.converged;
        rec.residual = res.residual;
        rec.objective = problem.objective(res.beta);
        rec.sketch_seconds = sketch_secs;
        run.iterates.push_back(res.beta);
        rec.seconds = seconds_since(t_step);
        run.steps.push_back(rec);
    }
    run.total_seconds = seconds_since(t_start);
    return run;
}

std::shared_ptr<const GramOperator> sketched_gram(const Problem& problem, const SketchOperator& p) {
    return GramOperator::from_factor(p.apply(problem.x));
}

SroRun single_sketch_run(const Problem& problem, const SroConfig& cfg, int iterations) {
    problem.validate();
    cfg.validate();
    const auto t0 = Clock::now();
    const Index rows = resolve_sketch_size(problem, cfg);
    const std::uint64_t seed = sketch_seed(cfg.seed, 1);
    const SketchOperator p = build_embedding(cfg.embedding, problem.samples(), rows, seed);
    const auto gram = sketched_gram(problem, p);
    const double setup = seconds_since(t0);

    SroRun run = run_iterations(problem, cfg, iterations, [&](int, double& secs) {
        secs = 0.0;
        return gram;
    });
    run.embedding = cfg.embedding;
    run.sketch_size = rows;
    run.sketch_seeds = {seed};
    run.setup_seconds = setup;
    run.total_seconds += setup;
    return run;
}

} // namespace

SroRun sro_solve(const Problem& problem, const SroConfig& cfg) {
    return single_sketch_run(problem, cfg, 1);
}

SroRun iterative_sro(const Problem& problem, const SroConfig& cfg) {
    return single_sketch_run(problem, cfg, cfg.iterations);
}

SroRun iterative_sro_ihs(const Problem& problem, const SroConfig& cfg) {
    problem.validate();
    cfg.validate();
    const auto t0 = Clock::now();
    const Index rows = resolve_sketch_size(problem, cfg);
    const double setup = seconds_since(t0);

    std::vector<std::uint64_t> seeds;
    SroRun run = run_iterations(problem, cfg, cfg.iterations, [&](int t, double& secs) {
        const auto ts = Clock::now();
        const std::uint64_t seed = sketch_seed(cfg.seed, t);
        seeds.push_back(seed);
        const SketchOperator p = build_embedding(cfg.embedding, problem.samples(), rows, seed);
        auto gram = sketched_gram(problem, p);
        secs = seconds_since(ts);
        return gram;
    });
    run.embedding = cfg.embedding;
    run.sketch_size = rows;
    run.sketch_seeds = std::move(seeds);
    run.setup_seconds = setup;
    run.total_seconds += setup;
    return run;
}

SroRun iterative_sro_with(const Problem& problem, const SketchOperator& sketch,
                          const SroConfig& cfg, int iterations) {
    problem.validate();
    cfg.validate();
    require(iterations >= 1, "iteration count N must be at least 1");
    require(sketch.cols() == problem.samples(), "sketch does not match the sample count",
            ErrorCode::dimension_mismatch);
    const auto t0 = Clock::now();
    const auto gram = sketched_gram(problem, sketch);
    const double setup = seconds_since(t0);
    SroRun run = run_iterations(problem, cfg, iterations, [&](int, double& secs) {
        secs = 0.0;
        return gram;
    });
    run.embedding = sketch.kind();
    run.sketch_size = sketch.rows();
    run.setup_seconds = setup;
    run.total_seconds += setup;
    return run;
}

std::vector<Vector> one_shot_probes(const Matrix& x, const Vector& beta_sketched,
                                    const Vector& beta_star) {
    require(beta_sketched.size() == x.cols() && beta_star.size() == x.cols(),
            "probe vectors do not match the design", ErrorCode::dimension_mismatch);
    const Vector delta = beta_sketched - beta_star;
    const double nd = (x * delta).norm();
    const double ns = (x * beta_star).norm();
    std::vector<Vector> out;
    if (nd > 0.0) out.push_back(delta);
    if (ns > 0.0) out.push_back(beta_star);
    if (nd > 0.0 && ns > 0.0) {
        out.push_back(beta_star / ns + delta / nd);
        out.push_back(beta_star / ns - delta / nd);
    }
    return out;
}

std::optional<LineFit> fit_line(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), "fit_line needs equally long inputs", ErrorCode::dimension_mismatch);
    double sx = 0, sy = 0;
    int count = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
        sx += x[i];
        sy += y[i];
        ++count;
    }
    if (count < 2) return std::nullopt;
    const double mx = sx / count;
    const double my = sy / count;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) return std::nullopt;
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.points = count;
    return fit;
}

ContractionReport measure_contraction(std::span<const double> errors) {
    ContractionReport rep;
    rep.errors.assign(errors.begin(), errors.end());
    if (errors.empty()) return rep;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t t = 1; t < errors.size(); ++t)
        rep.ratios.push_back(errors[t - 1] > 0.0 ? errors[t] / errors[t - 1] : nan);

    if (errors[0] == 0.0 || (errors.size() > 1 && errors[1] <= converged_ratio * errors[0])) {
        rep.already_converged = true;
        return rep;
    }
    std::vector<double> ts, logs;
    for (std::size_t t = 0; t < errors.size(); ++t) {
        if (errors[t] > 0.0) {
            ts.push_back(static_cast<double>(t));
            logs.push_back(std::log(errors[t]));
        }
    }
    if (const auto fit = fit_line(ts, logs)) {
        rep.log_slope = fit->slope;
        rep.r_squared = fit->r_squared;
        rep.fit_valid = true;
    }
    return rep;
}

ContractionReport measure_contraction(const SroRun& run, const Matrix& x, const Vector& beta_star) {
    std::vector<double> errors;
    errors.reserve(run.iterates.size());
    for (const Vector& b : run.iterates) errors.push_back((x * (b - beta_star)).norm());
    return measure_contraction(errors);
}

} // namespace sketchreg
