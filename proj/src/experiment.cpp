#include "sketchreg/experiment.hpp"

#include "sketchreg/error.hpp"
#include "sketchreg/metrics.hpp"
#include "sketchreg/rng.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace sketchreg {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

// Stream tags for seeds derived from a trial seed.
constexpr std::uint64_t sketch_tag = 0x5e7c;
constexpr std::uint64_t probe_tag = 0xd157;

} // namespace

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::glasso_decay: return "glasso_decay";
    case ExperimentKind::ridge_decay: return "ridge_decay";
    case ExperimentKind::lasso_estimation: return "lasso_estimation";
    case ExperimentKind::rate_scan: return "rate_scan";
    case ExperimentKind::distortion_check: return "distortion_check";
    case ExperimentKind::timing: return "timing";
    }
    return "glasso_decay";
}

ExperimentKind parse_experiment_kind(std::string_view text) {
    for (auto k : {ExperimentKind::glasso_decay, ExperimentKind::ridge_decay,
                   ExperimentKind::lasso_estimation, ExperimentKind::rate_scan,
                   ExperimentKind::distortion_check, ExperimentKind::timing})
        if (text == to_string(k)) return k;
    fail(ErrorCode::invalid_argument, "unknown experiment: " + std::string(text));
}

std::string_view to_string(LambdaRule rule) {
    switch (rule) {
    case LambdaRule::fixed: return "fixed";
    case LambdaRule::sqrt_log_d_over_n: return "sqrt_log_d_over_n";
    case LambdaRule::sqrt_s_log_d_over_n: return "sqrt_s_log_d_over_n";
    }
    return "fixed";
}

LambdaRule parse_lambda_rule(std::string_view text) {
    if (text == "fixed") return LambdaRule::fixed;
    if (text == "sqrt_log_d_over_n") return LambdaRule::sqrt_log_d_over_n;
    if (text == "sqrt_s_log_d_over_n") return LambdaRule::sqrt_s_log_d_over_n;
    fail(ErrorCode::invalid_argument, "unknown lambda rule: " + std::string(text));
}

std::string_view to_string(GammaBase base) {
    switch (base) {
    case GammaBase::rank: return "rank";
    case GammaBase::d: return "d";
    case GammaBase::recommended: return "recommended";
    }
    return "d";
}

GammaBase parse_gamma_base(std::string_view text) {
    if (text == "rank") return GammaBase::rank;
    if (text == "d") return GammaBase::d;
    if (text == "recommended") return GammaBase::recommended;
    fail(ErrorCode::invalid_argument, "unknown gamma base: " + std::string(text));
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
    ExperimentConfig c;
    c.experiment = kind;
    InstanceSpec& in = c.instance;
    // Decay experiments resolve every subproblem to rounding level so that
    // the error sequence is not cut off by the solver tolerance.
    SolverConfig tight;
    tight.rel_tol = 1e-17;
    tight.abs_tol = 0.0;

    switch (kind) {
    case ExperimentKind::glasso_decay:
        in.design = {4000, 120, 0, DesignKind::dense_gaussian, 1};
        in.signal = SignalKind::zero;
        in.penalty = "fused";
        in.estimation_mode = false;
        c.lambda_rule = LambdaRule::sqrt_log_d_over_n;
        c.gamma = {2, 3, 4, 6, 8};
        c.gamma_base = GammaBase::d;
        c.sro.iterations = 10;
        c.sro.solver = tight;
        break;
    case ExperimentKind::ridge_decay:
        in.design = {1000, 2000, 10, DesignKind::low_rank_svd, 1};
        in.signal = SignalKind::gaussian;
        in.penalty = "ridge";
        in.estimation_mode = false;
        c.lambda_rule = LambdaRule::sqrt_log_d_over_n;
        c.gamma = {1};
        c.gamma_base = GammaBase::recommended;
        c.sro.iterations = 8;
        c.sro.solver = tight;
        break;
    case ExperimentKind::lasso_estimation:
        in.design = {1000, 5000, 10, DesignKind::low_rank_rip, 1};
        in.scale_by_sqrt_n = false;
        in.penalty = "l1";
        c.lambda_rule = LambdaRule::sqrt_s_log_d_over_n;
        c.lambda_scale = 0.1;
        c.gamma = {16};
        c.gamma_base = GammaBase::rank;
        break;
    case ExperimentKind::rate_scan:
        in.design = {500, 20, 0, DesignKind::dense_gaussian, 1};
        in.penalty = "l1";
        c.lambda_rule = LambdaRule::sqrt_s_log_d_over_n;
        c.lambda_scale = 0.1;
        c.gamma = {20};
        c.gamma_base = GammaBase::d;
        c.n_grid = {500, 1000, 2000, 4000};
        break;
    case ExperimentKind::distortion_check:
        in.design = {2000, 200, 10, DesignKind::low_rank_svd, 1};
        in.signal = SignalKind::zero;
        in.penalty = "none";
        in.estimation_mode = false;
        c.gamma = {1};
        c.gamma_base = GammaBase::recommended;
        c.trials = 50;
        break;
    case ExperimentKind::timing:
        in.design = {20000, 100, 0, DesignKind::dense_gaussian, 1};
        in.signal = SignalKind::zero;
        in.penalty = "fused";
        in.estimation_mode = false;
        c.lambda_rule = LambdaRule::sqrt_log_d_over_n;
        c.gamma = {4};
        c.gamma_base = GammaBase::d;
        c.trials = 1;
        c.repeats = 3;
        break;
    }
    return c;
}

void ExperimentConfig::validate() const {
    InstanceSpec probe = instance;
    if (experiment == ExperimentKind::rate_scan && !n_grid.empty()) probe.design.n = n_grid.front();
    probe.validate();
    sro.validate();
    require(lambda_scale >= 0.0, "lambda_scale must be nonnegative");
    require(trials >= 1, "trials must be at least 1");
    require(threads >= 1, "threads must be at least 1");
    require(repeats >= 1, "repeats must be at least 1");
    require(probes >= 0, "probes must be nonnegative");
    require(!gamma.empty(), "gamma grid must not be empty");
    for (double g : gamma) require(g > 0.0 && std::isfinite(g), "gamma values must be positive");
    if (experiment == ExperimentKind::rate_scan) {
        require(n_grid.size() >= 4, "rate_scan needs at least 4 sample sizes");
        for (Index n : n_grid) require(n >= 1, "sample sizes must be positive");
    }
}

namespace {

template <class T>
std::string join(const std::vector<T>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) out += format_double(values[i]);
        else out += std::to_string(values[i]);
    }
    return out;
}

std::vector<std::string_view> split_list(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto pos = text.find(',', start);
        const auto item = text.substr(start, pos == std::string_view::npos ? pos : pos - start);
        const auto first = item.find_first_not_of(' ');
        if (first != std::string_view::npos) out.push_back(item.substr(first, item.find_last_not_of(' ') - first + 1));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

} // namespace

KeyValues ExperimentConfig::to_key_values() const {
    KeyValues kv;
    kv["experiment"] = std::string(to_string(experiment));
    kv["design"] = std::string(to_string(instance.design.kind));
    kv["n"] = std::to_string(instance.design.n);
    kv["d"] = std::to_string(instance.design.d);
    kv["rank"] = std::to_string(instance.design.rank);
    kv["signal"] = std::string(to_string(instance.signal));
    kv["sparsity"] = std::to_string(instance.sparsity);
    kv["noise"] = format_double(instance.noise);
    kv["scale_by_sqrt_n"] = instance.scale_by_sqrt_n ? "1" : "0";
    kv["estimation_mode"] = instance.estimation_mode ? "1" : "0";
    kv["penalty"] = instance.penalty;
    kv["lambda"] = format_double(instance.lambda);
    kv["lambda_rule"] = std::string(to_string(lambda_rule));
    kv["lambda_scale"] = format_double(lambda_scale);
    kv["shape"] = format_double(instance.shape);
    kv["embedding"] = std::string(to_string(sro.embedding));
    kv["rho"] = format_double(sro.rho);
    kv["delta"] = format_double(sro.delta);
    kv["c_gaussian"] = format_double(sro.c_gaussian);
    kv["c_sparse"] = format_double(sro.c_sparse);
    kv["sketch_rank"] = std::to_string(sro.rank);
    kv["iterations"] = std::to_string(sro.iterations);
    kv["solver.max_iters"] = std::to_string(sro.solver.max_iters);
    kv["solver.rel_tol"] = format_double(sro.solver.rel_tol);
    kv["solver.abs_tol"] = format_double(sro.solver.abs_tol);
    kv["solver.eta"] = format_double(sro.solver.eta);
    kv["gamma"] = join(gamma);
    kv["gamma_base"] = std::string(to_string(gamma_base));
    kv["n_grid"] = join(n_grid);
    kv["trials"] = std::to_string(trials);
    kv["seed"] = std::to_string(seed);
    kv["threads"] = std::to_string(threads);
    kv["repeats"] = std::to_string(repeats);
    kv["probes"] = std::to_string(probes);
    kv["schema_version"] = std::to_string(schema_version);
    kv["rng"] = Rng::name;
    return kv;
}

void ExperimentConfig::set(const std::string& key, const std::string& v) {
    auto count = [&](std::string_view what) { return static_cast<int>(parse_int(v, what)); };
    if (key == "experiment") {
        require(parse_experiment_kind(v) == experiment, "experiment kind cannot change after defaults");
    } else if (key == "design") instance.design.kind = parse_design_kind(v);
    else if (key == "n") instance.design.n = parse_int(v, key);
    else if (key == "d") instance.design.d = parse_int(v, key);
    else if (key == "rank") instance.design.rank = parse_int(v, key);
    else if (key == "signal") instance.signal = parse_signal_kind(v);
    else if (key == "sparsity") instance.sparsity = parse_int(v, key);
    else if (key == "noise") instance.noise = parse_double(v, key);
    else if (key == "scale_by_sqrt_n") instance.scale_by_sqrt_n = parse_bool(v, key);
    else if (key == "estimation_mode") instance.estimation_mode = parse_bool(v, key);
    else if (key == "penalty") instance.penalty = v;
    else if (key == "lambda") instance.lambda = parse_double(v, key);
    else if (key == "lambda_rule") lambda_rule = parse_lambda_rule(v);
    else if (key == "lambda_scale") lambda_scale = parse_double(v, key);
    else if (key == "shape") instance.shape = parse_double(v, key);
    else if (key == "embedding") sro.embedding = parse_embedding_kind(v);
    else if (key == "rho") sro.rho = parse_double(v, key);
    else if (key == "delta") sro.delta = parse_double(v, key);
    else if (key == "c_gaussian") sro.c_gaussian = parse_double(v, key);
    else if (key == "c_sparse") sro.c_sparse = parse_double(v, key);
    else if (key == "sketch_rank") sro.rank = parse_int(v, key);
    else if (key == "iterations") sro.iterations = count(key);
    else if (key == "solver.max_iters") sro.solver.max_iters = count(key);
    else if (key == "solver.rel_tol") sro.solver.rel_tol = parse_double(v, key);
    else if (key == "solver.abs_tol") sro.solver.abs_tol = parse_double(v, key);
    else if (key == "solver.eta") sro.solver.eta = parse_double(v, key);
    else if (key == "gamma") {
        gamma.clear();
        for (auto item : split_list(v)) gamma.push_back(parse_double(item, key));
    } else if (key == "gamma_base") gamma_base = parse_gamma_base(v);
    else if (key == "n_grid") {
        n_grid.clear();
        for (auto item : split_list(v)) n_grid.push_back(parse_int(item, key));
    } else if (key == "trials") trials = count(key);
    else if (key == "seed") seed = parse_uint(v, key);
    else if (key == "threads") threads = count(key);
    else if (key == "repeats") repeats = count(key);
    else if (key == "probes") probes = count(key);
    else if (key == "schema_version") {
        require(parse_int(v, key) == schema_version,
                "config written for schema version " + v + ", this build reads " +
                    std::to_string(schema_version));
    } else if (key == "rng") {
        require(v == Rng::name, "config was produced with random stream " + v + ", this build uses " +
                                    std::string(Rng::name));
    } else {
        fail(ErrorCode::invalid_argument, "unknown config key: " + key);
    }
}

ExperimentConfig ExperimentConfig::from_key_values(const KeyValues& kv) {
    const auto it = kv.find("experiment");
    require(it != kv.end(), "config needs an `experiment` key");
    ExperimentConfig c = defaults(parse_experiment_kind(it->second));
    for (const auto& [k, v] : kv) c.set(k, v);
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    return ExperimentConfig::from_key_values(read_key_values(path));
}

std::uint64_t trial_seed(std::uint64_t master, int trial, double grid_value) {
    return derive_seed(master, static_cast<std::uint64_t>(trial), std::bit_cast<std::uint64_t>(grid_value));
}

double resolve_lambda(const ExperimentConfig& cfg, Index n, Index d, Index s) {
    const double logd = std::log(static_cast<double>(d));
    switch (cfg.lambda_rule) {
    case LambdaRule::fixed: return cfg.instance.lambda;
    case LambdaRule::sqrt_log_d_over_n: return cfg.lambda_scale * std::sqrt(logd / static_cast<double>(n));
    case LambdaRule::sqrt_s_log_d_over_n:
        return cfg.lambda_scale * std::sqrt(static_cast<double>(s) * logd / static_cast<double>(n));
    }
    return cfg.instance.lambda;
}

InstanceSpec trial_instance(const ExperimentConfig& cfg, std::uint64_t seed, Index n) {
    InstanceSpec spec = cfg.instance;
    spec.design.n = n;
    spec.design.seed = seed;
    spec.lambda = resolve_lambda(cfg, n, spec.design.d, spec.resolved_sparsity());
    return spec;
}

Index sketch_rows(const ExperimentConfig& cfg, double gamma, const InstanceSpec& spec,
                  const Problem& problem) {
    Index base = spec.design.d;
    if (cfg.gamma_base == GammaBase::recommended) {
        SroConfig sc = cfg.sro;
        sc.sketch_size = 0;
        base = resolve_sketch_size(problem, sc);
    } else if (cfg.gamma_base == GammaBase::rank) {
        base = spec.design.kind == DesignKind::dense_gaussian ? std::min(spec.design.n, spec.design.d)
                                                              : spec.design.rank;
    }
    return std::max<Index>(1, static_cast<Index>(std::ceil(gamma * static_cast<double>(base) - 1e-9)));
}

namespace {

// Runs task(i) for i in [0, count) on up to `threads` workers and returns the
// results in index order.
template <class T, class Task>
std::vector<T> run_ordered(std::size_t count, int threads, Task&& task) {
    std::vector<std::optional<T>> slots(count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                slots[i].emplace(task(i));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    const int k = std::max(1, std::min<int>(threads, static_cast<int>(count)));
    if (k == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < k; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    std::vector<T> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

struct TrialTask {
    double grid;
    int trial;
};

std::vector<TrialTask> grid_tasks(const std::vector<double>& grid, int trials) {
    std::vector<TrialTask> tasks;
    for (int t = 0; t < trials; ++t)
        for (double g : grid) tasks.push_back({g, t});
    return tasks;
}

SroConfig trial_sro(const ExperimentConfig& cfg, std::uint64_t seed, Index rows) {
    SroConfig sc = cfg.sro;
    sc.sketch_size = rows;
    sc.seed = derive_seed(seed, sketch_tag);
    return sc;
}

std::string status_of(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) return to_string(err->code());
    return "internal";
}

std::vector<DecayRow> decay_trial(const ExperimentConfig& cfg, const TrialTask& task) {
    const std::uint64_t seed = trial_seed(cfg.seed, task.trial, task.grid);
    std::vector<DecayRow> rows;
    DecayRow base;
    base.trial = task.trial;
    base.seed = seed;
    base.gamma = task.grid;
    try {
        const InstanceSpec spec = trial_instance(cfg, seed, cfg.instance.design.n);
        const ProblemInstance inst = generate_instance(spec);
        const Problem pb = inst.solver_problem();
        const SolveResult ref = reference_solve(pb, cfg.sro.solver);
        const Vector beta_star = inst.to_coefficients(ref.beta);
        const SroConfig sc = trial_sro(cfg, seed, sketch_rows(cfg, task.grid, spec, pb));
        const SroRun run = iterative_sro(pb, sc);
        base.sketch_size = run.sketch_size;
        const double n = static_cast<double>(inst.x.rows());
        for (std::size_t t = 0; t < run.iterates.size(); ++t) {
            DecayRow r = base;
            r.iter = static_cast<int>(t);
            const Vector diff = inst.to_coefficients(run.iterates[t]) - beta_star;
            r.x_err_sq_per_n = (inst.x * diff).squaredNorm() / n;
            r.l2_err = diff.norm();
            r.obj = pb.objective(run.iterates[t]);
            r.converged = t == 0 ? true : run.steps[t - 1].converged;
            r.ms = t == 0 ? 1e3 * run.setup_seconds : 1e3 * run.steps[t - 1].seconds;
            rows.push_back(r);
        }
    } catch (const std::exception& e) {
        DecayRow r = base;
        r.x_err_sq_per_n = r.l2_err = r.obj = nan_value;
        r.status = status_of(e);
        rows.push_back(r);
    }
    return rows;
}

EstimationRow estimation_row(const EstimationRow& base, const std::string& method,
                             const ProblemInstance& inst, const Problem& pb, const Vector& solver_beta,
                             const Vector& beta_star, bool converged, double ms) {
    EstimationRow r = base;
    r.method = method;
    const Vector beta = inst.to_coefficients(solver_beta);
    const ErrorReport vs_star = error_report(beta, beta_star, inst.x, inst.support);
    r.x_err_sq_per_n = vs_star.x_seminorm_sq_per_n;
    r.l2_err = vs_star.l2_error;
    r.l2_to_betabar = (beta - inst.beta_bar).norm();
    r.precision = vs_star.precision;
    r.recall = vs_star.recall;
    r.obj = pb.objective(solver_beta);
    r.converged = converged;
    r.ms = ms;
    return r;
}

const std::vector<std::string> estimation_methods = {"exact", "sro", "isro", "isro_ihs"};

std::vector<EstimationRow> estimation_trial(const ExperimentConfig& cfg, const TrialTask& task) {
    const std::uint64_t seed = trial_seed(cfg.seed, task.trial, task.grid);
    EstimationRow base;
    base.trial = task.trial;
    base.seed = seed;
    base.gamma = task.grid;
    std::vector<EstimationRow> rows;
    try {
        const InstanceSpec spec = trial_instance(cfg, seed, cfg.instance.design.n);
        const ProblemInstance inst = generate_instance(spec);
        const Problem pb = inst.solver_problem();
        const Vector beta_star = inst.to_coefficients(reference_solve(pb, cfg.sro.solver).beta);
        const SroConfig sc = trial_sro(cfg, seed, sketch_rows(cfg, task.grid, spec, pb));
        base.sketch_size = sc.sketch_size;

        auto t0 = Clock::now();
        const SolveResult exact = direct_solve(pb, cfg.sro.solver);
        rows.push_back(estimation_row(base, "exact", inst, pb, exact.beta, beta_star, exact.converged,
                                      ms_since(t0)));
        t0 = Clock::now();
        const SroRun sro = sro_solve(pb, sc);
        rows.push_back(estimation_row(base, "sro", inst, pb, sro.result(), beta_star, sro.converged(),
                                      ms_since(t0)));
        t0 = Clock::now();
        const SroRun isro = iterative_sro(pb, sc);
        rows.push_back(estimation_row(base, "isro", inst, pb, isro.result(), beta_star,
                                      isro.converged(), ms_since(t0)));
        t0 = Clock::now();
        const SroRun ihs = iterative_sro_ihs(pb, sc);
        rows.push_back(estimation_row(base, "isro_ihs", inst, pb, ihs.result(), beta_star,
                                      ihs.converged(), ms_since(t0)));
    } catch (const std::exception& e) {
        rows.clear();
        for (const auto& m : estimation_methods) {
            EstimationRow r = base;
            r.method = m;
            r.x_err_sq_per_n = r.l2_err = r.l2_to_betabar = r.precision = r.recall = r.obj = nan_value;
            r.status = status_of(e);
            rows.push_back(r);
        }
    }
    return rows;
}

const std::vector<std::string> rate_methods = {"exact", "isro"};

std::vector<RateRow> rate_trial(const ExperimentConfig& cfg, const TrialTask& task) {
    const Index n = static_cast<Index>(task.grid);
    const std::uint64_t seed = trial_seed(cfg.seed, task.trial, task.grid);
    RateRow base;
    base.trial = task.trial;
    base.seed = seed;
    base.n = n;
    std::vector<RateRow> rows;
    try {
        const InstanceSpec spec = trial_instance(cfg, seed, n);
        const ProblemInstance inst = generate_instance(spec);
        const Problem pb = inst.solver_problem();
        const SroConfig sc = trial_sro(cfg, seed, sketch_rows(cfg, cfg.gamma.front(), spec, pb));
        base.sketch_size = sc.sketch_size;

        auto t0 = Clock::now();
        const SolveResult exact = direct_solve(pb, cfg.sro.solver);
        RateRow r = base;
        r.method = "exact";
        r.l2_to_betabar = (inst.to_coefficients(exact.beta) - inst.beta_bar).norm();
        r.converged = exact.converged;
        r.ms = ms_since(t0);
        rows.push_back(r);

        t0 = Clock::now();
        const SroRun run = iterative_sro(pb, sc);
        r = base;
        r.method = "isro";
        r.l2_to_betabar = (inst.to_coefficients(run.result()) - inst.beta_bar).norm();
        r.converged = run.converged();
        r.ms = ms_since(t0);
        rows.push_back(r);
    } catch (const std::exception& e) {
        rows.clear();
        for (const auto& m : rate_methods) {
            RateRow r = base;
            r.method = m;
            r.l2_to_betabar = nan_value;
            r.status = status_of(e);
            rows.push_back(r);
        }
    }
    return rows;
}

} // namespace

std::vector<RateFit> fit_rates(const std::vector<Index>& n_grid, const std::vector<RateRow>& rows) {
    std::vector<RateFit> fits;
    for (const auto& method : rate_methods) {
        std::vector<double> logn, logerr;
        for (Index n : n_grid) {
            double sum = 0.0;
            int count = 0;
            for (const auto& r : rows) {
                if (r.n != n || r.method != method || r.status != "ok" || !std::isfinite(r.l2_to_betabar))
                    continue;
                sum += r.l2_to_betabar;
                ++count;
            }
            if (count == 0 || !(sum > 0.0)) continue;
            logn.push_back(std::log(static_cast<double>(n)));
            logerr.push_back(std::log(sum / count));
        }
        RateFit f;
        f.method = method;
        if (const auto fit = fit_line(logn, logerr)) {
            f.slope = fit->slope;
            f.intercept = fit->intercept;
            f.r_squared = fit->r_squared;
            f.points = fit->points;
            f.valid = true;
        } else {
            f.slope = f.intercept = f.r_squared = nan_value;
            f.points = static_cast<int>(logn.size());
        }
        fits.push_back(f);
    }
    return fits;
}

namespace {

DistortionRow distortion_trial(const ExperimentConfig& cfg, const TrialTask& task) {
    const std::uint64_t seed = trial_seed(cfg.seed, task.trial, task.grid);
    DistortionRow r;
    r.trial = task.trial;
    r.seed = seed;
    r.gamma = task.grid;
    r.epsilon = cfg.sro.epsilon();
    const auto t0 = Clock::now();
    try {
        const InstanceSpec spec = trial_instance(cfg, seed, cfg.instance.design.n);
        const ProblemInstance inst = generate_instance(spec);
        const Problem pb = inst.solver_problem();
        const SroConfig sc = trial_sro(cfg, seed, sketch_rows(cfg, task.grid, spec, pb));
        r.sketch_size = sc.sketch_size;
        const SketchOperator p =
            build_embedding(sc.embedding, inst.x.rows(), sc.sketch_size, sketch_seed(sc.seed, 1));
        r.probe_distortion = empirical_distortion(p, inst.x, cfg.probes, derive_seed(seed, probe_tag));
        r.subspace_distortion = subspace_distortion(p, inst.x);
        r.within_epsilon = r.probe_distortion <= r.epsilon;
    } catch (const std::exception& e) {
        r.probe_distortion = r.subspace_distortion = nan_value;
        r.status = status_of(e);
    }
    r.ms = ms_since(t0);
    return r;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<TimingRow> timing_rows(const ExperimentConfig& cfg) {
    const double gamma = cfg.gamma.front();
    const std::uint64_t seed = trial_seed(cfg.seed, 0, gamma);
    const InstanceSpec spec = trial_instance(cfg, seed, cfg.instance.design.n);
    const ProblemInstance inst = generate_instance(spec);
    const Problem pb = inst.solver_problem();
    const SroConfig sc = trial_sro(cfg, seed, sketch_rows(cfg, gamma, spec, pb));
    require(inst.x.rows() >= 10 * sc.sketch_size,
            "timing needs n >= 10 * sketch size (n = " + std::to_string(inst.x.rows()) +
                ", sketch size = " + std::to_string(sc.sketch_size) + ")");
    const Vector beta_star = inst.to_coefficients(reference_solve(pb, cfg.sro.solver).beta);
    const double n = static_cast<double>(inst.x.rows());

    std::vector<TimingRow> out;
    auto measure = [&](const std::string& method, auto&& body) {
        TimingRow row;
        row.method = method;
        row.sketch_size = sc.sketch_size;
        row.repeats = cfg.repeats;
        std::vector<double> times;
        std::optional<Vector> beta;
        for (int k = 0; k < cfg.repeats; ++k) {
            const auto t0 = Clock::now();
            auto b = body();
            times.push_back(ms_since(t0));
            beta = std::move(b);
        }
        if (beta && beta->size() == pb.features()) {
            const Vector diff = inst.to_coefficients(*beta) - beta_star;
            row.x_err_sq_per_n = (inst.x * diff).squaredNorm() / n;
            row.l2_err = diff.norm();
        } else {
            row.x_err_sq_per_n = row.l2_err = nan_value;
        }
        row.min_ms = *std::min_element(times.begin(), times.end());
        row.median_ms = median(times);
        out.push_back(row);
    };
    measure("exact", [&] { return direct_solve(pb, cfg.sro.solver).beta; });
    measure("sro", [&] { return sro_solve(pb, sc).result(); });
    measure("isro", [&] { return iterative_sro(pb, sc).result(); });
    measure("isro_ihs", [&] { return iterative_sro_ihs(pb, sc).result(); });
    for (auto kind : {EmbeddingKind::gaussian, EmbeddingKind::sparse}) {
        measure("sketch_" + std::string(to_string(kind)), [&] {
            const SketchOperator p = build_embedding(kind, inst.x.rows(), sc.sketch_size, sketch_seed(sc.seed, 1));
            const Matrix xt = p.apply(inst.x);
            return Vector(xt.col(0));
        });
    }
    return out;
}

// Accumulates metric samples keyed by (grid, key, metric) in first-seen order.
class SummaryBuilder {
public:
    void add(double grid, const std::string& key, const std::string& metric, double value) {
        Slot& s = slot(grid, key, metric);
        if (std::isfinite(value)) s.values.push_back(value);
    }

    std::vector<SummaryRow> rows() const {
        std::vector<SummaryRow> out;
        for (const auto& s : slots_) {
            SummaryRow r;
            r.grid = s.grid;
            r.key = s.key;
            r.metric = s.metric;
            r.count = static_cast<int>(s.values.size());
            if (r.count == 0) {
                r.mean = r.std = nan_value;
            } else {
                double sum = 0.0;
                for (double v : s.values) sum += v;
                r.mean = sum / r.count;
                double ss = 0.0;
                for (double v : s.values) ss += (v - r.mean) * (v - r.mean);
                r.std = r.count > 1 ? std::sqrt(ss / (r.count - 1)) : 0.0;
            }
            out.push_back(r);
        }
        return out;
    }

private:
    struct Slot {
        double grid;
        std::string key;
        std::string metric;
        std::vector<double> values;
    };

    Slot& slot(double grid, const std::string& key, const std::string& metric) {
        for (auto& s : slots_)
            if (s.grid == grid && s.key == key && s.metric == metric) return s;
        slots_.push_back({grid, key, metric, {}});
        return slots_.back();
    }

    std::vector<Slot> slots_;
};

double safe_log(double v) { return v > 0.0 ? std::log(v) : nan_value; }

std::string csv_bool(bool b) { return b ? "1" : "0"; }

std::string decay_plot(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "set datafile separator ','\n"
       << "set terminal pngcairo size 900,600\n"
       << "set output 'decay.png'\n"
       << "set logscale y\n"
       << "set key top right\n"
       << "set xlabel 'iteration t'\n"
       << "set ylabel '||X(beta_t - beta*)||^2 / n'\n"
       << "set title '" << to_string(cfg.experiment) << ": mean approximation error'\n"
       << "plot for [g in \"" ;
    for (std::size_t i = 0; i < cfg.gamma.size(); ++i) os << (i ? " " : "") << format_double(cfg.gamma[i]);
    os << "\"] 'summary.csv' using ((strcol(4) eq 'x_err_sq_per_n' && $2 == real(g)) ? $3 : NaN):6 "
          "skip 1 with linespoints title sprintf('gamma = %s', g)\n";
    return os.str();
}

std::string estimation_plot() {
    return "set datafile separator ','\n"
           "set terminal pngcairo size 900,600\n"
           "set output 'estimation.png'\n"
           "set xlabel 'gamma'\n"
           "set ylabel '||beta - beta_bar||_2'\n"
           "set title 'lasso_estimation: mean l2 error to beta_bar'\n"
           "plot for [m in \"exact sro isro isro_ihs\"] 'summary.csv' using "
           "((strcol(4) eq 'l2_to_betabar' && strcol(3) eq m) ? $2 : NaN):6:7 skip 1 "
           "with yerrorlines title m\n";
}

std::string rate_plot() {
    return "set datafile separator ','\n"
           "set terminal pngcairo size 900,600\n"
           "set output 'rate.png'\n"
           "set logscale xy\n"
           "set xlabel 'n'\n"
           "set ylabel 'mean ||beta - beta_bar||_2'\n"
           "set title 'rate_scan (reference slope -1/2)'\n"
           "plot for [m in \"exact isro\"] 'summary.csv' using "
           "((strcol(4) eq 'l2_to_betabar' && strcol(3) eq m) ? $2 : NaN):6 skip 1 "
           "with linespoints title m\n";
}

std::string distortion_plot() {
    return "set datafile separator ','\n"
           "set terminal pngcairo size 900,600\n"
           "set output 'distortion.png'\n"
           "set xlabel 'trial'\n"
           "set ylabel 'distortion'\n"
           "plot 'distortion.csv' using 2:8 skip 1 with points title 'probe', "
           "'distortion.csv' using 2:9 skip 1 with points title 'subspace', "
           "'distortion.csv' using 2:7 skip 1 with lines title 'epsilon'\n";
}

std::string timing_plot() {
    return "set datafile separator ','\n"
           "set terminal pngcairo size 900,600\n"
           "set output 'timing.png'\n"
           "set style data histograms\n"
           "set style fill solid 0.6\n"
           "set ylabel 'median wall-clock (ms)'\n"
           "plot 'timing.csv' using 7:xtic(1) skip 1 title 'median'\n";
}

} // namespace

std::string decay_csv(const std::vector<DecayRow>& rows, std::string_view experiment) {
    std::string out = "experiment,trial,seed,gamma,sketch_size,iter,x_err_sq_per_n,l2_err,obj,converged,status,ms\n";
    for (const auto& r : rows) {
        out += std::string(experiment) + ',' + std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',' +
               format_double(r.gamma) + ',' + std::to_string(r.sketch_size) + ',' + std::to_string(r.iter) +
               ',' + format_double(r.x_err_sq_per_n) + ',' + format_double(r.l2_err) + ',' +
               format_double(r.obj) + ',' + csv_bool(r.converged) + ',' + r.status + ',' +
               format_double(r.ms) + '\n';
    }
    return out;
}

std::string estimation_csv(const std::vector<EstimationRow>& rows, std::string_view experiment) {
    std::string out = "experiment,trial,seed,gamma,sketch_size,method,x_err_sq_per_n,l2_err,l2_to_betabar,"
                      "precision,recall,obj,converged,status,ms\n";
    for (const auto& r : rows) {
        out += std::string(experiment) + ',' + std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',' +
               format_double(r.gamma) + ',' + std::to_string(r.sketch_size) + ',' + r.method + ',' +
               format_double(r.x_err_sq_per_n) + ',' + format_double(r.l2_err) + ',' +
               format_double(r.l2_to_betabar) + ',' + format_double(r.precision) + ',' +
               format_double(r.recall) + ',' + format_double(r.obj) + ',' + csv_bool(r.converged) + ',' +
               r.status + ',' + format_double(r.ms) + '\n';
    }
    return out;
}

std::string rate_csv(const std::vector<RateRow>& rows, std::string_view experiment) {
    std::string out = "experiment,trial,seed,n,sketch_size,method,l2_to_betabar,converged,status,ms\n";
    for (const auto& r : rows) {
        out += std::string(experiment) + ',' + std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',' +
               std::to_string(r.n) + ',' + std::to_string(r.sketch_size) + ',' + r.method + ',' +
               format_double(r.l2_to_betabar) + ',' + csv_bool(r.converged) + ',' + r.status + ',' +
               format_double(r.ms) + '\n';
    }
    return out;
}

std::string rate_fit_csv(const std::vector<RateFit>& fits) {
    std::string out = "method,slope,intercept,r_squared,points,valid\n";
    for (const auto& f : fits) {
        out += f.method + ',' + format_double(f.slope) + ',' + format_double(f.intercept) + ',' +
               format_double(f.r_squared) + ',' + std::to_string(f.points) + ',' + csv_bool(f.valid) + '\n';
    }
    return out;
}

std::string distortion_csv(const std::vector<DistortionRow>& rows, std::string_view experiment) {
    std::string out = "experiment,trial,seed,gamma,sketch_size,status,epsilon,probe_distortion,subspace_distortion,"
          "within_epsilon,ms\n";
    for (const auto& r : rows) {
        out += std::string(experiment) + ',' + std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',' +
               format_double(r.gamma) + ',' + std::to_string(r.sketch_size) + ',' + r.status + ',' +
               format_double(r.epsilon) + ',' + format_double(r.probe_distortion) + ',' +
               format_double(r.subspace_distortion) + ',' + csv_bool(r.within_epsilon) + ',' +
               format_double(r.ms) + '\n';
    }
    return out;
}

std::string timing_csv(const std::vector<TimingRow>& rows) {
    std::string out = "method,sketch_size,x_err_sq_per_n,l2_err,repeats,min_ms,median_ms\n";
    for (const auto& r : rows) {
        out += r.method + ',' + std::to_string(r.sketch_size) + ',' + format_double(r.x_err_sq_per_n) + ',' +
               format_double(r.l2_err) + ',' + std::to_string(r.repeats) + ',' + format_double(r.min_ms) +
               ',' + format_double(r.median_ms) + '\n';
    }
    return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows, std::string_view experiment) {
    std::string out = "experiment,grid,key,metric,count,mean,std\n";
    for (const auto& r : rows) {
        out += std::string(experiment) + ',' + format_double(r.grid) + ',' + r.key + ',' + r.metric + ',' +
               std::to_string(r.count) + ',' + format_double(r.mean) + ',' + format_double(r.std) + '\n';
    }
    return out;
}

std::string strip_timing_columns(std::string_view csv) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < csv.size()) {
        const auto pos = csv.find('\n', start);
        lines.push_back(csv.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    if (lines.empty()) return {};
    auto cells = [](std::string_view line) {
        std::vector<std::string_view> out;
        std::size_t s = 0;
        for (;;) {
            const auto p = line.find(',', s);
            out.push_back(line.substr(s, p == std::string_view::npos ? p : p - s));
            if (p == std::string_view::npos) break;
            s = p + 1;
        }
        return out;
    };
    const auto header = cells(lines.front());
    std::vector<bool> keep;
    for (auto h : header) keep.push_back(!(h.size() >= 2 && h.substr(h.size() - 2) == "ms"));
    std::string out;
    for (auto line : lines) {
        const auto c = cells(line);
        bool first = true;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (i < keep.size() && !keep[i]) continue;
            if (!first) out += ',';
            out += c[i];
            first = false;
        }
        out += '\n';
    }
    return out;
}

std::vector<SummaryRow> summarize(const ExperimentResult& result) {
    SummaryBuilder b;
    for (const auto& r : result.decay) {
        if (r.status != "ok") continue;
        const std::string key = std::to_string(r.iter);
        b.add(r.gamma, key, "x_err_sq_per_n", r.x_err_sq_per_n);
        b.add(r.gamma, key, "log_x_err_sq_per_n", safe_log(r.x_err_sq_per_n));
        b.add(r.gamma, key, "l2_err", r.l2_err);
        b.add(r.gamma, key, "obj", r.obj);
    }
    for (const auto& r : result.estimation) {
        if (r.status != "ok") continue;
        b.add(r.gamma, r.method, "x_err_sq_per_n", r.x_err_sq_per_n);
        b.add(r.gamma, r.method, "l2_err", r.l2_err);
        b.add(r.gamma, r.method, "l2_to_betabar", r.l2_to_betabar);
        b.add(r.gamma, r.method, "precision", r.precision);
        b.add(r.gamma, r.method, "recall", r.recall);
    }
    for (const auto& r : result.rate) {
        if (r.status != "ok") continue;
        b.add(static_cast<double>(r.n), r.method, "l2_to_betabar", r.l2_to_betabar);
    }
    for (const auto& r : result.distortion) {
        if (r.status != "ok") continue;
        b.add(r.gamma, "all", "probe_distortion", r.probe_distortion);
        b.add(r.gamma, "all", "subspace_distortion", r.subspace_distortion);
        b.add(r.gamma, "all", "within_epsilon", r.within_epsilon ? 1.0 : 0.0);
    }
    return b.rows();
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    const bool write = !out_dir.empty();
    ExperimentResult res;
    res.kind = cfg.experiment;
    const std::string name(to_string(cfg.experiment));

    auto emit = [&](const std::string& file, const std::string& text) {
        if (!write) return;
        write_text(out_dir / file, text);
        res.files.push_back(out_dir / file);
    };
    if (write) {
        ensure_writable_dir(out_dir);
        emit("metadata.txt", format_key_values(cfg.to_key_values()));
    }

    switch (cfg.experiment) {
    case ExperimentKind::glasso_decay:
    case ExperimentKind::ridge_decay: {
        const auto tasks = grid_tasks(cfg.gamma, cfg.trials);
        auto parts = run_ordered<std::vector<DecayRow>>(tasks.size(), cfg.threads,
                                                        [&](std::size_t i) { return decay_trial(cfg, tasks[i]); });
        for (auto& p : parts) res.decay.insert(res.decay.end(), p.begin(), p.end());
        emit("decay.csv", decay_csv(res.decay, name));
        emit("plot.gp", decay_plot(cfg));
        break;
    }
    case ExperimentKind::lasso_estimation: {
        const auto tasks = grid_tasks(cfg.gamma, cfg.trials);
        auto parts = run_ordered<std::vector<EstimationRow>>(
            tasks.size(), cfg.threads, [&](std::size_t i) { return estimation_trial(cfg, tasks[i]); });
        for (auto& p : parts) res.estimation.insert(res.estimation.end(), p.begin(), p.end());
        emit("estimation.csv", estimation_csv(res.estimation, name));
        emit("plot.gp", estimation_plot());
        break;
    }
    case ExperimentKind::rate_scan: {
        std::vector<double> grid;
        for (Index n : cfg.n_grid) grid.push_back(static_cast<double>(n));
        const auto tasks = grid_tasks(grid, cfg.trials);
        auto parts = run_ordered<std::vector<RateRow>>(tasks.size(), cfg.threads,
                                                       [&](std::size_t i) { return rate_trial(cfg, tasks[i]); });
        for (auto& p : parts) res.rate.insert(res.rate.end(), p.begin(), p.end());
        res.rate_fits = fit_rates(cfg.n_grid, res.rate);
        emit("rate.csv", rate_csv(res.rate, name));
        emit("rate_fit.csv", rate_fit_csv(res.rate_fits));
        emit("plot.gp", rate_plot());
        break;
    }
    case ExperimentKind::distortion_check: {
        const auto tasks = grid_tasks(cfg.gamma, cfg.trials);
        res.distortion = run_ordered<DistortionRow>(tasks.size(), cfg.threads,
                                                    [&](std::size_t i) { return distortion_trial(cfg, tasks[i]); });
        emit("distortion.csv", distortion_csv(res.distortion, name));
        emit("plot.gp", distortion_plot());
        break;
    }
    case ExperimentKind::timing:
        res.timing = timing_rows(cfg);
        emit("timing.csv", timing_csv(res.timing));
        emit("plot.gp", timing_plot());
        break;
    }

    res.summary = summarize(res);
    if (cfg.experiment != ExperimentKind::timing) emit("summary.csv", summary_csv(res.summary, name));
    return res;
}

} // namespace sketchreg
