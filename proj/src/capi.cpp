#include "sketchreg.h"

#include "sketchreg/error.hpp"
#include "sketchreg/experiment.hpp"

#include <chrono>
#include <cstring>
#include <functional>
#include <memory>
#include <new>
#include <optional>
#include <string>

using namespace sketchreg;

struct skr_config {
    ExperimentConfig cfg;
};

struct skr_instance {
    ProblemInstance inst;
};

struct skr_embedding {
    SketchOperator op;
};

struct skr_run {
    std::vector<Vector> iterates;
    int outer = 0;
    Index sketch_size = 0;
    bool converged = false;
    double objective = 0.0;
    double seconds = 0.0;
};

struct skr_result {
    ExperimentResult res;
    std::string experiment;
};

namespace {

thread_local std::string last_error;

skr_status guard(const std::function<void()>& body) {
    try {
        body();
        last_error.clear();
        return SKR_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return static_cast<skr_status>(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return SKR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return SKR_INTERNAL;
    }
}

void need(const void* p, const char* name) {
    if (!p) fail(ErrorCode::invalid_argument, std::string(name) + " must not be null");
}

void need_len(size_t len, Index expected, const char* name) {
    if (static_cast<Index>(len) != expected)
        fail(ErrorCode::dimension_mismatch, std::string(name) + " has length " + std::to_string(len) +
                                                ", expected " + std::to_string(expected));
}

Matrix matrix_from(const double* x, int64_t n, int64_t d) {
    need(x, "x");
    require(n >= 1 && d >= 1, "matrix dimensions must be positive");
    return Eigen::Map<const Matrix>(x, n, d);
}

void copy_out(const Vector& v, double* out, size_t len) {
    need(out, "out");
    need_len(len, v.size(), "out");
    Eigen::Map<Vector>(out, v.size()) = v;
}

void copy_string(const std::string& s, char* buf, size_t cap, size_t* needed) {
    if (needed) *needed = s.size();
    if (cap == 0) return;
    need(buf, "buf");
    const size_t k = std::min(cap - 1, s.size());
    std::memcpy(buf, s.data(), k);
    buf[k] = '\0';
}

SolverConfig solver_from(const skr_solver_options& o) {
    SolverConfig c;
    c.max_iters = o.max_iters;
    c.rel_tol = o.rel_tol;
    c.abs_tol = o.abs_tol;
    c.eta = o.eta;
    return c;
}

SroConfig sro_from(const skr_sro_options* o) {
    SroConfig c;
    if (!o) return c;
    c.rho = o->rho;
    c.delta = o->delta;
    require(o->embedding == SKR_EMBEDDING_GAUSSIAN || o->embedding == SKR_EMBEDDING_SPARSE,
            "unknown embedding kind");
    c.embedding = o->embedding == SKR_EMBEDDING_GAUSSIAN ? EmbeddingKind::gaussian : EmbeddingKind::sparse;
    c.sketch_size = o->sketch_size;
    c.rank = o->rank;
    c.c_gaussian = o->c_gaussian;
    c.c_sparse = o->c_sparse;
    c.iterations = o->iterations;
    c.seed = o->seed;
    c.solver = solver_from(o->solver);
    c.validate();
    return c;
}

EmbeddingKind embedding_from(skr_embedding_kind kind) {
    switch (kind) {
    case SKR_EMBEDDING_GAUSSIAN: return EmbeddingKind::gaussian;
    case SKR_EMBEDDING_SPARSE: return EmbeddingKind::sparse;
    }
    fail(ErrorCode::invalid_argument, "unknown embedding kind");
}

Regularizer separable_from(const skr_penalty_spec* pen) {
    need(pen, "penalty");
    switch (pen->kind) {
    case SKR_PENALTY_NONE: return Regularizer::none();
    case SKR_PENALTY_RIDGE: return Regularizer::make(RegKind::ridge, pen->lambda, pen->shape);
    case SKR_PENALTY_L1: return Regularizer::make(RegKind::l1, pen->lambda, pen->shape);
    case SKR_PENALTY_SCAD: return Regularizer::make(RegKind::scad, pen->lambda, pen->shape);
    case SKR_PENALTY_MCP: return Regularizer::make(RegKind::mcp, pen->lambda, pen->shape);
    case SKR_PENALTY_FUSED: fail(ErrorCode::invalid_argument, "fused penalty is not separable");
    }
    fail(ErrorCode::invalid_argument, "unknown penalty kind");
}

// A problem in solver coordinates plus the map back to coefficients.
struct Prepared {
    Problem problem;
    std::function<Vector(const Vector&)> to_beta;
};

Prepared prepare(const double* x, int64_t n, int64_t d, const double* y, const skr_penalty_spec* pen) {
    need(pen, "penalty");
    need(y, "y");
    Matrix xm = matrix_from(x, n, d);
    Vector yv = Eigen::Map<const Vector>(y, n);
    if (pen->kind == SKR_PENALTY_FUSED) {
        require(pen->lambda >= 0.0, "lambda must be nonnegative");
        const FusedTransform t(d);
        Prepared p{Problem{t.transform_design(xm), std::move(yv), t.penalty(pen->lambda)},
                   [t](const Vector& u) { return t.inverse(u); }};
        p.problem.validate();
        return p;
    }
    Prepared p{Problem{std::move(xm), std::move(yv), separable_from(pen)}, [](const Vector& b) { return b; }};
    p.problem.validate();
    return p;
}

skr_run* run_method(skr_method method, const Problem& pb, const SroConfig& sc,
                    const std::function<Vector(const Vector&)>& to_beta) {
    auto run = std::make_unique<skr_run>();
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Vector> solver_iterates;
    if (method == SKR_METHOD_EXACT) {
        const SolveResult r = direct_solve(pb, sc.solver);
        solver_iterates.push_back(r.beta);
        run->converged = r.converged;
    } else {
        SroRun r;
        switch (method) {
        case SKR_METHOD_SRO: r = sro_solve(pb, sc); break;
        case SKR_METHOD_ISRO: r = iterative_sro(pb, sc); break;
        case SKR_METHOD_ISRO_IHS: r = iterative_sro_ihs(pb, sc); break;
        default: fail(ErrorCode::invalid_argument, "unknown method");
        }
        solver_iterates = std::move(r.iterates);
        run->outer = r.iterations();
        run->sketch_size = r.sketch_size;
        run->converged = r.converged();
    }
    run->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run->objective = pb.objective(solver_iterates.back());
    for (const auto& v : solver_iterates) run->iterates.push_back(to_beta(v));
    return run.release();
}

} // namespace

extern "C" {

const char* skr_version(void) { return "1.0.0"; }

const char* skr_status_name(skr_status status) {
    if (status == SKR_OK) return "ok";
    if (status >= SKR_INVALID_ARGUMENT && status <= SKR_INTERNAL) return to_string(static_cast<ErrorCode>(status));
    return "unknown";
}

const char* skr_last_error(void) { return last_error.c_str(); }

void skr_solver_options_default(skr_solver_options* out) {
    if (!out) return;
    const SolverConfig c;
    *out = {c.max_iters, c.rel_tol, c.abs_tol, c.eta};
}

void skr_sro_options_default(skr_sro_options* out) {
    if (!out) return;
    const SroConfig c;
    out->rho = c.rho;
    out->delta = c.delta;
    out->embedding = SKR_EMBEDDING_GAUSSIAN;
    out->sketch_size = c.sketch_size;
    out->rank = c.rank;
    out->c_gaussian = c.c_gaussian;
    out->c_sparse = c.c_sparse;
    out->iterations = c.iterations;
    out->seed = c.seed;
    skr_solver_options_default(&out->solver);
}

skr_status skr_penalty_value(const skr_penalty_spec* pen, const double* beta, size_t len, double* out) {
    return guard([&] {
        need(beta, "beta");
        need(out, "out");
        *out = separable_from(pen).value(Eigen::Map<const Vector>(beta, static_cast<Index>(len)));
    });
}

skr_status skr_prox(const skr_penalty_spec* pen, const double* v, size_t len, double step, double* out) {
    return guard([&] {
        need(v, "v");
        need(out, "out");
        require(step > 0.0, "step must be positive");
        const Vector r = separable_from(pen).prox(Eigen::Map<const Vector>(v, static_cast<Index>(len)), step);
        copy_out(r, out, len);
    });
}

skr_status skr_recommended_sketch_size(skr_embedding_kind kind, double epsilon, double delta, int64_t rank,
                                       int64_t* out) {
    return guard([&] {
        need(out, "out");
        SketchBudget b;
        b.epsilon = epsilon;
        b.delta = delta;
        b.rank = rank;
        *out = recommended_sketch_size(b, embedding_from(kind));
    });
}

skr_status skr_embedding_build(skr_embedding_kind kind, int64_t n, int64_t rows, uint64_t seed,
                               skr_embedding** out) {
    return guard([&] {
        need(out, "out");
        *out = new skr_embedding{build_embedding(embedding_from(kind), n, rows, seed)};
    });
}

skr_status skr_embedding_identity(int64_t n, skr_embedding** out) {
    return guard([&] {
        need(out, "out");
        require(n >= 1, "n must be positive");
        *out = new skr_embedding{SketchOperator(SparseEmbedding::identity(n))};
    });
}

void skr_embedding_free(skr_embedding* p) { delete p; }

skr_status skr_embedding_shape(const skr_embedding* p, int64_t* rows, int64_t* cols) {
    return guard([&] {
        need(p, "embedding");
        if (rows) *rows = p->op.rows();
        if (cols) *cols = p->op.cols();
    });
}

skr_status skr_embedding_apply(const skr_embedding* p, const double* x, int64_t n, int64_t d, double* out) {
    return guard([&] {
        need(p, "embedding");
        need(out, "out");
        require(n == p->op.cols(), "x has " + std::to_string(n) + " rows, embedding expects " +
                                       std::to_string(p->op.cols()),
                ErrorCode::dimension_mismatch);
        const Matrix r = p->op.apply(matrix_from(x, n, d));
        Eigen::Map<Matrix>(out, r.rows(), r.cols()) = r;
    });
}

skr_status skr_embedding_distortion(const skr_embedding* p, const double* x, int64_t n, int64_t d,
                                    int n_probes, uint64_t seed, double* out) {
    return guard([&] {
        need(p, "embedding");
        need(out, "out");
        *out = empirical_distortion(p->op, matrix_from(x, n, d), n_probes, seed);
    });
}

skr_status skr_solve(skr_method method, const double* x, int64_t n, int64_t d, const double* y,
                     const skr_penalty_spec* pen, const skr_sro_options* opts, skr_run** out) {
    return guard([&] {
        need(out, "out");
        const Prepared p = prepare(x, n, d, y, pen);
        *out = run_method(method, p.problem, sro_from(opts), p.to_beta);
    });
}

skr_status skr_solve_with_embedding(const skr_embedding* e, const double* x, int64_t n, int64_t d,
                                    const double* y, const skr_penalty_spec* pen, const skr_sro_options* opts,
                                    skr_run** out) {
    return guard([&] {
        need(e, "embedding");
        need(out, "out");
        const Prepared p = prepare(x, n, d, y, pen);
        const SroConfig sc = sro_from(opts);
        const auto t0 = std::chrono::steady_clock::now();
        SroRun r = iterative_sro_with(p.problem, e->op, sc, sc.iterations);
        auto run = std::make_unique<skr_run>();
        run->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        run->outer = r.iterations();
        run->sketch_size = r.sketch_size;
        run->converged = r.converged();
        run->objective = p.problem.objective(r.result());
        for (const auto& v : r.iterates) run->iterates.push_back(p.to_beta(v));
        *out = run.release();
    });
}

void skr_run_free(skr_run* run) { delete run; }
int64_t skr_run_dim(const skr_run* run) { return run ? run->iterates.back().size() : 0; }
int skr_run_iterations(const skr_run* run) { return run ? run->outer : 0; }
int64_t skr_run_sketch_size(const skr_run* run) { return run ? run->sketch_size : 0; }
int skr_run_converged(const skr_run* run) { return run && run->converged ? 1 : 0; }
double skr_run_objective(const skr_run* run) { return run ? run->objective : 0.0; }
double skr_run_seconds(const skr_run* run) { return run ? run->seconds : 0.0; }

skr_status skr_run_beta(const skr_run* run, double* out, size_t len) {
    return guard([&] {
        need(run, "run");
        copy_out(run->iterates.back(), out, len);
    });
}

skr_status skr_run_iterate(const skr_run* run, int t, double* out, size_t len) {
    return guard([&] {
        need(run, "run");
        require(t >= 0 && t < static_cast<int>(run->iterates.size()), "iterate index out of range");
        copy_out(run->iterates[t], out, len);
    });
}

skr_status skr_instance_generate(const char* spec, skr_instance** out) {
    return guard([&] {
        need(spec, "spec");
        need(out, "out");
        auto kv = InstanceSpec{}.to_map();
        for (const auto& [k, v] : parse_key_values(spec)) {
            const auto it = kv.find(k);
            if (it == kv.end()) fail(ErrorCode::invalid_argument, "unknown instance key: " + k);
            it->second = v;
        }
        *out = new skr_instance{generate_instance(InstanceSpec::from_map(kv))};
    });
}

skr_status skr_instance_load(const char* dir, skr_instance** out) {
    return guard([&] {
        need(dir, "dir");
        need(out, "out");
        *out = new skr_instance{load_bundle(dir)};
    });
}

skr_status skr_instance_save(const skr_instance* inst, const char* dir) {
    return guard([&] {
        need(inst, "instance");
        need(dir, "dir");
        save_bundle(inst->inst, dir);
    });
}

void skr_instance_free(skr_instance* inst) { delete inst; }

skr_status skr_instance_shape(const skr_instance* inst, int64_t* n, int64_t* d) {
    return guard([&] {
        need(inst, "instance");
        if (n) *n = inst->inst.x.rows();
        if (d) *d = inst->inst.x.cols();
    });
}

skr_status skr_instance_design(const skr_instance* inst, double* out, size_t len) {
    return guard([&] {
        need(inst, "instance");
        need(out, "out");
        const Matrix& x = inst->inst.x;
        need_len(len, x.size(), "out");
        Eigen::Map<Matrix>(out, x.rows(), x.cols()) = x;
    });
}

skr_status skr_instance_response(const skr_instance* inst, double* out, size_t len) {
    return guard([&] {
        need(inst, "instance");
        copy_out(inst->inst.y, out, len);
    });
}

skr_status skr_instance_signal(const skr_instance* inst, double* out, size_t len) {
    return guard([&] {
        need(inst, "instance");
        copy_out(inst->inst.beta_bar, out, len);
    });
}

skr_status skr_instance_solve(const skr_instance* inst, skr_method method, const skr_sro_options* opts,
                              skr_run** out) {
    return guard([&] {
        need(inst, "instance");
        need(out, "out");
        const ProblemInstance& pi = inst->inst;
        *out = run_method(method, pi.solver_problem(), sro_from(opts),
                          [&pi](const Vector& v) { return pi.to_coefficients(v); });
    });
}

skr_status skr_instance_l2_to_signal(const skr_instance* inst, const double* beta, size_t len, double* out) {
    return guard([&] {
        need(inst, "instance");
        need(beta, "beta");
        need(out, "out");
        need_len(len, inst->inst.beta_bar.size(), "beta");
        *out = (Eigen::Map<const Vector>(beta, static_cast<Index>(len)) - inst->inst.beta_bar).norm();
    });
}

skr_status skr_config_default(const char* experiment, skr_config** out) {
    return guard([&] {
        need(experiment, "experiment");
        need(out, "out");
        *out = new skr_config{ExperimentConfig::defaults(parse_experiment_kind(experiment))};
    });
}

skr_status skr_config_load(const char* path, skr_config** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new skr_config{load_experiment_config(path)};
    });
}

void skr_config_free(skr_config* cfg) { delete cfg; }

skr_status skr_config_set(skr_config* cfg, const char* key, const char* value) {
    return guard([&] {
        need(cfg, "config");
        need(key, "key");
        need(value, "value");
        ExperimentConfig next = cfg->cfg;
        next.set(key, value);
        cfg->cfg = std::move(next);
    });
}

skr_status skr_config_get(const skr_config* cfg, const char* key, char* buf, size_t cap, size_t* needed) {
    return guard([&] {
        need(cfg, "config");
        need(key, "key");
        const KeyValues kv = cfg->cfg.to_key_values();
        const auto it = kv.find(key);
        if (it == kv.end()) fail(ErrorCode::invalid_argument, std::string("unknown config key: ") + key);
        copy_string(it->second, buf, cap, needed);
    });
}

skr_status skr_config_text(const skr_config* cfg, char* buf, size_t cap, size_t* needed) {
    return guard([&] {
        need(cfg, "config");
        copy_string(format_key_values(cfg->cfg.to_key_values()), buf, cap, needed);
    });
}

skr_status skr_experiment_run(const skr_config* cfg, const char* out_dir, skr_result** out) {
    return guard([&] {
        need(cfg, "config");
        need(out, "out");
        auto r = std::make_unique<skr_result>();
        r->res = run_experiment(cfg->cfg, out_dir ? out_dir : "");
        r->experiment = std::string(to_string(cfg->cfg.experiment));
        *out = r.release();
    });
}

void skr_result_free(skr_result* res) { delete res; }

skr_status skr_result_csv(const skr_result* r, const char* table, char* buf, size_t cap, size_t* needed) {
    return guard([&] {
        need(r, "result");
        need(table, "table");
        const std::string t = table;
        const auto& res = r->res;
        std::string text;
        if (t == "decay") text = decay_csv(res.decay, r->experiment);
        else if (t == "estimation") text = estimation_csv(res.estimation, r->experiment);
        else if (t == "rate") text = rate_csv(res.rate, r->experiment);
        else if (t == "rate_fit") text = rate_fit_csv(res.rate_fits);
        else if (t == "distortion") text = distortion_csv(res.distortion, r->experiment);
        else if (t == "timing") text = timing_csv(res.timing);
        else if (t == "summary") text = summary_csv(res.summary, r->experiment);
        else fail(ErrorCode::invalid_argument, "unknown table: " + t);
        copy_string(text, buf, cap, needed);
    });
}

skr_status skr_result_rate_slope(const skr_result* r, const char* method, double* slope, double* r_squared) {
    return guard([&] {
        need(r, "result");
        need(method, "method");
        for (const auto& f : r->res.rate_fits) {
            if (f.method != method) continue;
            if (!f.valid)
                fail(ErrorCode::unmeasurable, "rate fit for " + f.method + " has fewer than 2 finite points");
            if (slope) *slope = f.slope;
            if (r_squared) *r_squared = f.r_squared;
            return;
        }
        fail(ErrorCode::invalid_argument, std::string("no rate fit for method ") + method);
    });
}

size_t skr_result_file_count(const skr_result* r) { return r ? r->res.files.size() : 0; }

skr_status skr_result_file(const skr_result* r, size_t i, char* buf, size_t cap, size_t* needed) {
    return guard([&] {
        need(r, "result");
        require(i < r->res.files.size(), "file index out of range");
        copy_string(r->res.files[i].string(), buf, cap, needed);
    });
}

} // extern "C"
