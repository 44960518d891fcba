#pragma once

#include "sketchreg/embed.hpp"
#include "sketchreg/reg.hpp"
#include "sketchreg/solve.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sketchreg {

/// min_β ½‖y − Xβ‖² + h_λ(β).
struct Problem {
    Matrix x;
    Vector y;
    Regularizer reg;

    void validate() const;
    Index samples() const { return x.rows(); }
    Index features() const { return x.cols(); }
    double objective(const Vector& beta) const;
};

struct SroConfig {
    /// Target contraction; the embedding accuracy is ε = ρ/(ρ+1).
    double rho = 0.5;
    double delta = 0.1;
    EmbeddingKind embedding = EmbeddingKind::gaussian;
    /// Explicit ñ; 0 selects recommended_sketch_size at ε(ρ).
    Index sketch_size = 0;
    /// Rank used for the recommended size; 0 means numerical rank of X.
    Index rank = 0;
    double c_gaussian = 8.0;
    double c_sparse = 2.0;
    int iterations = 10;
    SolverConfig solver;
    std::uint64_t seed = 1;

    double epsilon() const { return rho / (rho + 1.0); }
    void validate() const;
};

/// Sketch seed for outer iteration t (t ≥ 1). SRO and Iterative SRO use t = 1.
std::uint64_t sketch_seed(std::uint64_t master, int t);

/// ñ for the problem under `cfg`.
Index resolve_sketch_size(const Problem& problem, const SroConfig& cfg);

struct StepRecord {
    int solver_iterations = 0;
    bool converged = false;
    double residual = 0.0;
    /// Objective of the original problem at the new iterate.
    double objective = 0.0;
    /// Wall-clock of the step, including any sketching done inside it.
    double seconds = 0.0;
    double sketch_seconds = 0.0;
};

struct SroRun {
    /// β⁽⁰⁾ = 0, …, β⁽ᴺ⁾.
    std::vector<Vector> iterates;
    std::vector<StepRecord> steps;
    EmbeddingKind embedding = EmbeddingKind::gaussian;
    Index sketch_size = 0;
    /// One seed per sampled sketch (a single entry unless resampling).
    std::vector<std::uint64_t> sketch_seeds;
    double setup_seconds = 0.0;
    double total_seconds = 0.0;

    const Vector& result() const { return iterates.back(); }
    int iterations() const { return static_cast<int>(steps.size()); }
    bool converged() const;
};

/// Exact solve of the original problem (continuation for scad/mcp).
SolveResult direct_solve(const Problem& problem, const SolverConfig& cfg);

/// High-precision direct solve used as the β* reference: rel_tol
/// min(1e-12, cfg.rel_tol), abs_tol 0 and ten times the iteration budget.
SolveResult reference_solve(const Problem& problem, const SolverConfig& cfg);

/// One-shot SRO: X̃ = PX once, then min ½‖X̃β‖² − ⟨y, Xβ⟩ + h_λ(β).
SroRun sro_solve(const Problem& problem, const SroConfig& cfg);

/// Iterative SRO with a single sketch sampled once.
SroRun iterative_sro(const Problem& problem, const SroConfig& cfg);

/// Iterative SRO that resamples P (and recomputes X̃) every iteration.
SroRun iterative_sro_ihs(const Problem& problem, const SroConfig& cfg);

/// Iterative SRO with a caller-supplied sketch (used with the identity
/// sketch and by the C API).
SroRun iterative_sro_with(const Problem& problem, const SketchOperator& sketch,
                          const SroConfig& cfg, int iterations);

/// Quadratic part of the t-th subproblem:
/// A = X̃ᵀX̃, b = Aβ⁽ᵗ⁻¹⁾ + Xᵀ(y − Xβ⁽ᵗ⁻¹⁾).
QuadraticForm isro_subproblem(std::shared_ptr<const GramOperator> sketched_gram,
                              const Problem& problem, const Vector& previous);

/// Coefficient vectors on which the one-shot error bound relies: Δ = β̃ − β*,
/// β*, and the polarization pair β*/‖Xβ*‖ ± Δ/‖XΔ‖ (vectors with zero image
/// are dropped). Used to extend the random probes of empirical_distortion.
std::vector<Vector> one_shot_probes(const Matrix& x, const Vector& beta_sketched,
                                    const Vector& beta_star);

struct ContractionReport {
    /// e_t = ‖X(β⁽ᵗ⁾ − β*)‖ for t = 0..N.
    std::vector<double> errors;
    /// e_t / e_{t−1} for t = 1..N (NaN when e_{t−1} = 0).
    std::vector<double> ratios;
    /// Least-squares slope and R² of log e_t against t over positive e_t.
    double log_slope = 0.0;
    double r_squared = 0.0;
    bool already_converged = false;
    bool fit_valid = false;
};

ContractionReport measure_contraction(std::span<const double> errors);
ContractionReport measure_contraction(const SroRun& run, const Matrix& x, const Vector& beta_star);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int points = 0;
};

/// Ordinary least squares of y on x over pairs where both are finite.
std::optional<LineFit> fit_line(std::span<const double> x, std::span<const double> y);

} // namespace sketchreg
