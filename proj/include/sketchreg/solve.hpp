#pragma once

#include "sketchreg/linalg.hpp"
#include "sketchreg/reg.hpp"

#include <memory>
#include <vector>

namespace sketchreg {

/// The PSD operator A of a quadratic ½βᵀAβ − bᵀβ, stored either densely or
/// through a factor F with A = FᵀF. Read-only after construction.
class GramOperator {
public:
    enum class Storage { dense, factor };

    /// A = MᵀM. Uses dense storage when M has at least as many rows as
    /// columns; otherwise keeps a factor, compressed to an orthonormal
    /// basis of range(M) when M is numerically rank deficient.
    static std::shared_ptr<const GramOperator> from_factor(const Matrix& m);
    static std::shared_ptr<const GramOperator> from_dense(Matrix a);

    Index dim() const { return dim_; }
    Storage storage() const { return storage_; }
    /// Rows of the stored factor (dim() for dense storage).
    Index factor_rows() const { return storage_ == Storage::dense ? dim_ : data_.rows(); }
    double lipschitz() const { return lipschitz_; }

    Vector apply(const Vector& v) const;
    Matrix to_dense() const;

private:
    GramOperator(Storage s, Matrix data);

    Storage storage_;
    Matrix data_;
    Index dim_;
    double lipschitz_ = 0.0;
};

/// ½βᵀAβ − bᵀβ with a shared Gram operator.
struct QuadraticForm {
    std::shared_ptr<const GramOperator> gram;
    Vector linear;

    QuadraticForm(std::shared_ptr<const GramOperator> a, Vector b);

    Index dim() const { return gram->dim(); }
    double value(const Vector& beta) const;
};

struct SolverConfig {
    int max_iters = 10000;
    double rel_tol = 1e-10;
    /// Floor of the residual tolerance: max(rel_tol·(1 + ‖β‖), abs_tol).
    double abs_tol = 1e-8;
    /// Continuation shrink factor η.
    double eta = 0.7;

    void validate() const;
};

struct SolveResult {
    Vector beta;
    int iterations = 0;
    int restarts = 0;
    int stages = 1;
    double objective = 0.0;
    double residual = 0.0;
    bool converged = false;
    /// Objective after every accepted step; entry 0 is the initial point.
    std::vector<double> trace;
};

/// ‖β − prox(β − (Aβ − b)/L, 1/L)‖.
double fixed_point_residual(const QuadraticForm& qf, const Regularizer& reg, const Vector& beta);

/// Accelerated proximal gradient with monotone restart, step 1/L.
/// Throws ErrorCode::numeric on a non-finite iterate.
SolveResult fista(const QuadraticForm& qf, const Regularizer& reg, const SolverConfig& cfg,
                  const Vector& init);

/// Geometric λ-continuation λ₀ = ‖b‖∞ → reg.lambda() with factor η,
/// warm-starting fista at every stage.
SolveResult lambda_path(const QuadraticForm& qf, const Regularizer& reg, const SolverConfig& cfg,
                        const Vector& init);

/// fista for convex penalties, lambda_path for scad/mcp.
SolveResult solve_quadratic(const QuadraticForm& qf, const Regularizer& reg,
                            const SolverConfig& cfg, const Vector& init);

} // namespace sketchreg
