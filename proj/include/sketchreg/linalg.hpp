#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <optional>

namespace sketchreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t>;
using Index = Eigen::Index;

/// Orthonormal basis of the column space of `m`, built by greedy
/// column-pivoted Gram-Schmidt (two orthogonalization passes per pivot).
/// Stops once every remaining column has residual norm below
/// `rel_tol` times the largest column norm. Returns nullopt when more than
/// `max_rank` columns would be needed.
std::optional<Matrix> column_basis(const Matrix& m, double rel_tol = 1e-7,
                                   Index max_rank = -1);

struct PowerIterationOptions {
    double tol = 1e-8;
    int max_iters = 500;
    std::uint64_t seed = 0x5eed;
};

/// Largest eigenvalue of a symmetric PSD operator given as a callable
/// v -> A v of dimension `dim`. Returns 0 for the zero operator.
template <class Apply>
double power_iteration(Apply&& apply, Index dim, const PowerIterationOptions& opts = {});

/// Largest eigenvalue of the dense symmetric PSD matrix `a`.
double lipschitz_estimate(const Matrix& a, const PowerIterationOptions& opts = {});

/// Largest eigenvalue of mᵀm, without forming it.
double lipschitz_estimate_factor(const Matrix& m, const PowerIterationOptions& opts = {});

} // namespace sketchreg

#include "sketchreg/rng.hpp"

namespace sketchreg {

template <class Apply>
double power_iteration(Apply&& apply, Index dim, const PowerIterationOptions& opts) {
    if (dim == 0) return 0.0;
    Rng rng(opts.seed);
    Vector v(dim);
    for (Index i = 0; i < dim; ++i) v[i] = rng.normal();
    v.normalize();

    double estimate = 0.0;
    for (int it = 0; it < opts.max_iters; ++it) {
        Vector w = apply(v);
        const double rayleigh = v.dot(w);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        // ‖Av‖ bounds the Rayleigh quotient from above for unit v; both
        // converge to λ_max, and their agreement is the stopping signal.
        const double prev = estimate;
        estimate = rayleigh;
        if (it > 0 && std::abs(estimate - prev) <= opts.tol * estimate &&
            norm - rayleigh <= std::sqrt(opts.tol) * norm) {
            break;
        }
    }
    const Vector w = apply(v);
    return std::max(estimate, v.dot(w));
}

} // namespace sketchreg
