#pragma once

#include "sketchreg/linalg.hpp"
#include "sketchreg/sro.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace sketchreg {

/// ‖Xv‖₂.
double x_seminorm(const Matrix& x, const Vector& v);

/// Magnitude above which a coefficient counts as selected.
inline constexpr double support_threshold = 1e-6;

std::vector<Index> support_of(const Vector& beta, double threshold = support_threshold);

struct ErrorReport {
    double x_seminorm_sq_per_n = 0.0;
    double l2_error = 0.0;
    /// |Ŝ ∩ S| / |Ŝ|, 1 when Ŝ is empty.
    double precision = 1.0;
    /// |Ŝ ∩ S| / |S|, 1 when S is empty.
    double recall = 1.0;
    /// f(β̂) − f(β_ref); NaN when no objective is available.
    double objective_gap = 0.0;
};

ErrorReport error_report(const Vector& beta_hat, const Vector& beta_ref, const Matrix& x,
                         const std::vector<Index>& support_ref);
ErrorReport error_report(const Problem& problem, const Vector& beta_hat, const Vector& beta_ref,
                         const std::vector<Index>& support_ref);

enum class SparseEigenMethod { exhaustive, probe };

std::string_view to_string(SparseEigenMethod m);

struct SparseEigenReport {
    Index s = 0;
    double rho_plus = 0.0;
    double rho_minus = 0.0;
    SparseEigenMethod method = SparseEigenMethod::exhaustive;
    /// Supports examined.
    std::int64_t probes = 0;
};

inline constexpr Index exhaustive_max_d = 20;
inline constexpr Index exhaustive_max_s = 6;

/// Exact ρ±(s) over every size-s support (s clamped to d). Requires
/// d ≤ 20 and s ≤ 6; larger problems should use sparse_eigen_probe.
SparseEigenReport sparse_eigen_exhaustive(const Matrix& x, Index s);
/// Same, from a precomputed Gram matrix XᵀX.
SparseEigenReport sparse_eigen_exhaustive_gram(const Matrix& gram, Index s);

/// One-sided estimates from random size-s supports: the returned ρ₊ is a
/// lower bound on the true ρ₊(s) and ρ₋ an upper bound on ρ₋(s). Supports
/// are drawn sequentially, so a larger probe count extends a smaller one.
SparseEigenReport sparse_eigen_probe(const Matrix& x, Index s, std::int64_t n_probes,
                                     std::uint64_t seed);

} // namespace sketchreg
