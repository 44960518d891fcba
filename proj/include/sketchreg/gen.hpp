#pragma once

#include "sketchreg/linalg.hpp"
#include "sketchreg/rng.hpp"
#include "sketchreg/sro.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sketchreg {

enum class DesignKind { low_rank_svd, low_rank_rip, dense_gaussian };

std::string_view to_string(DesignKind kind);
DesignKind parse_design_kind(std::string_view text);

struct DesignSpec {
    Index n = 1;
    Index d = 1;
    Index rank = 1;
    DesignKind kind = DesignKind::dense_gaussian;
    std::uint64_t seed = 1;

    void validate() const;
};

/// n×r matrix with orthonormal columns, Haar-distributed: QR of an i.i.d.
/// Gaussian matrix with the signs of diag(R) folded into Q.
Matrix sample_stiefel(Index n, Index r, Rng& rng);

/// U Σ Vᵀ with U, V Haar on their Stiefel manifolds and Σ_ii = |z_i|, z_i ~ N(0,1).
Matrix gen_low_rank_svd(const DesignSpec& spec);
/// U Uᵀ Ω with U Haar n×r and Ω_ij ~ N(0, 1/r).
Matrix gen_low_rank_rip(const DesignSpec& spec);
/// i.i.d. N(0,1) entries.
Matrix gen_dense_gaussian(const DesignSpec& spec);
Matrix gen_design(const DesignSpec& spec);

/// ⌊3 ln d⌋, at least 1.
Index default_sparsity(Index d);

/// s nonzeros of value ±1/√s on a uniformly random support.
Vector gen_sparse_signal(Index d, Index s, std::uint64_t seed);
/// N(0, I_d).
Vector gen_gaussian_signal(Index d, std::uint64_t seed);

/// X β + w/√n with w_i ~ N(0, σ²).
Vector gen_response(const Matrix& x, const Vector& beta, double sigma, std::uint64_t seed);

enum class SignalKind { sparse, gaussian, zero };

std::string_view to_string(SignalKind kind);
SignalKind parse_signal_kind(std::string_view text);

/// Everything needed to regenerate an instance bit-for-bit.
struct InstanceSpec {
    DesignSpec design;
    SignalKind signal = SignalKind::sparse;
    /// 0 selects default_sparsity(d).
    Index sparsity = 0;
    double noise = 1.0;
    /// Divide the raw design by √n.
    bool scale_by_sqrt_n = true;
    /// Enforce max column norm ≤ 1 by a scalar rescale.
    bool estimation_mode = true;
    /// Penalty: "none", "ridge", "l1", "scad", "mcp" or "fused" (chain
    /// differences, solved as weighted L1 after the D^ext substitution).
    std::string penalty = "l1";
    double lambda = 0.0;
    double shape = 0.0;

    void validate() const;
    Index resolved_sparsity() const;
    std::map<std::string, std::string> to_map() const;
    static InstanceSpec from_map(const std::map<std::string, std::string>& kv);
};

struct ProblemInstance {
    InstanceSpec spec;
    /// Design and response in β-coordinates.
    Matrix x;
    Vector y;
    Vector beta_bar;
    std::vector<Index> support;
    /// Scalar the design was divided by to meet the column-norm bound (1 if none).
    double rescale_factor = 1.0;

    bool fused() const { return spec.penalty == "fused"; }
    /// Problem handed to the solvers (transformed when fused).
    Problem solver_problem() const;
    /// Maps solver coordinates back to β (identity unless fused).
    Vector to_coefficients(const Vector& solver_beta) const;
    Vector to_solver(const Vector& beta) const;
    /// Provenance record: the spec plus recorded generation events.
    std::map<std::string, std::string> provenance() const;
};

ProblemInstance generate_instance(const InstanceSpec& spec);

} // namespace sketchreg
