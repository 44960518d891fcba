#pragma once

#include "sketchreg/linalg.hpp"

#include <string_view>

namespace sketchreg {

enum class RegKind { none, ridge, l1, scad, mcp };

std::string_view to_string(RegKind kind);
RegKind parse_reg_kind(std::string_view text);

/// Separable penalty h_λ(β) = Σ_j p(β_j; λ·w_j).
///
///   ridge  p(t) = λ t²
///   l1     p(t) = λ |t|
///   scad   p(t) = λ ∫₀^|t| [1{z ≤ λ} + (aλ − z)₊ / ((a − 1)λ) 1{z > λ}] dz,  a > 2
///   mcp    p(t) = λ ∫₀^|t| (1 − z/(λb))₊ dz,  b > 0
///
/// The optional weights w_j ≥ 0 rescale λ per coordinate (w_j = 0 leaves the
/// coordinate unpenalized); an empty weight vector means all ones.
class Regularizer {
public:
    static constexpr double default_scad_a = 3.7;
    static constexpr double default_mcp_b = 2.0;

    Regularizer() = default;

    static Regularizer none();
    static Regularizer ridge(double lambda);
    static Regularizer l1(double lambda);
    static Regularizer scad(double lambda, double a = default_scad_a);
    static Regularizer mcp(double lambda, double b = default_mcp_b);
    /// `shape` ≤ 0 selects the default SCAD a / MCP b.
    static Regularizer make(RegKind kind, double lambda, double shape = 0.0);

    Regularizer with_lambda(double lambda) const;
    Regularizer with_weights(Vector weights) const;

    RegKind kind() const { return kind_; }
    double lambda() const { return lambda_; }
    double shape() const { return shape_; }
    const Vector& weights() const { return weights_; }
    bool convex() const { return kind_ != RegKind::scad && kind_ != RegKind::mcp; }

    double value(const Vector& beta) const;
    /// h(to) − h(from), summed per coordinate so that the result stays
    /// accurate when the two points are close.
    double value_change(const Vector& to, const Vector& from) const;
    /// argmin_β ½‖β − v‖² + step·h_λ(β), coordinatewise.
    Vector prox(const Vector& v, double step) const;

    /// Scalar penalty p(t) at level λ·weight.
    double penalty(double t, double weight = 1.0) const;
    /// Global minimizer of ½(x − v)² + step·p(x); ties go to the smaller |x|.
    double prox_scalar(double v, double step, double weight = 1.0) const;
    /// q'_λ(t) where p(t) = λ|t| + q_λ(t); zero for non-folded-concave kinds.
    double concave_part_derivative(double t) const;

    /// Modulus σ such that h − (σ/2)‖·‖² is convex (2λ·min w for ridge).
    double strong_convexity() const;
    /// Slope bounds of q'_λ: −ζ₋ ≤ (q'(t₂) − q'(t₁))/(t₂ − t₁) ≤ −ζ₊.
    double zeta_minus() const;
    double zeta_plus() const { return 0.0; }
    /// Smoothness bound of the concave part; equals ζ₋ for scad/mcp.
    double smoothness() const { return zeta_minus(); }

private:
    Regularizer(RegKind kind, double lambda, double shape)
        : kind_(kind), lambda_(lambda), shape_(shape) {}

    double weight(Index j) const { return weights_.size() == 0 ? 1.0 : weights_[j]; }

    RegKind kind_ = RegKind::none;
    double lambda_ = 0.0;
    double shape_ = 0.0;
    Vector weights_;
};

/// Invertible chain-difference map D^ext of size d:
/// u_i = β_{i+1} − β_i for i < d, u_d = β_d.
///
/// Substituting β = D⁻¹u turns Σ_i |β_i − β_{i+1}| into an L1 penalty on
/// u_1..u_{d−1}, with u_d left free.
class FusedTransform {
public:
    explicit FusedTransform(Index d);

    Index dim() const { return d_; }
    Vector forward(const Vector& beta) const;
    Vector inverse(const Vector& u) const;
    /// X·D⁻¹, so that X β = (X D⁻¹) u.
    Matrix transform_design(const Matrix& x) const;
    /// λ Σ_{i<d} |u_i| as a weighted L1 regularizer.
    Regularizer penalty(double lambda) const;

private:
    Index d_;
};

} // namespace sketchreg
