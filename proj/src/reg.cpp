#include "sketchreg/reg.hpp"

#include "sketchreg/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace sketchreg {

std::string_view to_string(RegKind kind) {
    switch (kind) {
    case RegKind::none: return "none";
    case RegKind::ridge: return "ridge";
    case RegKind::l1: return "l1";
    case RegKind::scad: return "scad";
    case RegKind::mcp: return "mcp";
    }
    return "none";
}

RegKind parse_reg_kind(std::string_view text) {
    if (text == "none") return RegKind::none;
    if (text == "ridge") return RegKind::ridge;
    if (text == "l1" || text == "lasso") return RegKind::l1;
    if (text == "scad") return RegKind::scad;
    if (text == "mcp") return RegKind::mcp;
    fail(ErrorCode::invalid_argument, "unknown regularizer kind: " + std::string(text));
}

Regularizer Regularizer::none() { return Regularizer(RegKind::none, 0.0, 0.0); }

Regularizer Regularizer::ridge(double lambda) {
    require(lambda >= 0.0, "lambda must be nonnegative");
    return Regularizer(RegKind::ridge, lambda, 0.0);
}

Regularizer Regularizer::l1(double lambda) {
    require(lambda >= 0.0, "lambda must be nonnegative");
    return Regularizer(RegKind::l1, lambda, 0.0);
}

Regularizer Regularizer::scad(double lambda, double a) {
    require(lambda >= 0.0, "lambda must be nonnegative");
    require(a > 2.0, "SCAD requires a > 2");
    return Regularizer(RegKind::scad, lambda, a);
}

Regularizer Regularizer::mcp(double lambda, double b) {
    require(lambda >= 0.0, "lambda must be nonnegative");
    require(b > 0.0, "MCP requires b > 0");
    return Regularizer(RegKind::mcp, lambda, b);
}

Regularizer Regularizer::make(RegKind kind, double lambda, double shape) {
    switch (kind) {
    case RegKind::none: return none();
    case RegKind::ridge: return ridge(lambda);
    case RegKind::l1: return l1(lambda);
    case RegKind::scad: return scad(lambda, shape > 0.0 ? shape : default_scad_a);
    case RegKind::mcp: return mcp(lambda, shape > 0.0 ? shape : default_mcp_b);
    }
    return none();
}

Regularizer Regularizer::with_lambda(double lambda) const {
    require(lambda >= 0.0, "lambda must be nonnegative");
    Regularizer r = *this;
    r.lambda_ = lambda;
    return r;
}

Regularizer Regularizer::with_weights(Vector weights) const {
    require(weights.size() == 0 || weights.minCoeff() >= 0.0, "penalty weights must be nonnegative");
    Regularizer r = *this;
    r.weights_ = std::move(weights);
    return r;
}

double Regularizer::penalty(double t, double weight) const {
    const double lam = lambda_ * weight;
    const double x = std::abs(t);
    switch (kind_) {
    case RegKind::none: return 0.0;
    case RegKind::ridge: return lam * t * t;
    case RegKind::l1: return lam * x;
    case RegKind::scad: {
        const double a = shape_;
        if (x <= lam) return lam * x;
        if (x <= a * lam) return (2.0 * a * lam * x - x * x - lam * lam) / (2.0 * (a - 1.0));
        return lam * lam * (a + 1.0) / 2.0;
    }
    case RegKind::mcp: {
        const double b = shape_;
        if (x <= b * lam) return lam * x - x * x / (2.0 * b);
        return b * lam * lam / 2.0;
    }
    }
    return 0.0;
}

double Regularizer::value(const Vector& beta) const {
    require(weights_.size() == 0 || weights_.size() == beta.size(),
            "penalty weights do not match the coefficient length", ErrorCode::dimension_mismatch);
    if (kind_ == RegKind::none) return 0.0;
    double total = 0.0;
    for (Index j = 0; j < beta.size(); ++j) total += penalty(beta[j], weight(j));
    return total;
}

double Regularizer::value_change(const Vector& to, const Vector& from) const {
    require(to.size() == from.size(), "value_change needs equally long vectors",
            ErrorCode::dimension_mismatch);
    if (kind_ == RegKind::none) return 0.0;
    double total = 0.0;
    for (Index j = 0; j < to.size(); ++j) {
        const double a = to[j];
        const double b = from[j];
        if (a == b) continue;
        const double lam = lambda_ * weight(j);
        switch (kind_) {
        case RegKind::ridge: total += lam * (a - b) * (a + b); break;
        case RegKind::l1: total += lam * (std::abs(a) - std::abs(b)); break;
        default: total += penalty(a, weight(j)) - penalty(b, weight(j)); break;
        }
    }
    return total;
}

double Regularizer::prox_scalar(double v, double step, double weight) const {
    const double lam = lambda_ * weight;
    const double u = std::abs(v);
    const double sgn = v < 0.0 ? -1.0 : 1.0;

    switch (kind_) {
    case RegKind::none: return v;
    case RegKind::ridge: return v / (1.0 + 2.0 * step * lam);
    case RegKind::l1: return sgn * std::max(u - step * lam, 0.0);
    case RegKind::scad:
    case RegKind::mcp: break;
    }
    if (lam == 0.0) return v;

    // Candidate minimizers on x ≥ 0: region stationary points (clamped into
    // their region) plus every breakpoint. The optimum has the sign of v.
    std::array<double, 8> cand{};
    std::size_t count = 0;
    auto push = [&](double x) { cand[count++] = x; };
    push(0.0);
    if (kind_ == RegKind::scad) {
        const double a = shape_;
        push(std::clamp(u - step * lam, 0.0, lam));
        const double curv = 1.0 - step / (a - 1.0);
        if (curv > 0.0) push(std::clamp((u - step * a * lam / (a - 1.0)) / curv, lam, a * lam));
        push(lam);
        push(a * lam);
        push(std::max(u, a * lam));
    } else {
        const double b = shape_;
        const double curv = 1.0 - step / b;
        if (curv > 0.0) push(std::clamp((u - step * lam) / curv, 0.0, b * lam));
        push(b * lam);
        push(std::max(u, b * lam));
    }
    std::sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(count));

    double best_x = 0.0;
    double best_f = 0.5 * u * u;
    for (std::size_t k = 0; k < count; ++k) {
        const double x = cand[k];
        const double f = 0.5 * (x - u) * (x - u) + step * penalty(x, weight);
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    }
    return sgn * best_x;
}

Vector Regularizer::prox(const Vector& v, double step) const {
    require(step > 0.0, "prox step must be positive");
    require(weights_.size() == 0 || weights_.size() == v.size(),
            "penalty weights do not match the coefficient length", ErrorCode::dimension_mismatch);
    Vector out(v.size());
    for (Index j = 0; j < v.size(); ++j) out[j] = prox_scalar(v[j], step, weight(j));
    return out;
}

double Regularizer::concave_part_derivative(double t) const {
    const double x = std::abs(t);
    const double sgn = t < 0.0 ? -1.0 : (t > 0.0 ? 1.0 : 0.0);
    const double lam = lambda_;
    switch (kind_) {
    case RegKind::scad: {
        const double a = shape_;
        if (x <= lam) return 0.0;
        if (x <= a * lam) return sgn * (lam - x) / (a - 1.0);
        return -sgn * lam;
    }
    case RegKind::mcp: {
        const double b = shape_;
        if (x <= b * lam) return -t / b;
        return -sgn * lam;
    }
    default: return 0.0;
    }
}

double Regularizer::strong_convexity() const {
    if (kind_ != RegKind::ridge) return 0.0;
    const double wmin = weights_.size() == 0 ? 1.0 : weights_.minCoeff();
    return 2.0 * lambda_ * wmin;
}

double Regularizer::zeta_minus() const {
    if (kind_ == RegKind::scad) return 1.0 / (shape_ - 1.0);
    if (kind_ == RegKind::mcp) return 1.0 / shape_;
    return 0.0;
}

FusedTransform::FusedTransform(Index d) : d_(d) {
    require(d >= 1, "fused transform dimension must be positive");
}

Vector FusedTransform::forward(const Vector& beta) const {
    require(beta.size() == d_, "fused transform dimension mismatch", ErrorCode::dimension_mismatch);
    Vector u(d_);
    for (Index i = 0; i + 1 < d_; ++i) u[i] = beta[i + 1] - beta[i];
    u[d_ - 1] = beta[d_ - 1];
    return u;
}

Vector FusedTransform::inverse(const Vector& u) const {
    require(u.size() == d_, "fused transform dimension mismatch", ErrorCode::dimension_mismatch);
    Vector beta(d_);
    beta[d_ - 1] = u[d_ - 1];
    for (Index i = d_ - 2; i >= 0; --i) beta[i] = beta[i + 1] - u[i];
    return beta;
}

Matrix FusedTransform::transform_design(const Matrix& x) const {
    require(x.cols() == d_, "fused transform dimension mismatch", ErrorCode::dimension_mismatch);
    Matrix out(x.rows(), d_);
    Vector running = Vector::Zero(x.rows());
    for (Index k = 0; k + 1 < d_; ++k) {
        running += x.col(k);
        out.col(k) = -running;
    }
    out.col(d_ - 1) = running + x.col(d_ - 1);
    return out;
}

Regularizer FusedTransform::penalty(double lambda) const {
    Vector w = Vector::Ones(d_);
    w[d_ - 1] = 0.0;
    return Regularizer::l1(lambda).with_weights(std::move(w));
}

} // namespace sketchreg
