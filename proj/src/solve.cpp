#include "sketchreg/solve.hpp"

#include "sketchreg/error.hpp"

#include <cmath>
#include <sstream>

namespace sketchreg {

namespace {

constexpr Index exact_eigen_limit = 400;
constexpr double rank_tol = 1e-9;

double largest_eigenvalue(const Matrix& sym) {
    if (sym.rows() == 0) return 0.0;
    if (sym.rows() <= exact_eigen_limit) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
        return std::max(0.0, eig.eigenvalues().maxCoeff());
    }
    return lipschitz_estimate(sym);
}

} // namespace

GramOperator::GramOperator(Storage s, Matrix data) : storage_(s), data_(std::move(data)) {
    if (storage_ == Storage::dense) {
        dim_ = data_.cols();
        lipschitz_ = largest_eigenvalue(data_);
    } else {
        dim_ = data_.cols();
        if (data_.rows() <= exact_eigen_limit) {
            const Matrix small = data_ * data_.transpose();
            lipschitz_ = largest_eigenvalue(small);
        } else {
            lipschitz_ = lipschitz_estimate_factor(data_);
        }
    }
}

std::shared_ptr<const GramOperator> GramOperator::from_factor(const Matrix& m) {
    require(m.allFinite(), "factor contains non-finite values", ErrorCode::numeric);
    if (m.rows() >= m.cols()) {
        Matrix a(m.cols(), m.cols());
        a.noalias() = m.transpose() * m;
        return std::shared_ptr<const GramOperator>(new GramOperator(Storage::dense, std::move(a)));
    }
    auto basis = column_basis(m, rank_tol, m.rows() / 2);
    if (basis) {
        Matrix compressed(basis->cols(), m.cols());
        compressed.noalias() = basis->transpose() * m;
        return std::shared_ptr<const GramOperator>(
            new GramOperator(Storage::factor, std::move(compressed)));
    }
    return std::shared_ptr<const GramOperator>(new GramOperator(Storage::factor, m));
}

std::shared_ptr<const GramOperator> GramOperator::from_dense(Matrix a) {
    require(a.rows() == a.cols(), "Gram matrix must be square", ErrorCode::dimension_mismatch);
    require(a.allFinite(), "Gram matrix contains non-finite values", ErrorCode::numeric);
    return std::shared_ptr<const GramOperator>(new GramOperator(Storage::dense, std::move(a)));
}

Vector GramOperator::apply(const Vector& v) const {
    require(v.size() == dim_, "vector length does not match the Gram operator",
            ErrorCode::dimension_mismatch);
    if (storage_ == Storage::dense) return data_ * v;
    if (data_.rows() == 0) return Vector::Zero(dim_);
    const Vector mv = data_ * v;
    return data_.transpose() * mv;
}

Matrix GramOperator::to_dense() const {
    if (storage_ == Storage::dense) return data_;
    return data_.transpose() * data_;
}

QuadraticForm::QuadraticForm(std::shared_ptr<const GramOperator> a, Vector b)
    : gram(std::move(a)), linear(std::move(b)) {
    require(gram != nullptr, "quadratic form needs a Gram operator");
    require(linear.size() == gram->dim(), "linear term does not match the Gram operator",
            ErrorCode::dimension_mismatch);
}

double QuadraticForm::value(const Vector& beta) const {
    return 0.5 * beta.dot(gram->apply(beta)) - linear.dot(beta);
}

void SolverConfig::validate() const {
    require(max_iters > 0, "max_iters must be positive");
    require(rel_tol > 0.0, "rel_tol must be positive");
    require(abs_tol >= 0.0, "abs_tol must be nonnegative");
    require(eta > 0.0 && eta < 1.0, "continuation factor eta must lie in (0, 1)");
}

namespace {

struct Stepper {
    const QuadraticForm& qf;
    const Regularizer& reg;
    double step;

    double objective(const Vector& x, const Vector& ax) const {
        return 0.5 * x.dot(ax) - qf.linear.dot(x) + reg.value(x);
    }

    // Objective difference f(xn) − f(x) evaluated from the step itself.
    double change(const Vector& xn, const Vector& axn, const Vector& x, const Vector& ax) const {
        const Vector d = xn - x;
        return 0.5 * d.dot(axn + ax) - qf.linear.dot(d) + reg.value_change(xn, x);
    }

    Vector forward_backward(const Vector& x, const Vector& ax) const {
        return reg.prox(x - step * (ax - qf.linear), step);
    }

    double residual(const Vector& x, const Vector& ax) const {
        return (x - forward_backward(x, ax)).norm();
    }
};

double effective_lipschitz(const QuadraticForm& qf) {
    const double l = qf.gram->lipschitz();
    return l > 0.0 ? l : 1.0;
}

double tolerance(const SolverConfig& cfg, const Vector& x) {
    return std::max(cfg.rel_tol * (1.0 + x.norm()), cfg.abs_tol);
}

[[noreturn]] void non_finite(int iter, double lipschitz) {
    std::ostringstream os;
    os << "non-finite iterate at FISTA iteration " << iter << " (step 1/L with L = " << lipschitz
       << ")";
    fail(ErrorCode::numeric, os.str());
}

} // namespace

double fixed_point_residual(const QuadraticForm& qf, const Regularizer& reg, const Vector& beta) {
    const Stepper st{qf, reg, 1.0 / effective_lipschitz(qf)};
    return st.residual(beta, qf.gram->apply(beta));
}

SolveResult fista(const QuadraticForm& qf, const Regularizer& reg, const SolverConfig& cfg,
                  const Vector& init) {
    cfg.validate();
    require(init.size() == qf.dim(), "initial point has wrong length", ErrorCode::dimension_mismatch);
    require(init.allFinite(), "initial point is not finite", ErrorCode::numeric);

    const double lip = effective_lipschitz(qf);
    const Stepper st{qf, reg, 1.0 / lip};

    SolveResult res;
    Vector x = init;
    Vector ax = qf.gram->apply(x);
    double f = st.objective(x, ax);
    res.trace.push_back(f);
    res.residual = st.residual(x, ax);
    if (res.residual <= tolerance(cfg, x)) {
        res.converged = true;
    } else {
        Vector y = x;
        Vector ay = ax;
        double t = 1.0;
        bool plain = true;
        for (int it = 1; it <= cfg.max_iters; ++it) {
            res.iterations = it;
            Vector xn = st.forward_backward(y, ay);
            Vector axn = qf.gram->apply(xn);
            if (!xn.allFinite() || !axn.allFinite()) non_finite(it, lip);
            const double change = st.change(xn, axn, x, ax);
            if (!std::isfinite(change)) non_finite(it, lip);
            const double fn = f + change;

            if (change > 0.0 || (plain && xn == x)) {
                // A plain forward-backward step from x cannot increase the
                // objective; if it did, we are at rounding level and stop.
                if (plain) break;
                y = x;
                ay = ax;
                t = 1.0;
                plain = true;
                ++res.restarts;
                continue;
            }
            const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const double mom = (t - 1.0) / tn;
            y = xn + mom * (xn - x);
            ay = axn + mom * (axn - ax);
            plain = mom == 0.0;
            x = std::move(xn);
            ax = std::move(axn);
            f = fn;
            t = tn;
            res.trace.push_back(f);

            res.residual = st.residual(x, ax);
            if (res.residual <= tolerance(cfg, x)) {
                res.converged = true;
                break;
            }
        }
        if (!res.converged) {
            res.residual = st.residual(x, ax);
            res.converged = res.residual <= tolerance(cfg, x);
        }
    }
    res.objective = st.objective(x, ax);
    res.beta = std::move(x);
    return res;
}

SolveResult lambda_path(const QuadraticForm& qf, const Regularizer& reg, const SolverConfig& cfg,
                        const Vector& init) {
    cfg.validate();
    const double target = reg.lambda();
    require(target > 0.0, "continuation needs a positive target lambda");
    const double start = qf.linear.size() > 0 ? qf.linear.cwiseAbs().maxCoeff() : 0.0;
    if (target >= start) return fista(qf, reg, cfg, init);

    SolveResult out;
    int stages = 0;
    Vector x = init;
    double lam = start;
    int total_iters = 0;
    int total_restarts = 0;
    for (;;) {
        SolveResult stage = fista(qf, reg.with_lambda(lam), cfg, x);
        total_iters += stage.iterations;
        total_restarts += stage.restarts;
        ++stages;
        x = stage.beta;
        if (lam == target) {
            out = std::move(stage);
            break;
        }
        lam = std::max(cfg.eta * lam, target);
    }
    out.iterations = total_iters;
    out.restarts = total_restarts;
    out.stages = stages;
    return out;
}

SolveResult solve_quadratic(const QuadraticForm& qf, const Regularizer& reg,
                            const SolverConfig& cfg, const Vector& init) {
    if (!reg.convex() && reg.lambda() > 0.0) return lambda_path(qf, reg, cfg, init);
    return fista(qf, reg, cfg, init);
}

} // namespace sketchreg
