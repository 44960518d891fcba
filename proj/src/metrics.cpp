#include "sketchreg/metrics.hpp"

#include "sketchreg/error.hpp"
#include "sketchreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sketchreg {

double x_seminorm(const Matrix& x, const Vector& v) {
    require(x.cols() == v.size(), "vector length does not match the design",
            ErrorCode::dimension_mismatch);
    return (x * v).norm();
}

std::vector<Index> support_of(const Vector& beta, double threshold) {
    std::vector<Index> s;
    for (Index j = 0; j < beta.size(); ++j)
        if (std::abs(beta[j]) > threshold) s.push_back(j);
    return s;
}

ErrorReport error_report(const Vector& beta_hat, const Vector& beta_ref, const Matrix& x,
                         const std::vector<Index>& support_ref) {
    require(beta_hat.size() == beta_ref.size() && beta_hat.size() == x.cols(),
            "error_report inputs do not conform", ErrorCode::dimension_mismatch);
    ErrorReport rep;
    const Vector diff = beta_hat - beta_ref;
    rep.l2_error = diff.norm();
    const double xs = x_seminorm(x, diff);
    rep.x_seminorm_sq_per_n = xs * xs / static_cast<double>(x.rows());

    const auto est = support_of(beta_hat);
    std::vector<Index> ref = support_ref;
    std::sort(ref.begin(), ref.end());
    std::vector<Index> common;
    std::set_intersection(est.begin(), est.end(), ref.begin(), ref.end(), std::back_inserter(common));
    const double hits = static_cast<double>(common.size());
    rep.precision = est.empty() ? 1.0 : hits / static_cast<double>(est.size());
    rep.recall = ref.empty() ? 1.0 : hits / static_cast<double>(ref.size());
    rep.objective_gap = std::numeric_limits<double>::quiet_NaN();
    return rep;
}

ErrorReport error_report(const Problem& problem, const Vector& beta_hat, const Vector& beta_ref,
                         const std::vector<Index>& support_ref) {
    ErrorReport rep = error_report(beta_hat, beta_ref, problem.x, support_ref);
    rep.objective_gap = problem.objective(beta_hat) - problem.objective(beta_ref);
    return rep;
}

std::string_view to_string(SparseEigenMethod m) {
    return m == SparseEigenMethod::exhaustive ? "exhaustive" : "probe";
}

namespace {

struct Extremes {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();

    void update(const Matrix& gram, const std::vector<Index>& support) {
        const Index k = static_cast<Index>(support.size());
        Matrix sub(k, k);
        for (Index a = 0; a < k; ++a)
            for (Index b = 0; b < k; ++b) sub(a, b) = gram(support[a], support[b]);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(sub, Eigen::EigenvaluesOnly);
        hi = std::max(hi, eig.eigenvalues()[k - 1]);
        lo = std::min(lo, eig.eigenvalues()[0]);
    }
};

} // namespace

SparseEigenReport sparse_eigen_exhaustive_gram(const Matrix& gram, Index s) {
    require(gram.rows() == gram.cols(), "Gram matrix must be square", ErrorCode::dimension_mismatch);
    const Index d = gram.rows();
    require(s >= 1, "sparsity level must be positive");
    if (d > exhaustive_max_d || s > exhaustive_max_s)
        fail(ErrorCode::invalid_argument,
             "exhaustive sparse eigenvalues need d <= 20 and s <= 6; use the probe method");
    const Index k = std::min(s, d);

    // Size-k supports suffice: smaller supports are interlaced inside them.
    Extremes ex;
    std::vector<Index> support(static_cast<std::size_t>(k));
    std::iota(support.begin(), support.end(), Index{0});
    std::int64_t count = 0;
    for (;;) {
        ex.update(gram, support);
        ++count;
        Index i = k - 1;
        while (i >= 0 && support[i] == d - k + i) --i;
        if (i < 0) break;
        ++support[i];
        for (Index j = i + 1; j < k; ++j) support[j] = support[j - 1] + 1;
    }
    SparseEigenReport rep;
    rep.s = s;
    rep.rho_plus = std::max(0.0, ex.hi);
    rep.rho_minus = std::max(0.0, ex.lo);
    rep.method = SparseEigenMethod::exhaustive;
    rep.probes = count;
    return rep;
}

SparseEigenReport sparse_eigen_exhaustive(const Matrix& x, Index s) {
    if (x.cols() > exhaustive_max_d || s > exhaustive_max_s)
        fail(ErrorCode::invalid_argument,
             "exhaustive sparse eigenvalues need d <= 20 and s <= 6; use the probe method");
    const Matrix gram = x.transpose() * x;
    return sparse_eigen_exhaustive_gram(gram, s);
}

SparseEigenReport sparse_eigen_probe(const Matrix& x, Index s, std::int64_t n_probes,
                                     std::uint64_t seed) {
    require(n_probes >= 1, "probe count must be positive");
    require(s >= 1, "sparsity level must be positive");
    const Index d = x.cols();
    const Index k = std::min(s, d);
    Rng rng(seed);
    Extremes ex;
    std::vector<Index> pool(static_cast<std::size_t>(d));
    std::vector<Index> support(static_cast<std::size_t>(k));
    for (std::int64_t p = 0; p < n_probes; ++p) {
        std::iota(pool.begin(), pool.end(), Index{0});
        for (Index j = 0; j < k; ++j) {
            const Index pick = j + static_cast<Index>(rng.below(static_cast<std::uint64_t>(d - j)));
            std::swap(pool[j], pool[pick]);
            support[j] = pool[j];
        }
        const Matrix cols = x(Eigen::all, support);
        const Matrix sub = cols.transpose() * cols;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(sub, Eigen::EigenvaluesOnly);
        ex.hi = std::max(ex.hi, eig.eigenvalues()[k - 1]);
        ex.lo = std::min(ex.lo, eig.eigenvalues()[0]);
    }
    SparseEigenReport rep;
    rep.s = s;
    rep.rho_plus = std::max(0.0, ex.hi);
    rep.rho_minus = std::max(0.0, ex.lo);
    rep.method = SparseEigenMethod::probe;
    rep.probes = n_probes;
    return rep;
}

} // namespace sketchreg
