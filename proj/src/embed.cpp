#include "sketchreg/embed.hpp"

#include "sketchreg/error.hpp"
#include "sketchreg/rng.hpp"

#include <cmath>

namespace sketchreg {

std::string_view to_string(EmbeddingKind kind) {
    return kind == EmbeddingKind::gaussian ? "gaussian" : "sparse";
}

EmbeddingKind parse_embedding_kind(std::string_view text) {
    if (text == "gaussian") return EmbeddingKind::gaussian;
    if (text == "sparse") return EmbeddingKind::sparse;
    fail(ErrorCode::invalid_argument, "unknown embedding kind: " + std::string(text));
}

namespace {

void check_dims(Index n, Index rows) {
    require(n >= 1 && rows >= 1, "embedding dimensions must be positive");
}

void check_conform(Index cols, Index x_rows) {
    require(cols == x_rows, "embedding has " + std::to_string(cols) +
                                " columns but X has " + std::to_string(x_rows) + " rows",
            ErrorCode::dimension_mismatch);
}

} // namespace

GaussianEmbedding GaussianEmbedding::build(Index n, Index rows, std::uint64_t seed) {
    check_dims(n, rows);
    Rng rng(seed);
    const double root = std::sqrt(static_cast<double>(rows));
    Matrix m(rows, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal() / root;
    return GaussianEmbedding(std::move(m), seed);
}

Matrix GaussianEmbedding::apply(const Eigen::Ref<const Matrix>& x) const {
    check_conform(cols(), x.rows());
    Matrix out(rows(), x.cols());
    out.noalias() = matrix_ * x;
    return out;
}

Matrix GaussianEmbedding::apply(const SparseMatrix& x) const {
    check_conform(cols(), x.rows());
    Matrix out(rows(), x.cols());
    out.noalias() = matrix_ * x;
    return out;
}

SparseEmbedding SparseEmbedding::build(Index n, Index rows, std::uint64_t seed) {
    check_dims(n, rows);
    Rng rng(seed);
    std::vector<Index> buckets(static_cast<std::size_t>(n));
    std::vector<std::int8_t> signs(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        buckets[i] = static_cast<Index>(rng.below(static_cast<std::uint64_t>(rows)));
        signs[i] = static_cast<std::int8_t>(rng.sign());
    }
    return SparseEmbedding(rows, std::move(buckets), std::move(signs), seed);
}

SparseEmbedding SparseEmbedding::from_arrays(Index rows, std::vector<Index> buckets,
                                             std::vector<std::int8_t> signs) {
    check_dims(static_cast<Index>(buckets.size()), rows);
    require(buckets.size() == signs.size(), "bucket and sign arrays differ in length",
            ErrorCode::dimension_mismatch);
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        require(buckets[i] >= 0 && buckets[i] < rows, "bucket index out of range");
        require(signs[i] == 1 || signs[i] == -1, "signs must be +1 or -1");
    }
    return SparseEmbedding(rows, std::move(buckets), std::move(signs), 0);
}

SparseEmbedding SparseEmbedding::identity(Index n) {
    check_dims(n, n);
    std::vector<Index> buckets(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) buckets[i] = i;
    return SparseEmbedding(n, std::move(buckets), std::vector<std::int8_t>(n, 1), 0);
}

Matrix SparseEmbedding::apply(const Eigen::Ref<const Matrix>& x) const {
    check_conform(cols(), x.rows());
    Matrix out = Matrix::Zero(rows_, x.cols());
    const Index n = cols();
    for (Index j = 0; j < x.cols(); ++j) {
        const double* src = x.col(j).data();
        double* dst = out.col(j).data();
        for (Index i = 0; i < n; ++i) {
            dst[buckets_[i]] += signs_[i] > 0 ? src[i] : -src[i];
        }
    }
    return out;
}

Matrix SparseEmbedding::apply(const SparseMatrix& x) const {
    check_conform(cols(), x.rows());
    Matrix out = Matrix::Zero(rows_, x.cols());
    for (Index j = 0; j < x.outerSize(); ++j) {
        double* dst = out.col(j).data();
        for (SparseMatrix::InnerIterator it(x, j); it; ++it) {
            const Index i = it.row();
            dst[buckets_[i]] += signs_[i] > 0 ? it.value() : -it.value();
        }
    }
    return out;
}

Matrix SparseEmbedding::to_dense() const {
    Matrix m = Matrix::Zero(rows_, cols());
    for (Index i = 0; i < cols(); ++i) m(buckets_[i], i) = signs_[i];
    return m;
}

EmbeddingKind SketchOperator::kind() const {
    return std::holds_alternative<GaussianEmbedding>(impl_) ? EmbeddingKind::gaussian
                                                            : EmbeddingKind::sparse;
}

Index SketchOperator::rows() const {
    return std::visit([](const auto& e) { return e.rows(); }, impl_);
}

Index SketchOperator::cols() const {
    return std::visit([](const auto& e) { return e.cols(); }, impl_);
}

Matrix SketchOperator::apply(const Eigen::Ref<const Matrix>& x) const {
    return std::visit([&](const auto& e) { return e.apply(x); }, impl_);
}

Matrix SketchOperator::apply(const SparseMatrix& x) const {
    return std::visit([&](const auto& e) { return e.apply(x); }, impl_);
}

SketchOperator build_embedding(EmbeddingKind kind, Index n, Index rows, std::uint64_t seed) {
    if (kind == EmbeddingKind::gaussian) return GaussianEmbedding::build(n, rows, seed);
    return SparseEmbedding::build(n, rows, seed);
}

void SketchBudget::validate() const {
    require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    require(rank >= 1, "rank estimate must be positive");
    require(c_gaussian > 0.0 && c_sparse > 0.0, "embedding-size constants must be positive");
}

Index recommended_sketch_size(const SketchBudget& budget, EmbeddingKind kind) {
    budget.validate();
    const double r = static_cast<double>(budget.rank);
    const double eps2 = budget.epsilon * budget.epsilon;
    const double raw = kind == EmbeddingKind::gaussian
                           ? budget.c_gaussian * (r + std::log(1.0 / budget.delta)) / eps2
                           : budget.c_sparse * r * r / (budget.delta * eps2);
    return std::max<Index>(1, static_cast<Index>(std::ceil(raw)));
}

double empirical_distortion(const SketchOperator& p, const Matrix& x, int n_probes,
                            std::uint64_t seed, std::span<const Vector> extra) {
    require(n_probes >= 0, "probe count must be nonnegative");
    check_conform(p.cols(), x.rows());
    constexpr int max_attempts = 8;

    Rng rng(seed);
    std::vector<Vector> coeffs;
    coeffs.reserve(static_cast<std::size_t>(n_probes) + extra.size());
    for (int k = 0; k < n_probes; ++k) {
        for (int attempt = 0; attempt < max_attempts; ++attempt) {
            Vector beta(x.cols());
            for (Index j = 0; j < x.cols(); ++j) beta[j] = rng.normal();
            if ((x * beta).squaredNorm() > 0.0) {
                coeffs.push_back(std::move(beta));
                break;
            }
        }
    }
    for (const Vector& e : extra) {
        require(e.size() == x.cols(), "extra probe has wrong length", ErrorCode::dimension_mismatch);
        coeffs.push_back(e);
    }

    Matrix b(x.cols(), static_cast<Index>(coeffs.size()));
    for (std::size_t k = 0; k < coeffs.size(); ++k) b.col(static_cast<Index>(k)) = coeffs[k];
    const Matrix u = x * b;
    const Matrix pu = p.apply(u);

    double worst = -1.0;
    for (Index k = 0; k < u.cols(); ++k) {
        const double denom = u.col(k).squaredNorm();
        if (!(denom > 0.0)) continue;
        worst = std::max(worst, std::abs(pu.col(k).squaredNorm() / denom - 1.0));
    }
    if (worst < 0.0) fail(ErrorCode::unmeasurable, "all distortion probes are degenerate (X v = 0)");
    return worst;
}

double subspace_distortion(const SketchOperator& p, const Matrix& x) {
    check_conform(p.cols(), x.rows());
    const auto q = column_basis(x);
    if (!q || q->cols() == 0) fail(ErrorCode::unmeasurable, "X has an empty column space");
    const Matrix pq = p.apply(*q);
    const Matrix gram = pq.transpose() * pq;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const Vector& ev = eig.eigenvalues();
    return std::max(std::abs(ev.maxCoeff() - 1.0), std::abs(1.0 - ev.minCoeff()));
}

} // namespace sketchreg
