#pragma once

#include "sketchreg/linalg.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace sketchreg {

enum class EmbeddingKind { gaussian, sparse };

std::string_view to_string(EmbeddingKind kind);
EmbeddingKind parse_embedding_kind(std::string_view text);

/// Dense ñ×n map with i.i.d. N(0,1) entries scaled by 1/√ñ. Entries are
/// drawn column by column from Rng(seed).
class GaussianEmbedding {
public:
    static GaussianEmbedding build(Index n, Index rows, std::uint64_t seed);

    Index rows() const { return matrix_.rows(); }
    Index cols() const { return matrix_.cols(); }
    std::uint64_t seed() const { return seed_; }
    const Matrix& matrix() const { return matrix_; }

    Matrix apply(const Eigen::Ref<const Matrix>& x) const;
    Matrix apply(const SparseMatrix& x) const;

private:
    GaussianEmbedding(Matrix m, std::uint64_t seed) : matrix_(std::move(m)), seed_(seed) {}

    Matrix matrix_;
    std::uint64_t seed_;
};

/// One ±1 per column: column i maps to row bucket(i) with sign(i).
/// Never materialized; apply is a scatter over the rows of X.
class SparseEmbedding {
public:
    static SparseEmbedding build(Index n, Index rows, std::uint64_t seed);
    /// Buckets are 0-based row indices; signs must be ±1.
    static SparseEmbedding from_arrays(Index rows, std::vector<Index> buckets,
                                       std::vector<std::int8_t> signs);
    /// ñ = n, bucket(i) = i, sign(i) = +1.
    static SparseEmbedding identity(Index n);

    Index rows() const { return rows_; }
    Index cols() const { return static_cast<Index>(buckets_.size()); }
    std::uint64_t seed() const { return seed_; }
    std::span<const Index> buckets() const { return buckets_; }
    std::span<const std::int8_t> signs() const { return signs_; }

    Matrix apply(const Eigen::Ref<const Matrix>& x) const;
    Matrix apply(const SparseMatrix& x) const;
    Matrix to_dense() const;

private:
    SparseEmbedding(Index rows, std::vector<Index> b, std::vector<std::int8_t> s, std::uint64_t seed)
        : rows_(rows), buckets_(std::move(b)), signs_(std::move(s)), seed_(seed) {}

    Index rows_;
    std::vector<Index> buckets_;
    std::vector<std::int8_t> signs_;
    std::uint64_t seed_;
};

/// Either embedding behind one interface. Immutable once built.
class SketchOperator {
public:
    SketchOperator(GaussianEmbedding g) : impl_(std::move(g)) {}
    SketchOperator(SparseEmbedding s) : impl_(std::move(s)) {}

    EmbeddingKind kind() const;
    Index rows() const;
    Index cols() const;
    Matrix apply(const Eigen::Ref<const Matrix>& x) const;
    Matrix apply(const SparseMatrix& x) const;

    const GaussianEmbedding* gaussian() const { return std::get_if<GaussianEmbedding>(&impl_); }
    const SparseEmbedding* sparse() const { return std::get_if<SparseEmbedding>(&impl_); }

private:
    std::variant<GaussianEmbedding, SparseEmbedding> impl_;
};

SketchOperator build_embedding(EmbeddingKind kind, Index n, Index rows, std::uint64_t seed);

struct SketchBudget {
    double epsilon = 0.25;
    double delta = 0.1;
    Index rank = 1;
    double c_gaussian = 8.0;
    double c_sparse = 2.0;

    void validate() const;
};

/// Gaussian: ⌈c_g (r + ln(1/δ)) / ε²⌉.  Sparse: ⌈c_s r² / (δ ε²)⌉.
Index recommended_sketch_size(const SketchBudget& budget, EmbeddingKind kind);

/// max over probes u = Xβ (β ~ N(0, I)) of |‖Pu‖²/‖u‖² − 1|. `extra` adds
/// caller-chosen coefficient vectors as further probes; those with Xβ = 0
/// are skipped. Throws ErrorCode::unmeasurable if every probe is degenerate.
double empirical_distortion(const SketchOperator& p, const Matrix& x, int n_probes,
                            std::uint64_t seed, std::span<const Vector> extra = {});

/// Exact distortion over the whole column space of X: the largest
/// |σ² − 1| over singular values σ of P·Q, Q an orthonormal basis of range(X).
double subspace_distortion(const SketchOperator& p, const Matrix& x);

} // namespace sketchreg
