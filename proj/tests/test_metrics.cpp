#include "oracles.hpp"

#include "sketchreg/embed.hpp"
#include "sketchreg/error.hpp"
#include "sketchreg/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

using namespace sketchreg;

namespace {

// Largest and smallest vᵀAv over unit v supported on each pair {i, j}, by a
// θ-grid on the circle.
std::pair<double, double> pair_grid_extremes(const Matrix& a) {
    double hi = -1e300, lo = 1e300;
    const Index d = a.rows();
    const double pitch = 1e-4;
    for (Index i = 0; i < d; ++i)
        for (Index j = i + 1; j < d; ++j)
            for (double t = 0.0; t < std::numbers::pi; t += pitch) {
                const double c = std::cos(t), s = std::sin(t);
                const double q = c * c * a(i, i) + 2.0 * c * s * a(i, j) + s * s * a(j, j);
                hi = std::max(hi, q);
                lo = std::min(lo, q);
            }
    return {hi, lo};
}

struct Straight {
    double xs, l2, precision, recall;
};

Straight straight_report(const Vector& hat, const Vector& ref, const Matrix& x, const std::vector<Index>& sref) {
    double l2 = 0.0;
    for (Index j = 0; j < hat.size(); ++j) l2 += (hat[j] - ref[j]) * (hat[j] - ref[j]);
    double xs = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
        double r = 0.0;
        for (Index j = 0; j < x.cols(); ++j) r += x(i, j) * (hat[j] - ref[j]);
        xs += r * r;
    }
    const std::set<Index> truth(sref.begin(), sref.end());
    int selected = 0, hit = 0;
    for (Index j = 0; j < hat.size(); ++j) {
        if (std::abs(hat[j]) > 1e-6) {
            ++selected;
            hit += truth.count(j) > 0;
        }
    }
    return {xs / double(x.rows()), std::sqrt(l2), selected ? double(hit) / selected : 1.0,
            truth.empty() ? 1.0 : double(hit) / double(truth.size())};
}

Vector random_sparse_unit(Index d, Index s, std::mt19937_64& gen) {
    std::vector<Index> idx(d);
    std::iota(idx.begin(), idx.end(), Index{0});
    std::shuffle(idx.begin(), idx.end(), gen);
    std::normal_distribution<double> nd;
    Vector v = Vector::Zero(d);
    for (Index k = 0; k < s; ++k) v[idx[k]] = nd(gen);
    return v.normalized();
}

} // namespace

TEST_CASE("x seminorm") {
    const Matrix x = oracle::gaussian_matrix(15, 6, 1);
    CHECK(x_seminorm(x, Vector::Zero(6)) == 0.0);
    const Vector v = oracle::gaussian_vector(6, 2);
    CHECK(std::abs(x_seminorm(x, v) - (x * v).norm()) <= 1e-12 * (x * v).norm());
    CHECK(x_seminorm(x, -3.0 * v) == doctest::Approx(3.0 * x_seminorm(x, v)).epsilon(1e-14));
    const Matrix q = Eigen::HouseholderQR<Matrix>(x).householderQ() * Matrix::Identity(15, 6);
    CHECK(std::abs(x_seminorm(q, v) - v.norm()) <= 1e-12);
}

TEST_CASE("exhaustive sparse eigenvalues on simple designs") {
    for (Index s = 1; s <= 4; ++s) {
        const auto r = sparse_eigen_exhaustive(Matrix::Identity(5, 5), s);
        CHECK(r.rho_plus == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.rho_minus == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.method == SparseEigenMethod::exhaustive);
    }
    const Matrix x = Vector{{2.0, 1.0}}.asDiagonal().toDenseMatrix();
    const auto r = sparse_eigen_exhaustive(x, 1);
    CHECK(r.rho_plus == doctest::Approx(4.0));
    CHECK(r.rho_minus == doctest::Approx(1.0));
    CHECK(r.probes == 2);
}

TEST_CASE("exhaustive pairs match a grid over the circle") {
    for (int k = 0; k < 3; ++k) {
        const Matrix x = oracle::gaussian_matrix(8, 6, 10 + k);
        const auto r = sparse_eigen_exhaustive(x, 2);
        const auto [hi, lo] = pair_grid_extremes(x.transpose() * x);
        CHECK(std::abs(r.rho_plus - hi) <= 1e-4);
        CHECK(std::abs(r.rho_minus - lo) <= 1e-4);
        CHECK(r.probes == 15);
    }
}

TEST_CASE("exhaustive guard") {
    CHECK_THROWS_AS(sparse_eigen_exhaustive(Matrix::Identity(21, 21), 2), Error);
    CHECK_THROWS_AS(sparse_eigen_exhaustive(Matrix::Identity(12, 12), 7), Error);
    CHECK_THROWS_AS(sparse_eigen_exhaustive(Matrix::Identity(5, 5), 0), Error);
    try {
        sparse_eigen_exhaustive(Matrix::Identity(30, 30), 3);
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("probe") != std::string::npos);
    }
}

TEST_CASE("sparse eigenvalues are ordered and monotone in s") {
    for (int k = 0; k < 5; ++k) {
        const Matrix x = oracle::gaussian_matrix(20, 10, 20 + k) / std::sqrt(20.0);
        double prev_plus = 0.0, prev_minus = 1e300;
        for (Index s = 1; s <= 6; ++s) {
            const auto r = sparse_eigen_exhaustive(x, s);
            CHECK(r.rho_minus >= -1e-12);
            CHECK(r.rho_minus <= r.rho_plus);
            CHECK(r.rho_plus >= prev_plus - 1e-12);
            CHECK(r.rho_minus <= prev_minus + 1e-12);
            prev_plus = r.rho_plus;
            prev_minus = r.rho_minus;
        }
    }
}

TEST_CASE("probe estimates are one-sided and tighten with more probes") {
    const Matrix x = oracle::gaussian_matrix(30, 12, 30) / std::sqrt(30.0);
    for (Index s : {2, 3, 4}) {
        const auto exact = sparse_eigen_exhaustive(x, s);
        double prev_plus = 0.0, prev_minus = 1e300;
        for (std::int64_t m : {1, 10, 100, 1000}) {
            const auto p = sparse_eigen_probe(x, s, m, 31);
            CHECK(p.method == SparseEigenMethod::probe);
            CHECK(p.probes == m);
            CHECK(p.rho_plus <= exact.rho_plus + 1e-12);
            CHECK(p.rho_minus >= exact.rho_minus - 1e-12);
            CHECK(p.rho_plus >= prev_plus);
            CHECK(p.rho_minus <= prev_minus);
            prev_plus = p.rho_plus;
            prev_minus = p.rho_minus;
        }
    }
    CHECK_THROWS_AS(sparse_eigen_probe(x, 2, 0, 1), Error);
}

TEST_CASE("a full support gives the extreme eigenvalues") {
    const Matrix x = oracle::gaussian_matrix(40, 25, 33);
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(x.transpose() * x).eigenvalues();
    const auto p = sparse_eigen_probe(x, 25, 3, 34);
    CHECK(p.rho_plus == doctest::Approx(ev.maxCoeff()).epsilon(1e-10));
    CHECK(p.rho_minus == doctest::Approx(ev.minCoeff()).epsilon(1e-10));
    const Matrix small = oracle::gaussian_matrix(10, 5, 35);
    const auto over = sparse_eigen_exhaustive(small, 6);
    const auto full = sparse_eigen_exhaustive(small, 5);
    CHECK(over.rho_plus == full.rho_plus);
    CHECK(over.rho_minus == full.rho_minus);
}

TEST_CASE("seminorm dominance on sparse vectors") {
    std::mt19937_64 gen(41);
    for (int k = 0; k < 5; ++k) {
        const Matrix x = oracle::gaussian_matrix(15, 10, 40 + k);
        for (Index s = 1; s <= 4; ++s) {
            const auto r = sparse_eigen_exhaustive(x, s);
            for (int t = 0; t < 200; ++t) {
                const Vector v = random_sparse_unit(10, s, gen) * 2.5;
                const double xv = x_seminorm(x, v);
                CHECK(std::sqrt(r.rho_minus) * v.norm() <= xv * (1.0 + 1e-10) + 1e-12);
                CHECK(xv <= std::sqrt(r.rho_plus) * v.norm() * (1.0 + 1e-10));
            }
        }
    }
}

TEST_CASE("sketched sparse eigenvalues stay near the originals") {
    int pass = 0;
    const int total = 20;
    for (int k = 0; k < total; ++k) {
        const Index d = 8 + k % 5;
        const Index s = 1 + k % 3;
        const Matrix x = oracle::gaussian_matrix(300, d, 50 + k) / std::sqrt(300.0);
        const SketchOperator p = build_embedding(k % 2 ? EmbeddingKind::sparse : EmbeddingKind::gaussian, 300,
                                                 k % 2 ? 2000 : 150, 60 + k);
        const Matrix xt = p.apply(x);
        const double eps = subspace_distortion(p, x);
        const auto orig = sparse_eigen_exhaustive(x, s);
        const auto sk = sparse_eigen_exhaustive(xt, s);
        const double band = eps * std::sqrt(double(s)) + 0.05;
        pass += sk.rho_plus <= orig.rho_plus + band && sk.rho_minus >= orig.rho_minus - band;
    }
    CHECK(pass >= total * 9 / 10);
}

TEST_CASE("error report examples") {
    const Matrix x = oracle::gaussian_matrix(10, 4, 70);
    const Vector ref{{1.0, 0.0, -2.0, 0.0}};
    const std::vector<Index> sref{0, 2};
    const auto same = error_report(ref, ref, x, sref);
    CHECK(same.l2_error == 0.0);
    CHECK(same.x_seminorm_sq_per_n == 0.0);
    CHECK(same.precision == 1.0);
    CHECK(same.recall == 1.0);
    CHECK(std::isnan(same.objective_gap));

    Vector hat = ref;
    hat[0] += 0.3;
    CHECK(error_report(hat, ref, x, sref).l2_error == doctest::Approx(0.3).epsilon(1e-14));
    hat[1] = 0.5;
    const auto r = error_report(hat, ref, x, sref);
    CHECK(r.precision == doctest::Approx(2.0 / 3.0));
    CHECK(r.recall == 1.0);
    CHECK(error_report(Vector::Zero(4), ref, x, sref).precision == 1.0);
    CHECK(error_report(Vector::Zero(4), ref, x, sref).recall == 0.0);
    CHECK(error_report(hat, ref, x, {}).recall == 1.0);
    CHECK_THROWS_AS(error_report(Vector::Zero(3), ref, x, sref), Error);
}

TEST_CASE("error report agrees with a straight-line recomputation") {
    std::mt19937_64 gen(80);
    for (int k = 0; k < 50; ++k) {
        const Matrix x = oracle::gaussian_matrix(12, 9, 100 + k);
        const Vector ref = random_sparse_unit(9, 3, gen);
        Vector hat = random_sparse_unit(9, 1 + k % 5, gen);
        if (k % 7 == 0) hat = ref;
        std::vector<Index> sref;
        for (Index j = 0; j < 9; ++j)
            if (ref[j] != 0.0) sref.push_back(j);
        const auto got = error_report(hat, ref, x, sref);
        const auto want = straight_report(hat, ref, x, sref);
        CHECK(std::abs(got.x_seminorm_sq_per_n - want.xs) <= 1e-12 * std::max(1.0, want.xs));
        CHECK(std::abs(got.l2_error - want.l2) <= 1e-12);
        CHECK(std::abs(got.precision - want.precision) <= 1e-12);
        CHECK(std::abs(got.recall - want.recall) <= 1e-12);
        CHECK(got.x_seminorm_sq_per_n >= 0.0);
        if (got.l2_error == 0.0) CHECK(got.x_seminorm_sq_per_n == 0.0);
    }
}

TEST_CASE("error report with a problem records the objective gap") {
    const Matrix x = oracle::gaussian_matrix(10, 4, 90);
    const Problem p{x, oracle::gaussian_vector(10, 91), Regularizer::l1(0.2)};
    const Vector a = oracle::gaussian_vector(4, 92), b = oracle::gaussian_vector(4, 93);
    const auto r = error_report(p, a, b, {});
    CHECK(r.objective_gap == doctest::Approx(p.objective(a) - p.objective(b)).epsilon(1e-14));
}

TEST_CASE("support helper") {
    const Vector v{{0.0, 2e-6, -5e-7, -1.0}};
    CHECK(support_of(v) == std::vector<Index>{1, 3});
    CHECK(support_of(v, 0.5) == std::vector<Index>{3});
}
