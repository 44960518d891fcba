#include "oracles.hpp"

#include "sketchreg/error.hpp"
#include "sketchreg/reg.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace sketchreg;

namespace {

std::vector<Regularizer> all_kinds(double lambda) {
    return {Regularizer::none(), Regularizer::ridge(lambda), Regularizer::l1(lambda),
            Regularizer::scad(lambda), Regularizer::mcp(lambda)};
}

// Scalar penalty written independently of the library.
double oracle_penalty(const Regularizer& r, double t) {
    const double lam = r.lambda();
    switch (r.kind()) {
    case RegKind::none: return 0.0;
    case RegKind::ridge: return lam * t * t;
    case RegKind::l1: return lam * std::abs(t);
    case RegKind::scad: return oracle::scad_penalty(t, lam, r.shape());
    case RegKind::mcp: return oracle::mcp_penalty(t, lam, r.shape());
    }
    return 0.0;
}

double concave_part(const Regularizer& r, double t) { return r.penalty(t) - r.lambda() * std::abs(t); }

} // namespace

TEST_CASE("penalty values") {
    CHECK(Regularizer::l1(2.0).value(Vector{{1.0, -3.0}}) == doctest::Approx(8.0).epsilon(1e-15));
    CHECK(Regularizer::ridge(0.5).value(Vector{{2.0, 0.0}}) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(Regularizer::none().value(Vector{{5.0, -1.0}}) == 0.0);
}

TEST_CASE("scad value matches the integral of its derivative") {
    const double lam = 1.0, a = 3.7;
    const auto r = Regularizer::scad(lam, a);
    auto deriv = [&](double z) {
        if (z <= lam) return lam;
        return std::max(a * lam - z, 0.0) / (a - 1.0);
    };
    for (double t = -6.0; t <= 6.0; t += 0.173) {
        const double u = std::abs(t);
        // Split at the kinks so the trapezoid rule is exact on each linear piece.
        double integral = oracle::integrate(deriv, 0.0, std::min(u, lam), 200);
        if (u > lam) integral += oracle::integrate(deriv, lam, std::min(u, a * lam), 200);
        if (u > a * lam) integral += oracle::integrate(deriv, a * lam, u, 200);
        CHECK(std::abs(r.value(Vector::Constant(1, t)) - integral) <= 1e-6);
    }
}

TEST_CASE("mcp value matches the integral of its derivative") {
    const double lam = 0.7, b = 2.5;
    const auto r = Regularizer::mcp(lam, b);
    auto deriv = [&](double z) { return lam * std::max(1.0 - z / (lam * b), 0.0); };
    for (double t = -5.0; t <= 5.0; t += 0.219) {
        const double u = std::abs(t);
        double integral = oracle::integrate(deriv, 0.0, std::min(u, b * lam), 400);
        if (u > b * lam) integral += oracle::integrate(deriv, b * lam, u, 10);
        CHECK(std::abs(r.value(Vector::Constant(1, t)) - integral) <= 1e-6);
    }
}

TEST_CASE("penalties vanish at zero and are nonnegative") {
    std::mt19937_64 gen(1);
    for (const auto& r : all_kinds(1.3)) {
        CHECK(r.value(Vector::Zero(4)) == 0.0);
        for (int k = 0; k < 200; ++k) CHECK(r.penalty(oracle::uniform(gen, -20.0, 20.0)) >= 0.0);
    }
}

TEST_CASE("value is the sum of scalar penalties") {
    const Vector beta = oracle::gaussian_vector(12, 4) * 3.0;
    for (const auto& r : all_kinds(0.8)) {
        double sum = 0.0;
        for (Index j = 0; j < beta.size(); ++j) sum += oracle_penalty(r, beta[j]);
        CHECK(std::abs(r.value(beta) - sum) <= 1e-12 * std::max(1.0, sum));
    }
}

TEST_CASE("value_change equals the difference of values") {
    const Vector a = oracle::gaussian_vector(30, 5);
    Vector b = a;
    b.head(10) += oracle::gaussian_vector(10, 6);
    for (const auto& r : all_kinds(0.4)) {
        CHECK(std::abs(r.value_change(b, a) - (r.value(b) - r.value(a))) <= 1e-12);
        CHECK(r.value_change(a, a) == 0.0);
    }
}

TEST_CASE("l1 prox is soft thresholding") {
    const auto r = Regularizer::l1(1.0);
    const Vector out = r.prox(Vector{{3.0, -0.5, 0.0}}, 1.0);
    CHECK(out == Vector{{2.0, 0.0, 0.0}});
    for (Index j = 0; j < 3; ++j) {
        const double v = Vector{{3.0, -0.5, 0.0}}[j];
        const auto best = oracle::grid_minimize(
            [&](double x) { return 0.5 * (x - v) * (x - v) + std::abs(x); }, -10.0, 10.0, 1e-4);
        CHECK(std::abs(out[j] - best.x) <= 1e-4);
    }
}

TEST_CASE("zero lambda prox is the identity") {
    const Vector v = oracle::gaussian_vector(9, 7) * 4.0;
    for (const auto& r : all_kinds(0.0)) CHECK(r.prox(v, 0.7) == v);
}

TEST_CASE("mcp prox matches grid search over a sweep") {
    const auto r = Regularizer::mcp(1.0, 2.0);
    for (double v = -4.0; v <= 4.0; v += 0.01) {
        const auto best = oracle::grid_minimize(
            [&](double x) { return 0.5 * (x - v) * (x - v) + oracle::mcp_penalty(x, 1.0, 2.0); }, -10.0, 10.0,
            1e-4);
        CHECK(std::abs(r.prox_scalar(v, 1.0) - best.x) <= 1e-3);
    }
}

TEST_CASE("prox attains the grid minimum for every kind") {
    std::mt19937_64 gen(2024);
    for (RegKind kind : {RegKind::none, RegKind::ridge, RegKind::l1, RegKind::scad, RegKind::mcp}) {
        for (int k = 0; k < 1000; ++k) {
            const double lam = oracle::uniform(gen, 0.0, 3.0);
            const double step = oracle::uniform(gen, 0.05, 3.0);
            const double v = oracle::uniform(gen, -10.0, 10.0);
            const double shape = kind == RegKind::scad ? oracle::uniform(gen, 2.1, 6.0)
                                                       : oracle::uniform(gen, 0.5, 5.0);
            const auto r = Regularizer::make(kind, lam, shape);
            auto obj = [&](double x) { return 0.5 * (x - v) * (x - v) + step * oracle_penalty(r, x); };
            const double got = obj(r.prox_scalar(v, step));
            const auto best = oracle::grid_minimize(obj, -10.0, 10.0, 1e-4);
            CHECK(got <= best.value + 1e-6);
        }
    }
}

TEST_CASE("nonconvex prox breaks ties toward zero") {
    // For b < step the MCP prox is hard thresholding at λ·sqrt(step·b), where
    // 0 and v have equal objective.
    const auto r = Regularizer::mcp(1.0, 0.5);
    const double step = 2.0;
    const double thr = std::sqrt(step * 0.5);
    CHECK(r.prox_scalar(thr, step) == 0.0);
    CHECK(r.prox_scalar(thr + 1e-6, step) == doctest::Approx(thr + 1e-6));
}

TEST_CASE("convex prox is nonexpansive") {
    std::mt19937_64 gen(3);
    for (const auto& r : {Regularizer::none(), Regularizer::ridge(0.9), Regularizer::l1(0.9)}) {
        for (int k = 0; k < 200; ++k) {
            const Vector u = oracle::gaussian_vector(6, gen()) * 3.0;
            const Vector v = oracle::gaussian_vector(6, gen()) * 3.0;
            const double step = oracle::uniform(gen, 0.1, 2.0);
            CHECK((r.prox(u, step) - r.prox(v, step)).norm() <= (u - v).norm() + 1e-14);
        }
    }
}

TEST_CASE("weights rescale lambda per coordinate") {
    const auto r = Regularizer::l1(1.0).with_weights(Vector{{1.0, 0.0, 2.0}});
    CHECK(r.value(Vector{{1.0, 5.0, -1.0}}) == doctest::Approx(3.0));
    CHECK(r.prox(Vector{{3.0, 3.0, 3.0}}, 1.0) == Vector{{2.0, 3.0, 1.0}});
    CHECK_THROWS_AS(Regularizer::l1(1.0).with_weights(Vector{{1.0, -1.0}}), Error);
}

TEST_CASE("descriptors") {
    const auto ridge = Regularizer::ridge(0.3);
    CHECK(ridge.strong_convexity() == doctest::Approx(0.6));
    CHECK(ridge.zeta_minus() == 0.0);
    CHECK(ridge.smoothness() == 0.0);
    const auto l1 = Regularizer::l1(0.3);
    CHECK(l1.strong_convexity() == 0.0);
    CHECK(l1.zeta_minus() == 0.0);
    CHECK(Regularizer::scad(1.0, 3.7).zeta_minus() == doctest::Approx(1.0 / 2.7));
    CHECK(Regularizer::mcp(1.0, 2.0).zeta_minus() == doctest::Approx(0.5));
    for (const auto& r : all_kinds(0.5)) CHECK(r.zeta_plus() == 0.0);
    CHECK(Regularizer::scad(1.0).shape() == Regularizer::default_scad_a);
    CHECK(Regularizer::mcp(1.0).shape() == Regularizer::default_mcp_b);
}

TEST_CASE("invalid shapes and lambdas are rejected") {
    CHECK_THROWS_AS(Regularizer::scad(1.0, 2.0), Error);
    CHECK_THROWS_AS(Regularizer::mcp(1.0, 0.0), Error);
    CHECK_THROWS_AS(Regularizer::l1(-1.0), Error);
    CHECK_THROWS_AS(Regularizer::l1(1.0).prox(Vector::Ones(2), 0.0), Error);
}

TEST_CASE("concave part derivative") {
    const double lam = 1.2;
    const auto scad = Regularizer::scad(lam, 3.7);
    const auto mcp = Regularizer::mcp(lam, 2.0);
    for (double t = -lam; t <= lam; t += 0.05) CHECK(scad.concave_part_derivative(t) == 0.0);
    for (double t : {2.0 * lam, 2.5 * lam, 10.0}) {
        CHECK(mcp.concave_part_derivative(t) == doctest::Approx(-lam));
        CHECK(mcp.concave_part_derivative(-t) == doctest::Approx(lam));
    }
    std::mt19937_64 gen(4);
    for (const auto& r : all_kinds(lam)) {
        CHECK(r.concave_part_derivative(0.0) == 0.0);
        for (int k = 0; k < 300; ++k) {
            const double t = oracle::uniform(gen, -8.0, 8.0);
            const double q = r.concave_part_derivative(t);
            CHECK(std::abs(q) <= lam + 1e-15);
            CHECK(r.concave_part_derivative(-t) == doctest::Approx(-q));
        }
    }
}

TEST_CASE("concave part derivative matches finite differences of the value") {
    const double h = 1e-6;
    for (const auto& r : {Regularizer::scad(0.9, 3.0), Regularizer::mcp(0.9, 1.5)}) {
        for (double t = 0.013; t <= 6.0; t += 0.07) {
            const double fd = (concave_part(r, t + h) - concave_part(r, t - h)) / (2.0 * h);
            CHECK(std::abs(fd - r.concave_part_derivative(t)) <= 1e-5);
        }
    }
}

TEST_CASE("concave part is concave on the positive axis") {
    const double h = 1e-3;
    for (const auto& r : {Regularizer::scad(1.0), Regularizer::mcp(1.0), Regularizer::scad(0.3, 2.5)}) {
        for (double t = h; t <= 8.0; t += 0.011) {
            const double second = (concave_part(r, t + h) - 2.0 * concave_part(r, t) + concave_part(r, t - h)) / (h * h);
            CHECK(second <= 1e-8);
        }
    }
}

TEST_CASE("concave part slopes respect the descriptor bounds") {
    std::mt19937_64 gen(5);
    for (const auto& r : {Regularizer::scad(1.0, 3.7), Regularizer::mcp(1.0, 2.0), Regularizer::scad(2.0, 5.0),
                          Regularizer::mcp(0.5, 0.8)}) {
        for (int k = 0; k < 2000; ++k) {
            double t1 = oracle::uniform(gen, -10.0, 10.0);
            double t2 = oracle::uniform(gen, -10.0, 10.0);
            if (t1 > t2) std::swap(t1, t2);
            if (t2 - t1 < 1e-9) continue;
            const double slope = (r.concave_part_derivative(t2) - r.concave_part_derivative(t1)) / (t2 - t1);
            CHECK(slope >= -r.zeta_minus() - 1e-9);
            CHECK(slope <= -r.zeta_plus() + 1e-9);
        }
    }
}

TEST_CASE("fused transform") {
    const FusedTransform t(3);
    CHECK(t.forward(Vector{{1.0, 2.0, 3.0}}) == Vector{{1.0, 1.0, 3.0}});
    CHECK(t.inverse(Vector{{1.0, 1.0, 3.0}}) == Vector{{1.0, 2.0, 3.0}});

    const FusedTransform big(50);
    const Vector beta = oracle::gaussian_vector(50, 8);
    CHECK((big.inverse(big.forward(beta)) - beta).norm() <= 1e-12);
    CHECK((big.forward(big.inverse(beta)) - beta).norm() <= 1e-12);

    SUBCASE("the transformed design and penalty reproduce the chain penalty") {
        const Matrix x = oracle::gaussian_matrix(20, 50, 9);
        const Vector u = big.forward(beta);
        CHECK((big.transform_design(x) * u - x * beta).norm() <= 1e-10 * (x * beta).norm());
        double chain = 0.0;
        for (Index i = 0; i + 1 < 50; ++i) chain += std::abs(beta[i] - beta[i + 1]);
        CHECK(big.penalty(0.7).value(u) == doctest::Approx(0.7 * chain).epsilon(1e-12));
    }

    CHECK_THROWS_AS(FusedTransform(0), Error);
    CHECK_THROWS_AS(t.forward(Vector::Ones(4)), Error);
}

TEST_CASE("kind names round-trip") {
    for (RegKind k : {RegKind::none, RegKind::ridge, RegKind::l1, RegKind::scad, RegKind::mcp})
        CHECK(parse_reg_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_reg_kind("lasso2"), Error);
}
