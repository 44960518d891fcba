#include "sketchreg.h"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace {

// Column-major n×d Gaussian matrix.
std::vector<double> gaussian(std::int64_t n, std::int64_t d, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    std::vector<double> m(static_cast<size_t>(n * d));
    for (auto& v : m) v = nd(gen);
    return m;
}

std::vector<double> beta_of(const skr_run* run) {
    std::vector<double> b(static_cast<size_t>(skr_run_dim(run)));
    REQUIRE(skr_run_beta(run, b.data(), b.size()) == SKR_OK);
    return b;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

template <class Get>
std::string fetch(Get&& get) {
    size_t needed = 0;
    REQUIRE(get(nullptr, 0, &needed) == SKR_OK);
    std::string s(needed + 1, '\0');
    REQUIRE(get(s.data(), s.size(), &needed) == SKR_OK);
    s.resize(needed);
    return s;
}

} // namespace

TEST_CASE("version, status names and the last error") {
    CHECK(std::string(skr_version()) == "1.0.0");
    CHECK(std::string(skr_status_name(SKR_OK)) == "ok");
    CHECK(std::string(skr_status_name(SKR_DIMENSION_MISMATCH)) == "dimension_mismatch");
    CHECK(std::string(skr_status_name(SKR_UNMEASURABLE)) == "unmeasurable");
    skr_embedding* e = nullptr;
    CHECK(skr_embedding_build(SKR_EMBEDDING_GAUSSIAN, 0, 5, 1, &e) == SKR_INVALID_ARGUMENT);
    CHECK(e == nullptr);
    CHECK(std::strlen(skr_last_error()) > 0);
    CHECK(skr_embedding_shape(nullptr, nullptr, nullptr) == SKR_INVALID_ARGUMENT);
}

TEST_CASE("option defaults") {
    skr_sro_options o;
    skr_sro_options_default(&o);
    CHECK(o.rho == 0.5);
    CHECK(o.delta == 0.1);
    CHECK(o.embedding == SKR_EMBEDDING_GAUSSIAN);
    CHECK(o.sketch_size == 0);
    CHECK(o.iterations == 10);
    CHECK(o.solver.max_iters == 10000);
    CHECK(o.solver.rel_tol == 1e-10);
    CHECK(o.solver.eta == 0.7);
}

TEST_CASE("penalty value and prox") {
    const skr_penalty_spec l1{SKR_PENALTY_L1, 1.0, 0.0};
    const double v[3] = {3.0, -0.5, 0.0};
    double out[3];
    REQUIRE(skr_prox(&l1, v, 3, 1.0, out) == SKR_OK);
    CHECK(out[0] == 2.0);
    CHECK(out[1] == 0.0);
    CHECK(out[2] == 0.0);
    double h = 0.0;
    REQUIRE(skr_penalty_value(&l1, v, 3, &h) == SKR_OK);
    CHECK(h == 3.5);
    const skr_penalty_spec mcp{SKR_PENALTY_MCP, 1.0, 0.0};
    const double big[1] = {5.0};
    REQUIRE(skr_penalty_value(&mcp, big, 1, &h) == SKR_OK);
    CHECK(h == doctest::Approx(1.0)); // b λ² / 2 with the default b = 2
    const skr_penalty_spec fused{SKR_PENALTY_FUSED, 1.0, 0.0};
    CHECK(skr_penalty_value(&fused, v, 3, &h) == SKR_INVALID_ARGUMENT);
    CHECK(skr_prox(&l1, v, 3, 0.0, out) == SKR_INVALID_ARGUMENT);
    const skr_penalty_spec neg{SKR_PENALTY_L1, -1.0, 0.0};
    CHECK(skr_prox(&neg, v, 3, 1.0, out) == SKR_INVALID_ARGUMENT);
}

TEST_CASE("recommended sketch size") {
    std::int64_t rows = 0;
    REQUIRE(skr_recommended_sketch_size(SKR_EMBEDDING_GAUSSIAN, 1.0 / 3.0, 0.1, 10, &rows) == SKR_OK);
    CHECK(rows == static_cast<std::int64_t>(std::ceil(8.0 * (10.0 + std::log(10.0)) * 9.0)));
    REQUIRE(skr_recommended_sketch_size(SKR_EMBEDDING_SPARSE, 0.5, 0.1, 10, &rows) == SKR_OK);
    CHECK(rows == 8000);
    CHECK(skr_recommended_sketch_size(SKR_EMBEDDING_SPARSE, 0.0, 0.1, 10, &rows) == SKR_INVALID_ARGUMENT);
}

TEST_CASE("embeddings") {
    const auto x = gaussian(50, 4, 1);
    skr_embedding* id = nullptr;
    REQUIRE(skr_embedding_identity(50, &id) == SKR_OK);
    std::vector<double> out(50 * 4);
    REQUIRE(skr_embedding_apply(id, x.data(), 50, 4, out.data()) == SKR_OK);
    CHECK(out == x);
    double eps = 1.0;
    REQUIRE(skr_embedding_distortion(id, x.data(), 50, 4, 16, 2, &eps) == SKR_OK);
    CHECK(eps <= 1e-12);
    CHECK(skr_embedding_apply(id, x.data(), 49, 4, out.data()) == SKR_DIMENSION_MISMATCH);
    skr_embedding_free(id);

    for (auto kind : {SKR_EMBEDDING_GAUSSIAN, SKR_EMBEDDING_SPARSE}) {
        skr_embedding* a = nullptr;
        skr_embedding* b = nullptr;
        REQUIRE(skr_embedding_build(kind, 50, 20, 7, &a) == SKR_OK);
        REQUIRE(skr_embedding_build(kind, 50, 20, 7, &b) == SKR_OK);
        std::int64_t rows = 0, cols = 0;
        REQUIRE(skr_embedding_shape(a, &rows, &cols) == SKR_OK);
        CHECK(rows == 20);
        CHECK(cols == 50);
        std::vector<double> pa(20 * 4), pb(20 * 4);
        REQUIRE(skr_embedding_apply(a, x.data(), 50, 4, pa.data()) == SKR_OK);
        REQUIRE(skr_embedding_apply(b, x.data(), 50, 4, pb.data()) == SKR_OK);
        CHECK(pa == pb);
        skr_embedding_free(a);
        skr_embedding_free(b);
    }
    skr_embedding* z = nullptr;
    REQUIRE(skr_embedding_build(SKR_EMBEDDING_GAUSSIAN, 5, 3, 1, &z) == SKR_OK);
    const std::vector<double> zero(10, 0.0);
    CHECK(skr_embedding_distortion(z, zero.data(), 5, 2, 8, 1, &eps) == SKR_UNMEASURABLE);
    skr_embedding_free(z);
}

TEST_CASE("identity sketch through the C API reproduces the exact solve") {
    const std::int64_t n = 40, d = 8;
    const auto x = gaussian(n, d, 3);
    const auto y = gaussian(n, 1, 4);
    skr_sro_options o;
    skr_sro_options_default(&o);
    o.iterations = 3;
    skr_embedding* id = nullptr;
    REQUIRE(skr_embedding_identity(n, &id) == SKR_OK);
    for (auto kind : {SKR_PENALTY_NONE, SKR_PENALTY_RIDGE, SKR_PENALTY_L1, SKR_PENALTY_SCAD, SKR_PENALTY_MCP,
                      SKR_PENALTY_FUSED}) {
        CAPTURE(static_cast<int>(kind));
        const skr_penalty_spec pen{kind, 0.5, 0.0};
        skr_run* exact = nullptr;
        skr_run* sk = nullptr;
        REQUIRE(skr_solve(SKR_METHOD_EXACT, x.data(), n, d, y.data(), &pen, &o, &exact) == SKR_OK);
        REQUIRE(skr_solve_with_embedding(id, x.data(), n, d, y.data(), &pen, &o, &sk) == SKR_OK);
        CHECK(skr_run_iterations(exact) == 0);
        CHECK(skr_run_iterations(sk) == 3);
        CHECK(skr_run_sketch_size(sk) == n);
        const auto a = beta_of(exact), b = beta_of(sk);
        double scale = 1.0;
        for (double v : a) scale += v * v;
        CHECK(max_diff(a, b) <= 10.0 * o.solver.rel_tol * std::sqrt(scale));
        std::vector<double> b0(d, 1.0);
        REQUIRE(skr_run_iterate(sk, 0, b0.data(), b0.size()) == SKR_OK);
        CHECK(max_diff(b0, std::vector<double>(d, 0.0)) == 0.0);
        CHECK(skr_run_iterate(sk, 4, b0.data(), b0.size()) == SKR_INVALID_ARGUMENT);
        CHECK(skr_run_beta(sk, b0.data(), 3) == SKR_DIMENSION_MISMATCH);
        skr_run_free(exact);
        skr_run_free(sk);
    }
    skr_embedding_free(id);
}

TEST_CASE("a dominating fused penalty yields the best constant fit") {
    const std::int64_t n = 30, d = 6;
    const auto x = gaussian(n, d, 5);
    const auto y = gaussian(n, 1, 6);
    // c = ⟨X1, y⟩ / ‖X1‖².
    double num = 0.0, den = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::int64_t j = 0; j < d; ++j) row += x[j * n + i];
        num += row * y[i];
        den += row * row;
    }
    const skr_penalty_spec pen{SKR_PENALTY_FUSED, 1e6, 0.0};
    skr_sro_options o;
    skr_sro_options_default(&o);
    o.solver.rel_tol = 1e-13;
    o.solver.abs_tol = 0.0;
    skr_run* run = nullptr;
    REQUIRE(skr_solve(SKR_METHOD_EXACT, x.data(), n, d, y.data(), &pen, &o, &run) == SKR_OK);
    for (double b : beta_of(run)) CHECK(std::abs(b - num / den) <= 1e-10);
    skr_run_free(run);
}

TEST_CASE("sketched methods") {
    const std::int64_t n = 600, d = 10;
    const auto x = gaussian(n, d, 7);
    const auto y = gaussian(n, 1, 8);
    const skr_penalty_spec pen{SKR_PENALTY_L1, 1.0, 0.0};
    skr_sro_options o;
    skr_sro_options_default(&o);
    o.sketch_size = 200;
    o.iterations = 20;
    skr_run* exact = nullptr;
    REQUIRE(skr_solve(SKR_METHOD_EXACT, x.data(), n, d, y.data(), &pen, &o, &exact) == SKR_OK);
    const auto star = beta_of(exact);
    for (auto m : {SKR_METHOD_SRO, SKR_METHOD_ISRO, SKR_METHOD_ISRO_IHS}) {
        skr_run* run = nullptr;
        REQUIRE(skr_solve(m, x.data(), n, d, y.data(), &pen, &o, &run) == SKR_OK);
        CHECK(skr_run_sketch_size(run) == 200);
        CHECK(skr_run_iterations(run) == (m == SKR_METHOD_SRO ? 1 : 20));
        CHECK(skr_run_objective(run) >= skr_run_objective(exact) - 1e-9);
        if (m != SKR_METHOD_SRO) CHECK(max_diff(beta_of(run), star) <= 1e-6);
        skr_run_free(run);
    }
    skr_run_free(exact);
    skr_run* bad = nullptr;
    CHECK(skr_solve(static_cast<skr_method>(9), x.data(), n, d, y.data(), &pen, &o, &bad) == SKR_INVALID_ARGUMENT);
    o.rho = 1.5;
    CHECK(skr_solve(SKR_METHOD_ISRO, x.data(), n, d, y.data(), &pen, &o, &bad) == SKR_INVALID_ARGUMENT);
    CHECK(bad == nullptr);
}

TEST_CASE("instances") {
    skr_instance* inst = nullptr;
    CHECK(skr_instance_generate("colour = red\n", &inst) == SKR_INVALID_ARGUMENT);
    REQUIRE(skr_instance_generate("design = dense_gaussian\nn = 200\nd = 10\nseed = 3\nlambda = 0.01\n", &inst) ==
            SKR_OK);
    std::int64_t n = 0, d = 0;
    REQUIRE(skr_instance_shape(inst, &n, &d) == SKR_OK);
    CHECK(n == 200);
    CHECK(d == 10);
    std::vector<double> x(200 * 10), y(200), b(10);
    REQUIRE(skr_instance_design(inst, x.data(), x.size()) == SKR_OK);
    REQUIRE(skr_instance_response(inst, y.data(), y.size()) == SKR_OK);
    REQUIRE(skr_instance_signal(inst, b.data(), b.size()) == SKR_OK);
    CHECK(skr_instance_design(inst, x.data(), 5) == SKR_DIMENSION_MISMATCH);

    const auto dir = (std::filesystem::temp_directory_path() / "sketchreg_capi_bundle").string();
    std::filesystem::remove_all(dir);
    REQUIRE(skr_instance_save(inst, dir.c_str()) == SKR_OK);
    skr_instance* back = nullptr;
    REQUIRE(skr_instance_load(dir.c_str(), &back) == SKR_OK);
    std::vector<double> y2(200);
    REQUIRE(skr_instance_response(back, y2.data(), y2.size()) == SKR_OK);
    CHECK(y2 == y);
    std::filesystem::remove_all(dir);
    CHECK(skr_instance_load(dir.c_str(), &back) != SKR_OK);

    skr_sro_options o;
    skr_sro_options_default(&o);
    o.sketch_size = 100;
    skr_run* run = nullptr;
    REQUIRE(skr_instance_solve(inst, SKR_METHOD_ISRO, &o, &run) == SKR_OK);
    const auto beta = beta_of(run);
    double err = -1.0;
    REQUIRE(skr_instance_l2_to_signal(inst, beta.data(), beta.size(), &err) == SKR_OK);
    double direct = 0.0;
    for (size_t j = 0; j < 10; ++j) direct += (beta[j] - b[j]) * (beta[j] - b[j]);
    CHECK(err == doctest::Approx(std::sqrt(direct)));
    skr_run_free(run);
    skr_instance_free(inst);
}

TEST_CASE("configs") {
    skr_config* cfg = nullptr;
    CHECK(skr_config_default("cooking", &cfg) == SKR_INVALID_ARGUMENT);
    REQUIRE(skr_config_default("ridge_decay", &cfg) == SKR_OK);
    auto get = [&](const char* key) {
        return fetch([&](char* b, size_t c, size_t* k) { return skr_config_get(cfg, key, b, c, k); });
    };
    CHECK(get("experiment") == "ridge_decay");
    CHECK(get("schema_version") == "1");
    REQUIRE(skr_config_set(cfg, "trials", "7") == SKR_OK);
    CHECK(get("trials") == "7");
    CHECK(skr_config_set(cfg, "trials", "seven") == SKR_INVALID_ARGUMENT);
    CHECK(skr_config_set(cfg, "colour", "red") == SKR_INVALID_ARGUMENT);
    CHECK(get("trials") == "7");
    size_t needed = 0;
    CHECK(skr_config_get(cfg, "colour", nullptr, 0, &needed) == SKR_INVALID_ARGUMENT);

    // Truncated copies stay NUL-terminated.
    char small[4];
    REQUIRE(skr_config_get(cfg, "experiment", small, sizeof small, &needed) == SKR_OK);
    CHECK(needed == std::strlen("ridge_decay"));
    CHECK(std::string(small) == "rid");

    const std::string text = fetch([&](char* b, size_t c, size_t* k) { return skr_config_text(cfg, b, c, k); });
    CHECK(text.find("trials = 7") != std::string::npos);
    const auto path = std::filesystem::temp_directory_path() / "sketchreg_capi_config.txt";
    {
        FILE* f = std::fopen(path.c_str(), "w");
        REQUIRE(f);
        std::fputs(text.c_str(), f);
        std::fclose(f);
    }
    skr_config* loaded = nullptr;
    REQUIRE(skr_config_load(path.c_str(), &loaded) == SKR_OK);
    CHECK(fetch([&](char* b, size_t c, size_t* k) { return skr_config_text(loaded, b, c, k); }) == text);
    std::filesystem::remove(path);
    CHECK(skr_config_load(path.c_str(), &loaded) == SKR_IO);
    skr_config_free(loaded);
    skr_config_free(cfg);
}

TEST_CASE("experiment results") {
    skr_config* cfg = nullptr;
    REQUIRE(skr_config_default("rate_scan", &cfg) == SKR_OK);
    for (auto [k, v] : {std::pair{"d", "8"}, {"n_grid", "200,400,800,1600"}, {"trials", "2"}, {"gamma", "10"},
                        {"iterations", "4"}})
        REQUIRE(skr_config_set(cfg, k, v) == SKR_OK);
    skr_result* res = nullptr;
    REQUIRE(skr_experiment_run(cfg, nullptr, &res) == SKR_OK);
    CHECK(skr_result_file_count(res) == 0);
    const std::string rate = fetch([&](char* b, size_t c, size_t* k) { return skr_result_csv(res, "rate", b, c, k); });
    CHECK(rate.rfind("experiment,trial,seed,n,sketch_size,method,l2_to_betabar,converged,status,ms\n", 0) == 0);
    double slope = 0.0, r2 = 0.0;
    REQUIRE(skr_result_rate_slope(res, "isro", &slope, &r2) == SKR_OK);
    CHECK(slope < 0.0);
    CHECK(skr_result_rate_slope(res, "sro", &slope, &r2) == SKR_INVALID_ARGUMENT);
    size_t needed = 0;
    CHECK(skr_result_csv(res, "nonsense", nullptr, 0, &needed) == SKR_INVALID_ARGUMENT);
    skr_result_free(res);

    const auto dir = std::filesystem::temp_directory_path() / "sketchreg_capi_run";
    std::filesystem::remove_all(dir);
    REQUIRE(skr_experiment_run(cfg, dir.c_str(), &res) == SKR_OK);
    CHECK(skr_result_file_count(res) == 5);
    const std::string first =
        fetch([&](char* b, size_t c, size_t* k) { return skr_result_file(res, 0, b, c, k); });
    CHECK(first == (dir / "metadata.txt").string());
    skr_result_free(res);
    std::filesystem::remove_all(dir);
    CHECK(skr_experiment_run(cfg, "/proc/sketchreg_no_dir", &res) == SKR_IO);
    skr_config_free(cfg);
}
