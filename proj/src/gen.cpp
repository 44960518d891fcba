#include "sketchreg/gen.hpp"

#include "sketchreg/error.hpp"
#include "sketchreg/reg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sketchreg {

std::string_view to_string(DesignKind kind) {
    switch (kind) {
    case DesignKind::low_rank_svd: return "low_rank_svd";
    case DesignKind::low_rank_rip: return "low_rank_rip";
    case DesignKind::dense_gaussian: return "dense_gaussian";
    }
    return "dense_gaussian";
}

DesignKind parse_design_kind(std::string_view text) {
    if (text == "low_rank_svd") return DesignKind::low_rank_svd;
    if (text == "low_rank_rip") return DesignKind::low_rank_rip;
    if (text == "dense_gaussian") return DesignKind::dense_gaussian;
    fail(ErrorCode::invalid_argument, "unknown design kind: " + std::string(text));
}

std::string_view to_string(SignalKind kind) {
    switch (kind) {
    case SignalKind::sparse: return "sparse";
    case SignalKind::gaussian: return "gaussian";
    case SignalKind::zero: return "zero";
    }
    return "zero";
}

SignalKind parse_signal_kind(std::string_view text) {
    if (text == "sparse") return SignalKind::sparse;
    if (text == "gaussian") return SignalKind::gaussian;
    if (text == "zero") return SignalKind::zero;
    fail(ErrorCode::invalid_argument, "unknown signal kind: " + std::string(text));
}

void DesignSpec::validate() const {
    require(n >= 1 && d >= 1, "design dimensions must be positive");
    if (kind != DesignKind::dense_gaussian) {
        require(rank >= 1, "rank must be positive");
        require(rank <= n, "rank must not exceed n");
        if (kind == DesignKind::low_rank_svd) require(rank <= d, "rank must not exceed d");
    }
}

Matrix sample_stiefel(Index n, Index r, Rng& rng) {
    require(r >= 1 && r <= n, "Stiefel sample needs 1 <= r <= n");
    Matrix g(n, r);
    for (Index j = 0; j < r; ++j)
        for (Index i = 0; i < n; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, r);
    const Matrix& packed = qr.matrixQR();
    for (Index j = 0; j < r; ++j)
        if (packed(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

Matrix gen_low_rank_svd(const DesignSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const Matrix u = sample_stiefel(spec.n, spec.rank, rng);
    const Matrix v = sample_stiefel(spec.d, spec.rank, rng);
    Vector sigma(spec.rank);
    for (Index i = 0; i < spec.rank; ++i) sigma[i] = std::abs(rng.normal());
    return u * sigma.asDiagonal() * v.transpose();
}

Matrix gen_low_rank_rip(const DesignSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const Matrix u = sample_stiefel(spec.n, spec.rank, rng);
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.rank));
    Matrix omega(spec.n, spec.d);
    for (Index j = 0; j < spec.d; ++j)
        for (Index i = 0; i < spec.n; ++i) omega(i, j) = rng.normal() * scale;
    const Matrix ut_omega = u.transpose() * omega;
    return u * ut_omega;
}

Matrix gen_dense_gaussian(const DesignSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Matrix x(spec.n, spec.d);
    for (Index j = 0; j < spec.d; ++j)
        for (Index i = 0; i < spec.n; ++i) x(i, j) = rng.normal();
    return x;
}

Matrix gen_design(const DesignSpec& spec) {
    switch (spec.kind) {
    case DesignKind::low_rank_svd: return gen_low_rank_svd(spec);
    case DesignKind::low_rank_rip: return gen_low_rank_rip(spec);
    case DesignKind::dense_gaussian: return gen_dense_gaussian(spec);
    }
    return gen_dense_gaussian(spec);
}

Index default_sparsity(Index d) {
    return std::max<Index>(1, static_cast<Index>(std::floor(3.0 * std::log(static_cast<double>(d)))));
}

Vector gen_sparse_signal(Index d, Index s, std::uint64_t seed) {
    require(s >= 1 && s <= d, "sparsity must satisfy 1 <= s <= d");
    Rng rng(seed);
    // Partial Fisher-Yates: the first s slots are a uniform s-subset.
    std::vector<Index> idx(static_cast<std::size_t>(d));
    std::iota(idx.begin(), idx.end(), Index{0});
    for (Index k = 0; k < s; ++k) {
        const Index j = k + static_cast<Index>(rng.below(static_cast<std::uint64_t>(d - k)));
        std::swap(idx[k], idx[j]);
    }
    const double mag = 1.0 / std::sqrt(static_cast<double>(s));
    Vector beta = Vector::Zero(d);
    for (Index k = 0; k < s; ++k) beta[idx[k]] = rng.sign() * mag;
    return beta;
}

Vector gen_gaussian_signal(Index d, std::uint64_t seed) {
    Rng rng(seed);
    Vector beta(d);
    for (Index j = 0; j < d; ++j) beta[j] = rng.normal();
    return beta;
}

Vector gen_response(const Matrix& x, const Vector& beta, double sigma, std::uint64_t seed) {
    require(x.cols() == beta.size(), "signal length does not match the design",
            ErrorCode::dimension_mismatch);
    require(sigma >= 0.0, "noise level must be nonnegative");
    Vector y = x * beta;
    if (sigma == 0.0) return y;
    Rng rng(seed);
    const double scale = sigma / std::sqrt(static_cast<double>(x.rows()));
    for (Index i = 0; i < y.size(); ++i) y[i] += rng.normal() * scale;
    return y;
}

void InstanceSpec::validate() const {
    design.validate();
    require(noise >= 0.0, "noise level must be nonnegative");
    require(lambda >= 0.0, "lambda must be nonnegative");
    require(penalty == "none" || penalty == "ridge" || penalty == "l1" || penalty == "scad" ||
                penalty == "mcp" || penalty == "fused",
            "unknown penalty: " + penalty);
    if (signal == SignalKind::sparse) {
        const Index s = resolved_sparsity();
        require(s >= 1 && s <= design.d, "sparsity must satisfy 1 <= s <= d");
    }
}

Index InstanceSpec::resolved_sparsity() const {
    return sparsity > 0 ? sparsity : default_sparsity(design.d);
}

namespace {

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

const std::string& get(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) fail(ErrorCode::invalid_argument, "instance record is missing key: " + key);
    return it->second;
}

} // namespace

std::map<std::string, std::string> InstanceSpec::to_map() const {
    return {
        {"design", std::string(to_string(design.kind))},
        {"n", std::to_string(design.n)},
        {"d", std::to_string(design.d)},
        {"rank", std::to_string(design.rank)},
        {"seed", std::to_string(design.seed)},
        {"signal", std::string(to_string(signal))},
        {"sparsity", std::to_string(sparsity)},
        {"noise", fmt_double(noise)},
        {"scale_by_sqrt_n", scale_by_sqrt_n ? "1" : "0"},
        {"estimation_mode", estimation_mode ? "1" : "0"},
        {"penalty", penalty},
        {"lambda", fmt_double(lambda)},
        {"shape", fmt_double(shape)},
    };
}

InstanceSpec InstanceSpec::from_map(const std::map<std::string, std::string>& kv) {
    InstanceSpec s;
    try {
        s.design.kind = parse_design_kind(get(kv, "design"));
        s.design.n = std::stoll(get(kv, "n"));
        s.design.d = std::stoll(get(kv, "d"));
        s.design.rank = std::stoll(get(kv, "rank"));
        s.design.seed = std::stoull(get(kv, "seed"));
        s.signal = parse_signal_kind(get(kv, "signal"));
        s.sparsity = std::stoll(get(kv, "sparsity"));
        s.noise = std::stod(get(kv, "noise"));
        s.scale_by_sqrt_n = get(kv, "scale_by_sqrt_n") == "1";
        s.estimation_mode = get(kv, "estimation_mode") == "1";
        s.penalty = get(kv, "penalty");
        s.lambda = std::stod(get(kv, "lambda"));
        s.shape = std::stod(get(kv, "shape"));
    } catch (const std::logic_error& e) {
        fail(ErrorCode::invalid_argument, std::string("malformed instance record: ") + e.what());
    }
    s.validate();
    return s;
}

ProblemInstance generate_instance(const InstanceSpec& spec) {
    spec.validate();
    ProblemInstance inst;
    inst.spec = spec;

    DesignSpec ds = spec.design;
    ds.seed = derive_seed(spec.design.seed, 1);
    inst.x = gen_design(ds);
    if (spec.scale_by_sqrt_n) inst.x /= std::sqrt(static_cast<double>(spec.design.n));
    if (spec.estimation_mode) {
        const double max_norm = inst.x.colwise().norm().maxCoeff();
        if (max_norm > 1.0) {
            inst.rescale_factor = max_norm;
            inst.x /= max_norm;
        }
    }

    const std::uint64_t signal_seed = derive_seed(spec.design.seed, 2);
    switch (spec.signal) {
    case SignalKind::sparse:
        inst.beta_bar = gen_sparse_signal(spec.design.d, spec.resolved_sparsity(), signal_seed);
        break;
    case SignalKind::gaussian: inst.beta_bar = gen_gaussian_signal(spec.design.d, signal_seed); break;
    case SignalKind::zero: inst.beta_bar = Vector::Zero(spec.design.d); break;
    }
    for (Index j = 0; j < inst.beta_bar.size(); ++j)
        if (inst.beta_bar[j] != 0.0) inst.support.push_back(j);
    inst.y = gen_response(inst.x, inst.beta_bar, spec.noise, derive_seed(spec.design.seed, 3));
    return inst;
}

Problem ProblemInstance::solver_problem() const {
    if (fused()) {
        const FusedTransform ft(x.cols());
        return Problem{ft.transform_design(x), y, ft.penalty(spec.lambda)};
    }
    const RegKind kind = parse_reg_kind(spec.penalty);
    return Problem{x, y, Regularizer::make(kind, spec.lambda, spec.shape)};
}

Vector ProblemInstance::to_coefficients(const Vector& solver_beta) const {
    if (fused()) return FusedTransform(x.cols()).inverse(solver_beta);
    return solver_beta;
}

Vector ProblemInstance::to_solver(const Vector& beta) const {
    if (fused()) return FusedTransform(x.cols()).forward(beta);
    return beta;
}

std::map<std::string, std::string> ProblemInstance::provenance() const {
    auto kv = spec.to_map();
    kv["generator"] = std::string(to_string(spec.design.kind));
    kv["rng"] = Rng::name;
    kv["rescale_factor"] = fmt_double(rescale_factor);
    kv["resolved_sparsity"] = std::to_string(spec.signal == SignalKind::sparse ? spec.resolved_sparsity() : 0);
    return kv;
}

} // namespace sketchreg
