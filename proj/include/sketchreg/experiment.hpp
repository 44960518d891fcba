#pragma once

#include "sketchreg/gen.hpp"
#include "sketchreg/io.hpp"
#include "sketchreg/sro.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sketchreg {

inline constexpr int schema_version = 1;

enum class ExperimentKind { glasso_decay, ridge_decay, lasso_estimation, rate_scan, distortion_check, timing };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view text);

/// How λ is set for each generated instance.
enum class LambdaRule {
    fixed,               // the `lambda` key
    sqrt_log_d_over_n,   // scale · √(ln d / n)
    sqrt_s_log_d_over_n, // scale · √(s̄ ln d / n)
};

std::string_view to_string(LambdaRule rule);
LambdaRule parse_lambda_rule(std::string_view text);

/// What γ̄ multiplies: ñ = ⌈γ̄ · rank⌉, ⌈γ̄ · d⌉, or ⌈γ̄ · ñ_rec⌉ with ñ_rec
/// the recommended size at ε = ρ/(ρ+1).
enum class GammaBase { rank, d, recommended };

std::string_view to_string(GammaBase base);
GammaBase parse_gamma_base(std::string_view text);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::glasso_decay;
    InstanceSpec instance;
    LambdaRule lambda_rule = LambdaRule::fixed;
    double lambda_scale = 1.0;
    SroConfig sro;
    std::vector<double> gamma{1.0};
    GammaBase gamma_base = GammaBase::d;
    /// Sample sizes for rate_scan (replaces design n).
    std::vector<Index> n_grid;
    int trials = 20;
    std::uint64_t seed = 1;
    int threads = 1;
    /// Timing repeats.
    int repeats = 3;
    /// Random probes for distortion measurements.
    int probes = 64;

    /// Desk-scale defaults for each experiment.
    static ExperimentConfig defaults(ExperimentKind kind);

    void validate() const;
    /// Every key, plus schema_version and rng.
    KeyValues to_key_values() const;
    /// Starts from defaults(experiment) and applies each key; unknown keys fail.
    static ExperimentConfig from_key_values(const KeyValues& kv);
    /// Applies one key on top of the current values.
    void set(const std::string& key, const std::string& value);
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Seed of one trial: a hash of (master, trial, grid value).
std::uint64_t trial_seed(std::uint64_t master, int trial, double grid_value);

/// λ for an instance with n samples, d features and sparsity s.
double resolve_lambda(const ExperimentConfig& cfg, Index n, Index d, Index s);

/// Instance spec for one trial at sample size n.
InstanceSpec trial_instance(const ExperimentConfig& cfg, std::uint64_t seed, Index n);

/// ñ for grid value γ̄ on `problem`.
Index sketch_rows(const ExperimentConfig& cfg, double gamma, const InstanceSpec& spec,
                  const Problem& problem);

struct DecayRow {
    int trial = 0;
    std::uint64_t seed = 0;
    double gamma = 0.0;
    Index sketch_size = 0;
    int iter = 0;
    double x_err_sq_per_n = 0.0;
    double l2_err = 0.0;
    double obj = 0.0;
    bool converged = false;
    std::string status = "ok";
    double ms = 0.0;
};

struct EstimationRow {
    int trial = 0;
    std::uint64_t seed = 0;
    double gamma = 0.0;
    Index sketch_size = 0;
    std::string method;
    double x_err_sq_per_n = 0.0;
    double l2_err = 0.0;
    double l2_to_betabar = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double obj = 0.0;
    bool converged = false;
    std::string status = "ok";
    double ms = 0.0;
};

struct RateRow {
    int trial = 0;
    std::uint64_t seed = 0;
    Index n = 0;
    Index sketch_size = 0;
    std::string method;
    double l2_to_betabar = 0.0;
    bool converged = false;
    std::string status = "ok";
    double ms = 0.0;
};

struct RateFit {
    std::string method;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int points = 0;
    bool valid = false;
};

struct DistortionRow {
    int trial = 0;
    std::uint64_t seed = 0;
    double gamma = 0.0;
    Index sketch_size = 0;
    double epsilon = 0.0;
    double probe_distortion = 0.0;
    double subspace_distortion = 0.0;
    bool within_epsilon = false;
    std::string status = "ok";
    double ms = 0.0;
};

struct TimingRow {
    std::string method;
    Index sketch_size = 0;
    double x_err_sq_per_n = 0.0;
    double l2_err = 0.0;
    int repeats = 0;
    double min_ms = 0.0;
    double median_ms = 0.0;
};

/// Mean and sample standard deviation of one metric over trials.
struct SummaryRow {
    /// γ̄, or n for rate_scan.
    double grid = 0.0;
    /// Iteration or method, depending on the experiment.
    std::string key;
    std::string metric;
    int count = 0;
    double mean = 0.0;
    double std = 0.0;
};

struct ExperimentResult {
    ExperimentKind kind = ExperimentKind::glasso_decay;
    std::vector<DecayRow> decay;
    std::vector<EstimationRow> estimation;
    std::vector<RateRow> rate;
    std::vector<RateFit> rate_fits;
    std::vector<DistortionRow> distortion;
    std::vector<TimingRow> timing;
    std::vector<SummaryRow> summary;
    std::vector<std::filesystem::path> files;
};

/// Runs the experiment and writes its CSV files, metadata.txt and plot.gp
/// into `out_dir` (which is checked for writability before any solve).
/// An empty `out_dir` skips all file output.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Least-squares fit of log mean ‖β − β̄‖₂ against log n for "exact" and
/// "isro"; rows with a failed status or non-finite error are skipped.
std::vector<RateFit> fit_rates(const std::vector<Index>& n_grid, const std::vector<RateRow>& rows);

/// Summary rows recomputed from raw rows.
std::vector<SummaryRow> summarize(const ExperimentResult& result);

/// CSV text of each table, as written to disk.
std::string decay_csv(const std::vector<DecayRow>& rows, std::string_view experiment);
std::string estimation_csv(const std::vector<EstimationRow>& rows, std::string_view experiment);
std::string rate_csv(const std::vector<RateRow>& rows, std::string_view experiment);
std::string rate_fit_csv(const std::vector<RateFit>& fits);
std::string distortion_csv(const std::vector<DistortionRow>& rows, std::string_view experiment);
std::string timing_csv(const std::vector<TimingRow>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows, std::string_view experiment);

/// Drops every column whose header ends in "ms" (the timing columns).
std::string strip_timing_columns(std::string_view csv);

} // namespace sketchreg
