#include "sketchreg.h"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Failure {
    skr_status status;
};

void check(skr_status s) {
    if (s != SKR_OK) throw Failure{s};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open " << path << "\n";
        throw Failure{SKR_IO};
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        std::cerr << "error: cannot write " << path << "\n";
        throw Failure{SKR_IO};
    }
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

std::pair<std::string, std::string> split_assignment(const std::string& item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value, got '" + item + "'");
    return {trim(item.substr(0, eq)), trim(item.substr(eq + 1))};
}

// Instance spec text from an optional key = value file plus overrides.
std::string instance_text(const std::string& config, const std::vector<std::string>& sets,
                          std::optional<std::uint64_t> seed) {
    std::map<std::string, std::string> kv;
    if (!config.empty()) {
        std::istringstream in(read_file(config));
        std::string line;
        while (std::getline(in, line)) {
            if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
            line = trim(line);
            if (line.empty()) continue;
            auto [k, v] = split_assignment(line);
            kv[k] = v;
        }
    }
    for (const auto& s : sets) {
        auto [k, v] = split_assignment(s);
        kv[k] = v;
    }
    if (seed) kv["seed"] = std::to_string(*seed);
    std::string text;
    for (const auto& [k, v] : kv) text += k + " = " + v + "\n";
    return text;
}

std::string fetch_string(const std::function<skr_status(char*, size_t, size_t*)>& get) {
    size_t needed = 0;
    check(get(nullptr, 0, &needed));
    std::string s(needed + 1, '\0');
    check(get(s.data(), s.size(), &needed));
    s.resize(needed);
    return s;
}

std::string vector_csv(const std::vector<double>& v) {
    std::string out;
    char buf[40];
    for (double x : v) {
        std::snprintf(buf, sizeof buf, "%.17g\n", x);
        out += buf;
    }
    return out;
}

skr_method parse_method(const std::string& m) {
    if (m == "exact") return SKR_METHOD_EXACT;
    if (m == "sro") return SKR_METHOD_SRO;
    if (m == "isro") return SKR_METHOD_ISRO;
    return SKR_METHOD_ISRO_IHS;
}

skr_config* load_config(const std::string& path, const char* fallback, const std::vector<std::string>& sets,
                        std::optional<std::uint64_t> seed, std::optional<int> threads) {
    skr_config* cfg = nullptr;
    if (!path.empty()) check(skr_config_load(path.c_str(), &cfg));
    else check(skr_config_default(fallback, &cfg));
    try {
        for (const auto& s : sets) {
            auto [k, v] = split_assignment(s);
            check(skr_config_set(cfg, k.c_str(), v.c_str()));
        }
        if (seed) check(skr_config_set(cfg, "seed", std::to_string(*seed).c_str()));
        if (threads) check(skr_config_set(cfg, "threads", std::to_string(*threads).c_str()));
    } catch (...) {
        skr_config_free(cfg);
        throw;
    }
    return cfg;
}

std::string config_value(const skr_config* cfg, const char* key) {
    return fetch_string([&](char* b, size_t c, size_t* n) { return skr_config_get(cfg, key, b, c, n); });
}

std::string result_csv(const skr_result* res, const char* table) {
    return fetch_string([&](char* b, size_t c, size_t* n) { return skr_result_csv(res, table, b, c, n); });
}

void report_files(const skr_result* res) {
    for (size_t i = 0; i < skr_result_file_count(res); ++i) {
        std::cout << "wrote " << fetch_string([&](char* b, size_t c, size_t* n) {
            return skr_result_file(res, i, b, c, n);
        }) << "\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sketching for regularized least squares: SRO and Iterative SRO"};
    app.set_version_flag("--version", std::string(skr_version()));
    app.require_subcommand(1);

    std::string config, out, instance_dir, method = "isro", embedding = "gaussian";
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::int64_t sketch_size = 0;
    int iterations = 10;
    double rho = 0.5;

    auto* gen = app.add_subcommand("gen", "Generate a synthetic instance bundle");
    gen->add_option("--config", config, "Instance spec file (key = value)")->check(CLI::ExistingFile);
    gen->add_option("--set", sets, "Override a spec key (key=value)");
    gen->add_option("--seed", seed, "Instance seed");
    gen->add_option("--out", out, "Bundle directory")->required();

    auto* solve = app.add_subcommand("solve", "Solve an instance exactly");
    solve->add_option("--instance", instance_dir, "Bundle directory")->required()->check(CLI::ExistingDirectory);
    solve->add_option("--out", out, "Output directory for beta.csv and run.txt")->required();

    auto* sketch = app.add_subcommand("sketch-solve", "Solve an instance with SRO or Iterative SRO");
    sketch->add_option("--instance", instance_dir, "Bundle directory")->required()->check(CLI::ExistingDirectory);
    sketch->add_option("--out", out, "Output directory for beta.csv and run.txt")->required();
    sketch->add_option("--method", method, "sro, isro or isro_ihs")
        ->check(CLI::IsMember({"sro", "isro", "isro_ihs"}));
    sketch->add_option("--embedding", embedding, "gaussian or sparse")->check(CLI::IsMember({"gaussian", "sparse"}));
    sketch->add_option("--sketch-size", sketch_size, "Sketch rows (0 = recommended)")->check(CLI::NonNegativeNumber);
    sketch->add_option("--iterations", iterations, "Outer iterations")->check(CLI::PositiveNumber);
    sketch->add_option("--rho", rho, "Target contraction");
    sketch->add_option("--seed", seed, "Sketch seed");

    auto add_experiment_flags = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", config, "Experiment config (key = value)")->check(CLI::ExistingFile);
        if (config_required) c->required();
        sub->add_option("--out", out, "Output directory")->required();
        sub->add_option("--seed", seed, "Master seed");
        sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--set", sets, "Override a config key (key=value)");
    };
    auto* experiment = app.add_subcommand("experiment", "Run an experiment from a config file");
    add_experiment_flags(experiment, true);
    auto* rate = app.add_subcommand("rate-scan", "Estimation error against n with a log-log fit");
    add_experiment_flags(rate, false);
    auto* timing = app.add_subcommand("timing", "Wall-clock comparison of the solvers");
    add_experiment_flags(timing, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            skr_instance* inst = nullptr;
            check(skr_instance_generate(instance_text(config, sets, seed).c_str(), &inst));
            const skr_status s = skr_instance_save(inst, out.c_str());
            skr_instance_free(inst);
            check(s);
            std::cout << "wrote instance bundle to " << out << "\n";
        } else if (*solve || *sketch) {
            skr_instance* inst = nullptr;
            check(skr_instance_load(instance_dir.c_str(), &inst));
            skr_sro_options opts;
            skr_sro_options_default(&opts);
            const skr_method m = *solve ? SKR_METHOD_EXACT : parse_method(method);
            opts.embedding = embedding == "sparse" ? SKR_EMBEDDING_SPARSE : SKR_EMBEDDING_GAUSSIAN;
            opts.sketch_size = sketch_size;
            opts.iterations = iterations;
            opts.rho = rho;
            if (seed) opts.seed = *seed;
            skr_run* run = nullptr;
            skr_status s = skr_instance_solve(inst, m, &opts, &run);
            if (s != SKR_OK) {
                skr_instance_free(inst);
                check(s);
            }
            std::vector<double> beta(static_cast<size_t>(skr_run_dim(run)));
            s = skr_run_beta(run, beta.data(), beta.size());
            double l2 = 0.0;
            if (s == SKR_OK) s = skr_instance_l2_to_signal(inst, beta.data(), beta.size(), &l2);
            std::ostringstream info;
            info.precision(17);
            info << "method = " << (*solve ? "exact" : method) << "\n"
                 << "objective = " << skr_run_objective(run) << "\n"
                 << "converged = " << skr_run_converged(run) << "\n"
                 << "outer_iterations = " << skr_run_iterations(run) << "\n"
                 << "sketch_size = " << skr_run_sketch_size(run) << "\n"
                 << "l2_to_betabar = " << l2 << "\n"
                 << "seconds = " << skr_run_seconds(run) << "\n";
            skr_run_free(run);
            skr_instance_free(inst);
            check(s);
            std::error_code ec;
            std::filesystem::create_directories(out, ec);
            write_file(out + "/beta.csv", vector_csv(beta));
            write_file(out + "/run.txt", info.str());
            std::cout << info.str();
        } else {
            const char* fallback = *rate ? "rate_scan" : *timing ? "timing" : "glasso_decay";
            skr_config* cfg = load_config(config, fallback, sets, seed, threads);
            const std::string kind = config_value(cfg, "experiment");
            if ((*rate && kind != "rate_scan") || (*timing && kind != "timing")) {
                skr_config_free(cfg);
                std::cerr << "error: config is for experiment '" << kind << "'\n";
                return 2;
            }
            skr_result* res = nullptr;
            const skr_status s = skr_experiment_run(cfg, out.c_str(), &res);
            skr_config_free(cfg);
            check(s);
            report_files(res);
            if (kind == "rate_scan") std::cout << result_csv(res, "rate_fit");
            if (kind == "timing") std::cout << result_csv(res, "timing");
            skr_result_free(res);
        }
    } catch (const Failure& f) {
        std::cerr << "error (" << skr_status_name(f.status) << "): " << skr_last_error() << "\n";
        return 1;
    } catch (const CLI::Error& e) {
        return app.exit(e);
    }
    return 0;
}
