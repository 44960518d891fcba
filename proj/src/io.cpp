#include "sketchreg/io.hpp"

#include "sketchreg/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace sketchreg {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view what, std::string_view text) {
    fail(ErrorCode::invalid_argument,
         "invalid value for " + std::string(what) + ": '" + std::string(text) + "'");
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

} // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view what) {
    const auto t = trim(text);
    if (t == "nan") return std::nan("");
    if (t == "inf") return INFINITY;
    if (t == "-inf") return -INFINITY;
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) bad_value(what, text);
    return v;
}

long long parse_int(std::string_view text, std::string_view what) {
    const auto t = trim(text);
    long long v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) bad_value(what, text);
    return v;
}

unsigned long long parse_uint(std::string_view text, std::string_view what) {
    const auto t = trim(text);
    unsigned long long v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) bad_value(what, text);
    return v;
}

bool parse_bool(std::string_view text, std::string_view what) {
    const auto t = trim(text);
    if (t == "1" || t == "true" || t == "yes") return true;
    if (t == "0" || t == "false" || t == "no") return false;
    bad_value(what, text);
}

KeyValues parse_key_values(std::string_view text) {
    KeyValues kv;
    int lineno = 0;
    for (std::string_view line : split(text, '\n')) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            fail(ErrorCode::invalid_argument, "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) fail(ErrorCode::invalid_argument, "line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second)
            fail(ErrorCode::invalid_argument, "duplicate key: " + key);
    }
    return kv;
}

std::string format_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const fs::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

KeyValues read_key_values(const fs::path& path) { return parse_key_values(read_text(path)); }

void write_key_values(const fs::path& path, const KeyValues& kv) {
    write_text(path, format_key_values(kv));
}

void write_matrix_csv(const fs::path& path, const Matrix& m) {
    std::string out;
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    write_text(path, out);
}

Matrix read_matrix_csv(const fs::path& path) {
    const std::string text = read_text(path);
    std::vector<std::vector<double>> rows;
    for (std::string_view line : split(text, '\n')) {
        line = trim(line);
        if (line.empty()) continue;
        std::vector<double> row;
        for (std::string_view cell : split(line, ',')) row.push_back(parse_double(cell, path.string()));
        if (!rows.empty() && row.size() != rows.front().size())
            fail(ErrorCode::io, "ragged rows in " + path.string());
        rows.push_back(std::move(row));
    }
    const Index r = static_cast<Index>(rows.size());
    const Index c = r ? static_cast<Index>(rows.front().size()) : 0;
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = rows[i][j];
    return m;
}

void write_vector_csv(const fs::path& path, const Vector& v) {
    std::string out;
    for (Index i = 0; i < v.size(); ++i) out += format_double(v[i]) + '\n';
    write_text(path, out);
}

Vector read_vector_csv(const fs::path& path) {
    const Matrix m = read_matrix_csv(path);
    if (m.cols() > 1) fail(ErrorCode::io, path.string() + " is not a single column");
    return m.rows() ? Vector(m.col(0)) : Vector();
}

void ensure_writable_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
    const fs::path probe = dir / ".write_probe";
    {
        std::ofstream out(probe, std::ios::trunc);
        if (!out) fail(ErrorCode::io, "output directory is not writable: " + dir.string());
    }
    fs::remove(probe, ec);
}

void save_bundle(const ProblemInstance& inst, const fs::path& dir) {
    ensure_writable_dir(dir);
    write_matrix_csv(dir / "X.csv", inst.x);
    write_vector_csv(dir / "y.csv", inst.y);
    write_vector_csv(dir / "beta_bar.csv", inst.beta_bar);
    write_key_values(dir / "instance.txt", inst.provenance());
}

ProblemInstance load_bundle(const fs::path& dir) {
    const KeyValues kv = read_key_values(dir / "instance.txt");
    ProblemInstance inst;
    inst.spec = InstanceSpec::from_map(kv);
    inst.x = read_matrix_csv(dir / "X.csv");
    inst.y = read_vector_csv(dir / "y.csv");
    inst.beta_bar = read_vector_csv(dir / "beta_bar.csv");
    if (const auto it = kv.find("rescale_factor"); it != kv.end())
        inst.rescale_factor = parse_double(it->second, "rescale_factor");
    require(inst.x.rows() == inst.spec.design.n && inst.x.cols() == inst.spec.design.d,
            "X.csv does not match the instance record", ErrorCode::dimension_mismatch);
    require(inst.y.size() == inst.x.rows() && inst.beta_bar.size() == inst.x.cols(),
            "bundle vectors do not match X.csv", ErrorCode::dimension_mismatch);
    for (Index j = 0; j < inst.beta_bar.size(); ++j)
        if (inst.beta_bar[j] != 0.0) inst.support.push_back(j);
    return inst;
}

} // namespace sketchreg
