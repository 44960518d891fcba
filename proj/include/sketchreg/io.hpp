#pragma once

#include "sketchreg/gen.hpp"
#include "sketchreg/linalg.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace sketchreg {

using KeyValues = std::map<std::string, std::string>;

/// Shortest text that reads back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);
unsigned long long parse_uint(std::string_view text, std::string_view what);
bool parse_bool(std::string_view text, std::string_view what);

/// `key = value` lines; `#` starts a comment, blank lines are skipped,
/// duplicate keys are rejected.
KeyValues parse_key_values(std::string_view text);
std::string format_key_values(const KeyValues& kv);
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(const std::filesystem::path& path, const KeyValues& kv);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// Dense CSV, one matrix row per line, no header.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);
/// One value per line.
void write_vector_csv(const std::filesystem::path& path, const Vector& v);
Vector read_vector_csv(const std::filesystem::path& path);

/// Bundle layout: X.csv, y.csv, beta_bar.csv and instance.txt (the
/// provenance record). Loading checks the record against the data shapes.
void save_bundle(const ProblemInstance& inst, const std::filesystem::path& dir);
ProblemInstance load_bundle(const std::filesystem::path& dir);

/// Creates `dir` if needed and verifies that a file can be written there.
void ensure_writable_dir(const std::filesystem::path& dir);

} // namespace sketchreg
