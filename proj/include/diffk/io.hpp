#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffk/geometry.hpp"

namespace diffk {

/// %.17g, the CSV number format.
std::string format_double(double x);

/// Comma-separated text with a header row and LF line endings.
std::string csv_text(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

/// Two-space indented dump with a trailing newline. Keys are sorted, so the
/// text is deterministic.
std::string json_text(const nlohmann::json& j);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// "0.5" or "0.25,0.75" -> Vector. Throws ParseError.
Vector parse_point(const std::string& text);

nlohmann::json vector_json(const Vector& v);
nlohmann::json matrix_json(const Matrix& m);  // list of rows

}  // namespace diffk
