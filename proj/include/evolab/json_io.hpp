#pragma once

#include <string>

#include <json.hpp>

#include "evolab/linalg.hpp"

namespace evolab {

using json = nlohmann::json;

/// Row-major entries; plain numbers when every imaginary part is zero, [re, im] pairs otherwise.
json matrix_to_json(const Mat& M);
/// Accepts a flat row-major array (needs `rows`) or an array of rows.
Mat matrix_from_json(const json& j, int rows, const std::string& key);
json vector_to_json(const Vec& v);

json read_json_file(const std::string& path);
/// temp file + rename
void write_text_atomic(const std::string& path, const std::string& text);
void write_json_atomic(const std::string& path, const json& j);

} // namespace evolab
