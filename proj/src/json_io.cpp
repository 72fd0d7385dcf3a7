#include "evolab/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "evolab/error.hpp"

namespace evolab {

namespace {

cplx entry_from_json(const json& e, const std::string& key) {
  if (e.is_number()) return {e.get<double>(), 0.0};
  if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
    return {e[0].get<double>(), e[1].get<double>()};
  fail(ErrorCode::ConfigError, "key '" + key + "': entries must be numbers or [re, im] pairs");
}

bool all_real(const Mat& M) {
  for (Eigen::Index i = 0; i < M.size(); ++i)
    if (M.data()[i].imag() != 0.0) return false;
  return true;
}

} // namespace

json matrix_to_json(const Mat& M) {
  json arr = json::array();
  const bool real = all_real(M);
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index k = 0; k < M.cols(); ++k) {
      const cplx z = M(i, k);
      if (real)
        arr.push_back(z.real());
      else
        arr.push_back(json::array({z.real(), z.imag()}));
    }
  return arr;
}

json vector_to_json(const Vec& v) { return matrix_to_json(Mat(v)); }

Mat matrix_from_json(const json& j, int rows, const std::string& key) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::ConfigError, "key '" + key + "' must be a nonempty array");
  const bool flat_square = rows > 0 && j.size() == static_cast<size_t>(rows) * static_cast<size_t>(rows);
  if (!flat_square && j.size() == static_cast<size_t>(rows) && j[0].is_array()) {
    const size_t cols = j[0].size();
    Mat M(rows, static_cast<Eigen::Index>(cols));
    for (int i = 0; i < rows; ++i) {
      if (!j[i].is_array() || j[i].size() != cols) fail(ErrorCode::ConfigError, "key '" + key + "': ragged rows");
      for (size_t k = 0; k < cols; ++k) M(i, static_cast<Eigen::Index>(k)) = entry_from_json(j[i][k], key);
    }
    return M;
  }
  if (rows <= 0 || j.size() % static_cast<size_t>(rows) != 0) {
    std::ostringstream os;
    os << "key '" << key << "': " << j.size() << " entries do not fill " << rows << " rows";
    fail(ErrorCode::ConfigError, os.str());
  }
  const int cols = static_cast<int>(j.size() / rows);
  Mat M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) M(i, k) = entry_from_json(j[static_cast<size_t>(i) * cols + k], key);
  return M;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ConfigError, path + ": malformed JSON (" + e.what() + ")");
  }
}

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    out << text;
    if (!out) fail(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

void write_json_atomic(const std::string& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

} // namespace evolab
