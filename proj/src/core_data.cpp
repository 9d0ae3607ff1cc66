#include "plmm/core_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace plmm {

namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == delimiter && !quoted) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  for (auto& f : fields) {
    const auto first = f.find_first_not_of(" \t");
    const auto last = f.find_last_not_of(" \t");
    f = first == std::string::npos ? std::string{} : f.substr(first, last - first + 1);
  }
  return fields;
}

bool parse_finite(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file: " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty data file: " + path.string());
  t.header = split_line(line, delimiter);
  std::unordered_set<std::string> seen;
  for (const auto& h : t.header) {
    if (!seen.insert(h).second) throw InputError("duplicate column name '" + h + "' in " + path.string());
  }
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_line(line, delimiter);
    if (fields.size() != t.header.size()) {
      throw InputError(path.string() + ": row " + std::to_string(t.rows.size() + 1) + " has " +
                       std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

double cell(const Table& t, std::size_t row, std::size_t col, const std::filesystem::path& path) {
  double v = 0.0;
  if (!parse_finite(t.rows[row][col], v)) {
    throw InputError(path.string() + ": non-numeric value '" + t.rows[row][col] + "' at row " +
                     std::to_string(row + 1) + ", column '" + t.header[col] + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, const std::string& outcome_column,
                     char delimiter, const std::string& id_column) {
  const Table t = read_table(path, delimiter);
  std::ptrdiff_t y_col = -1;
  std::ptrdiff_t id_col = -1;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (t.header[j] == outcome_column) y_col = static_cast<std::ptrdiff_t>(j);
    if (!id_column.empty() && t.header[j] == id_column) id_col = static_cast<std::ptrdiff_t>(j);
  }
  if (y_col < 0) throw InputError("outcome column '" + outcome_column + "' not found in " + path.string());
  if (!id_column.empty() && id_col < 0) {
    throw InputError("id column '" + id_column + "' not found in " + path.string());
  }
  if (t.rows.size() < 2) throw InputError(path.string() + ": need at least 2 rows, found " + std::to_string(t.rows.size()));

  std::vector<std::size_t> feature_cols;
  Dataset d;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (static_cast<std::ptrdiff_t>(j) == y_col || static_cast<std::ptrdiff_t>(j) == id_col) continue;
    feature_cols.push_back(j);
    d.feature_names.push_back(t.header[j]);
  }
  if (feature_cols.empty()) throw InputError(path.string() + ": no feature columns");

  const auto n = static_cast<Index>(t.rows.size());
  d.X.resize(n, static_cast<Index>(feature_cols.size()));
  d.y.resize(n);
  d.row_ids.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    d.y[static_cast<Index>(i)] = cell(t, i, static_cast<std::size_t>(y_col), path);
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      d.X(static_cast<Index>(i), static_cast<Index>(k)) = cell(t, i, feature_cols[k], path);
    }
    d.row_ids.push_back(id_col >= 0 ? t.rows[i][static_cast<std::size_t>(id_col)] : std::to_string(i + 1));
  }
  return d;
}

FeatureTable load_features(const std::filesystem::path& path, char delimiter,
                           const std::vector<std::string>& drop) {
  const Table t = read_table(path, delimiter);
  std::vector<std::size_t> cols;
  FeatureTable out;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (std::find(drop.begin(), drop.end(), t.header[j]) != drop.end()) continue;
    cols.push_back(j);
    out.names.push_back(t.header[j]);
  }
  out.X.resize(static_cast<Index>(t.rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      out.X(static_cast<Index>(i), static_cast<Index>(k)) = cell(t, i, cols[k], path);
    }
  }
  return out;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path,
                  const std::string& outcome_column, char delimiter) {
  if (data.X.rows() != data.y.size() || static_cast<std::size_t>(data.X.cols()) != data.feature_names.size()) {
    throw InputError("save_dataset: inconsistent dataset dimensions");
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << outcome_column;
  for (const auto& name : data.feature_names) out << delimiter << name;
  out << '\n';
  for (Index i = 0; i < data.X.rows(); ++i) {
    out << format_double(data.y[i]);
    for (Index j = 0; j < data.X.cols(); ++j) out << delimiter << format_double(data.X(i, j));
    out << '\n';
  }
}

StandardizedMatrix standardize(const Eigen::Ref<const Matrix>& X, double variance_threshold) {
  const Index n = X.rows();
  if (n < 2) throw InputError("standardize: need at least 2 rows, got " + std::to_string(n));
  if (variance_threshold < 0) throw InputError("standardize: variance_threshold must be >= 0");

  StandardizedMatrix s;
  s.values = Matrix::Zero(n, X.cols());
  s.centers = X.colwise().mean().transpose();
  s.scales.resize(X.cols());
  s.active.resize(X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    const auto centered = (X.col(j).array() - s.centers[j]).eval();
    const double var = centered.square().sum() / static_cast<double>(n);
    s.scales[j] = std::sqrt(var);
    s.active[j] = var > variance_threshold;
    if (s.active[j]) s.values.col(j) = centered / s.scales[j];
  }
  return s;
}

namespace json_io {

nlohmann::json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json to_json(const Mask& m) {
  auto arr = nlohmann::json::array();
  for (Index i = 0; i < m.size(); ++i) arr.push_back(static_cast<bool>(m[i]));
  return arr;
}

nlohmann::json to_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Vector r = m.row(i).transpose();
    rows.push_back(to_json(r));
  }
  return rows;
}

Vector vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

Mask mask_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<bool>>();
  Mask m(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m[static_cast<Index>(i)] = v[i];
  return m;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (j.empty()) return Matrix(0, 0);
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& r = j.at(static_cast<std::size_t>(i));
    if (static_cast<Index>(r.size()) != cols) throw InputError("ragged matrix in JSON");
    for (Index c = 0; c < cols; ++c) m(i, c) = r.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

}  // namespace json_io

nlohmann::json standardization_to_json(const StandardizedMatrix& s) {
  return {{"centers", json_io::to_json(s.centers)},
          {"scales", json_io::to_json(s.scales)},
          {"active", json_io::to_json(s.active)}};
}

StandardizedMatrix standardization_from_json(const nlohmann::json& j) {
  StandardizedMatrix s;
  s.centers = json_io::vector_from_json(j.at("centers"));
  s.scales = json_io::vector_from_json(j.at("scales"));
  s.active = json_io::mask_from_json(j.at("active"));
  if (s.centers.size() != s.scales.size() || s.scales.size() != s.active.size()) {
    throw InputError("standardization JSON: centers/scales/active lengths differ");
  }
  return s;
}

}  // namespace plmm
