#include "netnmf/matrix_io.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace netnmf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& value) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec == std::errc() && ptr == last) return true;
  // from_chars rejects "inf"/"nan" spellings some tools emit; fall back to strtod.
  char* end = nullptr;
  value = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

}  // namespace

CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      table.comments.push_back(trim(t.substr(1)));
      continue;
    }
    auto fields = split_fields(t);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (!parse_double(fields[k], row[k])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (table.rows.empty() && table.header.empty()) {
        table.header = fields;
        width = fields.size();
        continue;
      }
      throw ParseError("malformed CSV: non-numeric field", lineno);
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      throw ParseError("malformed CSV: expected " + std::to_string(width) + " fields, found " +
                           std::to_string(row.size()),
                       lineno);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return parse_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.detail(), e.line());
  }
}

MatrixXd matrix_from_csv(const CsvTable& table) {
  if (table.rows.empty()) throw InvalidArgument("CSV contains no numeric rows");
  const auto n = static_cast<Index>(table.rows.size());
  const auto m = static_cast<Index>(table.rows.front().size());
  MatrixXd M(n, m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) M(i, j) = table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return M;
}

void write_matrix_csv(std::ostream& out, const MatrixXd& M) {
  out << std::setprecision(17);
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << M(i, j);
    }
    out << '\n';
  }
}

nlohmann::json matrix_to_json(const MatrixXd& M) {
  nlohmann::json data = nlohmann::json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) data.push_back(M(i, j));
  }
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(data)}};
}

MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
    throw InvalidArgument("matrix JSON must have rows, cols and data");
  }
  const auto n = j.at("rows").get<Index>();
  const auto m = j.at("cols").get<Index>();
  const auto& data = j.at("data");
  if (n < 0 || m < 0 || !data.is_array() || static_cast<Index>(data.size()) != n * m) {
    throw InvalidArgument("matrix JSON data length does not match rows*cols");
  }
  MatrixXd M(n, m);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < m; ++c) M(i, c) = data[static_cast<std::size_t>(i * m + c)].get<double>();
  }
  return M;
}

nlohmann::json vector_to_json(const VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

VectorXd vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(values.data(), static_cast<Index>(values.size()));
}

MatrixXd read_matrix_file(const std::string& path) {
  const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  if (!is_json) return matrix_from_csv(read_csv_file(path));
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return matrix_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

void write_matrix_file(const std::string& path, const MatrixXd& M) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  if (is_json) {
    out << matrix_to_json(M).dump(2) << '\n';
  } else {
    write_matrix_csv(out, M);
  }
}

}  // namespace netnmf
