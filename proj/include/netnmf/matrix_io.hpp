#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "netnmf/core.hpp"

namespace netnmf {

/// Numeric CSV content. Lines starting with '#' are collected as comments;
/// a first non-comment line with a non-numeric field is taken as the header.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Throws ParseError naming the offending line on ragged rows or bad numbers.
CsvTable parse_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

MatrixXd matrix_from_csv(const CsvTable& table);
void write_matrix_csv(std::ostream& out, const MatrixXd& M);

/// {"rows": n, "cols": m, "data": [row-major entries]}
nlohmann::json matrix_to_json(const MatrixXd& M);
MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const nlohmann::json& j);

/// Dispatches on the extension: ".json" is parsed as JSON, anything else as CSV.
MatrixXd read_matrix_file(const std::string& path);
void write_matrix_file(const std::string& path, const MatrixXd& M);

}  // namespace netnmf
