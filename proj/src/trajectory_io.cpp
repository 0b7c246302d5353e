#include "netnmf/trajectory_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "netnmf/matrix_io.hpp"

namespace netnmf {

void write_trajectory_csv(std::ostream& out, const ModelSpec& spec, const Trajectory& traj,
                          const nlohmann::json& meta) {
  if (!meta.is_null()) out << "# " << meta.dump() << '\n';
  out << "# family=" << to_string(spec.family) << " n=" << spec.n << " m=" << spec.m;
  if (spec.intercept.size()) {
    out << " intercept=";
    out << std::setprecision(17);
    for (Index i = 0; i < spec.intercept.size(); ++i) out << (i ? ";" : "") << spec.intercept(i);
  }
  out << '\n';
  out << std::setprecision(17);
  if (spec.family == Family::StaticPoissonMatrix) {
    for (Index i = 0; i < spec.n; ++i) {
      for (Index j = 0; j < spec.m; ++j) out << (i || j ? "," : "") << "y_" << (i + 1) << '_' << (j + 1);
    }
    out << '\n';
    for (const auto& F : traj.frames) {
      for (Index i = 0; i < F.rows(); ++i) {
        for (Index j = 0; j < F.cols(); ++j) out << (i || j ? "," : "") << F(i, j);
      }
      out << '\n';
    }
    return;
  }
  for (Index i = 0; i < traj.y.cols(); ++i) out << (i ? "," : "") << "y_" << (i + 1);
  out << '\n';
  write_matrix_csv(out, traj.y);
}

TrajectoryFile parse_trajectory_csv(std::istream& in) {
  const CsvTable table = parse_csv(in);
  TrajectoryFile file;
  for (const auto& c : table.comments) {
    if (!c.empty() && c.front() == '{') {
      try {
        file.meta = nlohmann::json::parse(c);
      } catch (const nlohmann::json::exception&) {
        throw InvalidArgument("trajectory metadata line is not valid JSON");
      }
      continue;
    }
    std::istringstream ss(c);
    std::string token;
    while (ss >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      try {
        if (key == "family") {
          file.family = family_from_string(value);
        } else if (key == "n") {
          file.n = std::stol(value);
        } else if (key == "m") {
          file.m = std::stol(value);
        } else if (key == "intercept") {
          std::vector<double> vals;
          std::istringstream vs(value);
          std::string part;
          while (std::getline(vs, part, ';')) vals.push_back(std::stod(part));
          file.intercept = Eigen::Map<const VectorXd>(vals.data(), static_cast<Index>(vals.size()));
        }
      } catch (const std::logic_error&) {
        throw InvalidArgument("bad trajectory metadata value for '" + key + "'");
      }
    }
  }
  if (table.rows.empty()) throw InvalidArgument("trajectory file has no observations");
  file.traj.y = matrix_from_csv(table);
  return file;
}

TrajectoryFile read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return parse_trajectory_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.detail(), e.line());
  }
}

Trajectory trajectory_for_spec(const TrajectoryFile& file, const ModelSpec& spec) {
  if (spec.family != Family::StaticPoissonMatrix) return file.traj;
  if (file.traj.y.cols() != spec.n * spec.m) {
    throw InvalidArgument("static trajectory rows must have n*m cells");
  }
  Trajectory out;
  for (Index t = 0; t < file.traj.y.rows(); ++t) {
    MatrixXd F(spec.n, spec.m);
    for (Index i = 0; i < spec.n; ++i) {
      for (Index j = 0; j < spec.m; ++j) F(i, j) = file.traj.y(t, i * spec.m + j);
    }
    out.frames.push_back(std::move(F));
  }
  return out;
}

}  // namespace netnmf
