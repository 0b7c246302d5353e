#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "netnmf/models.hpp"

namespace netnmf {

/// Trajectory CSV: optional '# {json}' metadata line, a '# family=.. n=.. m=..
/// intercept=c1;c2;..' line, a y_1..y_n header and one row per date. Static
/// frames are stored one row per date with the n*m cells in row-major order.
struct TrajectoryFile {
  Trajectory traj;
  std::optional<Family> family;
  Index n = 0;
  Index m = 0;
  VectorXd intercept;
  nlohmann::json meta;
};

void write_trajectory_csv(std::ostream& out, const ModelSpec& spec, const Trajectory& traj,
                          const nlohmann::json& meta);
TrajectoryFile read_trajectory_csv(const std::string& path);
TrajectoryFile parse_trajectory_csv(std::istream& in);

/// Reshapes the raw rows for the given spec (frames for the static family).
Trajectory trajectory_for_spec(const TrajectoryFile& file, const ModelSpec& spec);

}  // namespace netnmf
