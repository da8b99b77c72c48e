#pragma once

#include <string>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "json.hpp"
#include "surgplan/anatomy.hpp"
#include "surgplan/kinematics.hpp"
#include "surgplan/render.hpp"

namespace surgplan::json_io {

using nlohmann::json;

json vec3(const Eigen::Vector3d& v);
// Quaternion as [w, x, y, z].
json quat(const Eigen::Quaterniond& q);
json pose(const Pose& p);
json similarity(const SimilarityTransform& t);
json rgba(const Rgba& c);

// Readers throw MalformedDocument with the offending key in the message.
Eigen::Vector3d read_vec3(const json& j, const std::string& what);
Eigen::Quaterniond read_quat(const json& j, const std::string& what);
Pose read_pose(const json& j, const std::string& what);
SimilarityTransform read_similarity(const json& j, const std::string& what);
Rgba read_rgba(const json& j, const std::string& what);
double read_number(const json& j, const std::string& key, const std::string& what);
double read_number_or(const json& j, const std::string& key, double fallback, const std::string& what);
std::string read_string(const json& j, const std::string& key, const std::string& what);
Interval read_interval(const json& j, const std::string& what);

json robot_to_json(const RobotModel& model);
RobotModel robot_from_json(const json& j);
RobotModel read_robot_config_file(const std::string& path);

json mesh_to_json(const Mesh& m);
Mesh mesh_from_json(const json& j, const std::string& what);

}  // namespace surgplan::json_io
