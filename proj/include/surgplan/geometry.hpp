#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace surgplan {

struct Segment {
  Eigen::Vector3d a;
  Eigen::Vector3d b;
};

struct Capsule {
  Segment axis;
  double radius = 0.0;
};

struct SegmentClosest {
  double distance;
  double s;  // parameter on the first segment
  double t;  // parameter on the second segment
  Eigen::Vector3d p;
  Eigen::Vector3d q;
};

SegmentClosest closest_segment_segment(const Segment& s1, const Segment& s2);

// Surface clearance between two capsules; negative when they overlap.
double capsule_clearance(const Capsule& c1, const Capsule& c2);

Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c);

double point_box_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& lo,
                          const Eigen::Vector3d& hi);

// Distance from a segment to a solid axis-aligned box (0 when they intersect).
double segment_box_distance(const Segment& s, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi);

// Perpendicular distance from `point` to the infinite line through `origin` along `direction`.
double point_line_distance(const Eigen::Vector3d& origin, const Eigen::Vector3d& direction,
                           const Eigen::Vector3d& point);

}  // namespace surgplan
