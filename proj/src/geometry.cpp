#include "surgplan/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace surgplan {

// Closest points between two segments (Ericson, Real-Time Collision Detection 5.1.9).
SegmentClosest closest_segment_segment(const Segment& s1, const Segment& s2) {
  constexpr double eps = 1e-18;
  const Eigen::Vector3d d1 = s1.b - s1.a;
  const Eigen::Vector3d d2 = s2.b - s2.a;
  const Eigen::Vector3d r = s1.a - s2.a;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a <= eps && e <= eps) {
    s = t = 0.0;
  } else if (a <= eps) {
    s = 0.0;
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= eps) {
      t = 0.0;
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > eps * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  const Eigen::Vector3d p = s1.a + s * d1;
  const Eigen::Vector3d q = s2.a + t * d2;
  return {(p - q).norm(), s, t, p, q};
}

double capsule_clearance(const Capsule& c1, const Capsule& c2) {
  return closest_segment_segment(c1.axis, c2.axis).distance - c1.radius - c2.radius;
}

// Voronoi-region walk (Ericson 5.1.5).
Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double point_box_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& lo,
                          const Eigen::Vector3d& hi) {
  const Eigen::Vector3d q = p.cwiseMax(lo).cwiseMin(hi);
  return (p - q).norm();
}

double segment_box_distance(const Segment& s, const Eigen::Vector3d& lo,
                            const Eigen::Vector3d& hi) {
  // Distance to a convex set along an affine path is convex in t: golden-section search.
  auto f = [&](double t) { return point_box_distance(s.a + t * (s.b - s.a), lo, hi); };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = 1.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  return std::min({f1, f2, f(0.0), f(1.0)});
}

double point_line_distance(const Eigen::Vector3d& origin, const Eigen::Vector3d& direction,
                           const Eigen::Vector3d& point) {
  const Eigen::Vector3d d = direction.normalized();
  return (point - origin).cross(d).norm();
}

}  // namespace surgplan
