#pragma once

#include <array>
#include <cstddef>
#include <vector>

// Oriented-box and sphere geometry in a right-handed LiDAR frame:
//   x forward, y left, z up; yaw measured CCW about +z from +x.
// Boxes are parameterized by their volumetric center, extents (l along the
// heading, w across it, h up) and a yaw in (-pi, pi]. All membership tests
// treat regions as closed: boundary points count as inside. Everything is
// double precision; downstream finite-difference checks depend on it.

namespace stdet {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double reflectance = 0.0;
};

enum class Frame { kLidar, kCamera };

struct PointCloud {
  std::vector<Point3> points;
  Frame frame = Frame::kLidar;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct Box3D {
  double cx = 0.0;  // volumetric center, not the KITTI bottom-face center
  double cy = 0.0;
  double cz = 0.0;
  double l = 1.0;  // extent along the heading axis
  double w = 1.0;
  double h = 1.0;
  double yaw = 0.0;  // CCW about +z, normalized to (-pi, pi]

  double volume() const { return l * w * h; }
};

// CCW-ordered convex polygon in the ground plane.
struct ConvexPolygon2D {
  std::vector<std::array<double, 2>> vertices;

  // Shoelace area; >= 0 for CCW input.
  double area() const;
};

// Normalizes an angle to (-pi, pi].
double normalize_angle(double a);

bool box_is_finite(const Box3D& box);

// The 8 corners in fixed order: bottom face CCW viewed from above, starting
// at front-left (+l/2, +w/2), then the top face in the same order.
std::array<Point3, 8> box_corners(const Box3D& box);

// 4-vertex CCW rectangle in the ground plane; area == l * w.
ConvexPolygon2D bev_polygon(const Box3D& box);

// Intersection area of two convex CCW polygons (Sutherland-Hodgman).
double convex_intersection_area(const ConvexPolygon2D& a, const ConvexPolygon2D& b);

// Area IoU of the boxes' BEV rectangles. Degenerate (zero-area or non-finite)
// input yields 0 and sets *degenerate when provided. Symmetric.
double rotated_bev_iou(const Box3D& a, const Box3D& b, bool* degenerate = nullptr);

// Volume IoU for yaw-only boxes: BEV intersection area times vertical overlap
// over the volume union. Same degenerate convention as rotated_bev_iou.
double iou_3d(const Box3D& a, const Box3D& b, bool* degenerate = nullptr);

// Indices of cloud points inside the closed oriented box, ascending.
std::vector<int> points_in_box(const PointCloud& cloud, const Box3D& box);

// Indices of cloud points with Euclidean distance <= radius, ascending.
std::vector<int> points_in_sphere(const PointCloud& cloud, const Point3& center,
                                  double radius);

// Box frame coordinates: translate by -center, rotate by -yaw about +z.
Point3 canonical_point(const Point3& p, const Box3D& box);
std::vector<Point3> canonical_transform(const std::vector<Point3>& points,
                                        const Box3D& box);

// Inverse of canonical_point: rotate by +yaw, translate by +center.
Point3 box_to_world(const Point3& local, const Box3D& box);

// Signed Euclidean distance from p to the box surface: negative inside,
// zero on the boundary, positive outside.
double box_signed_distance(const Box3D& box, const Point3& p);

}  // namespace stdet
