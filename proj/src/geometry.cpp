#include "stdet/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace stdet {

namespace {

// On-edge classification tolerance for the convex clipper, in meters.
constexpr double kEdgeEps = 1e-9;

constexpr double kPi = 3.14159265358979323846;

using Vec2 = std::array<double, 2>;

double cross2(const Vec2& a, const Vec2& b) { return a[0] * b[1] - a[1] * b[0]; }

Vec2 sub2(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }

// Signed distance proxy of p from the directed edge a->b; > 0 means left.
double edge_side(const Vec2& a, const Vec2& b, const Vec2& p) {
  return cross2(sub2(b, a), sub2(p, a));
}

// Intersection of segment p->q with the infinite line through a->b.
Vec2 line_intersect(const Vec2& a, const Vec2& b, const Vec2& p, const Vec2& q) {
  const double d1 = edge_side(a, b, p);
  const double d2 = edge_side(a, b, q);
  const double t = d1 / (d1 - d2);
  return {p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])};
}

// Clips a convex CCW polygon against the half-plane left of a->b.
std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& poly, const Vec2& a,
                                  const Vec2& b) {
  std::vector<Vec2> out;
  out.reserve(poly.size() + 1);
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& cur = poly[i];
    const Vec2& nxt = poly[(i + 1) % n];
    const bool cur_in = edge_side(a, b, cur) >= -kEdgeEps;
    const bool nxt_in = edge_side(a, b, nxt) >= -kEdgeEps;
    if (cur_in) {
      out.push_back(cur);
      if (!nxt_in) out.push_back(line_intersect(a, b, cur, nxt));
    } else if (nxt_in) {
      out.push_back(line_intersect(a, b, cur, nxt));
    }
  }
  return out;
}

double shoelace(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    acc += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * acc;
}

bool bev_degenerate(const Box3D& box) {
  return !box_is_finite(box) || box.l <= 0.0 || box.w <= 0.0;
}

// Half BEV diagonal, for a cheap separation reject.
double bev_radius(const Box3D& box) {
  return 0.5 * std::sqrt(box.l * box.l + box.w * box.w);
}

}  // namespace

double ConvexPolygon2D::area() const {
  std::vector<Vec2> v(vertices.begin(), vertices.end());
  return std::max(shoelace(v), 0.0);
}

double normalize_angle(double a) {
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

bool box_is_finite(const Box3D& box) {
  return std::isfinite(box.cx) && std::isfinite(box.cy) && std::isfinite(box.cz) &&
         std::isfinite(box.l) && std::isfinite(box.w) && std::isfinite(box.h) &&
         std::isfinite(box.yaw);
}

std::array<Point3, 8> box_corners(const Box3D& box) {
  // Bottom face CCW from front-left, then top face in the same order.
  static constexpr double sx[4] = {+1.0, -1.0, -1.0, +1.0};
  static constexpr double sy[4] = {+1.0, +1.0, -1.0, -1.0};
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  std::array<Point3, 8> corners;
  for (int k = 0; k < 8; ++k) {
    const double lx = sx[k % 4] * 0.5 * box.l;
    const double ly = sy[k % 4] * 0.5 * box.w;
    const double lz = (k < 4 ? -0.5 : +0.5) * box.h;
    corners[k].x = box.cx + c * lx - s * ly;
    corners[k].y = box.cy + s * lx + c * ly;
    corners[k].z = box.cz + lz;
  }
  return corners;
}

ConvexPolygon2D bev_polygon(const Box3D& box) {
  const auto corners = box_corners(box);
  ConvexPolygon2D poly;
  poly.vertices.reserve(4);
  for (int k = 0; k < 4; ++k) poly.vertices.push_back({corners[k].x, corners[k].y});
  return poly;
}

double convex_intersection_area(const ConvexPolygon2D& a, const ConvexPolygon2D& b) {
  if (a.vertices.size() < 3 || b.vertices.size() < 3) return 0.0;
  std::vector<Vec2> poly(a.vertices.begin(), a.vertices.end());
  const std::size_t nb = b.vertices.size();
  for (std::size_t i = 0; i < nb && !poly.empty(); ++i) {
    poly = clip_half_plane(poly, b.vertices[i], b.vertices[(i + 1) % nb]);
  }
  return std::max(shoelace(poly), 0.0);
}

double rotated_bev_iou(const Box3D& a, const Box3D& b, bool* degenerate) {
  if (degenerate) *degenerate = false;
  if (bev_degenerate(a) || bev_degenerate(b)) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  const double dx = a.cx - b.cx;
  const double dy = a.cy - b.cy;
  const double reach = bev_radius(a) + bev_radius(b);
  if (dx * dx + dy * dy > reach * reach) return 0.0;

  const double inter = convex_intersection_area(bev_polygon(a), bev_polygon(b));
  const double uni = a.l * a.w + b.l * b.w - inter;
  if (uni <= 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box3D& a, const Box3D& b, bool* degenerate) {
  if (degenerate) *degenerate = false;
  if (bev_degenerate(a) || bev_degenerate(b) || a.h <= 0.0 || b.h <= 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  const double z_lo = std::max(a.cz - 0.5 * a.h, b.cz - 0.5 * b.h);
  const double z_hi = std::min(a.cz + 0.5 * a.h, b.cz + 0.5 * b.h);
  const double dz = z_hi - z_lo;
  if (dz <= 0.0) return 0.0;

  const double inter_area = convex_intersection_area(bev_polygon(a), bev_polygon(b));
  const double inter = inter_area * dz;
  const double uni = a.volume() + b.volume() - inter;
  if (uni <= 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<int> points_in_box(const PointCloud& cloud, const Box3D& box) {
  std::vector<int> idx;
  const double hl = 0.5 * box.l;
  const double hw = 0.5 * box.w;
  const double hh = 0.5 * box.h;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point3& p = cloud.points[i];
    const double dz = p.z - box.cz;
    if (dz < -hh || dz > hh) continue;
    const double dx = p.x - box.cx;
    const double dy = p.y - box.cy;
    const double lx = c * dx + s * dy;
    if (lx < -hl || lx > hl) continue;
    const double ly = -s * dx + c * dy;
    if (ly < -hw || ly > hw) continue;
    idx.push_back(static_cast<int>(i));
  }
  return idx;
}

std::vector<int> points_in_sphere(const PointCloud& cloud, const Point3& center,
                                  double radius) {
  std::vector<int> idx;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point3& p = cloud.points[i];
    const double dx = p.x - center.x;
    const double dy = p.y - center.y;
    const double dz = p.z - center.z;
    if (dx * dx + dy * dy + dz * dz <= r2) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

Point3 canonical_point(const Point3& p, const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double dx = p.x - box.cx;
  const double dy = p.y - box.cy;
  Point3 out;
  out.x = c * dx + s * dy;
  out.y = -s * dx + c * dy;
  out.z = p.z - box.cz;
  out.reflectance = p.reflectance;
  return out;
}

std::vector<Point3> canonical_transform(const std::vector<Point3>& points,
                                        const Box3D& box) {
  std::vector<Point3> out;
  out.reserve(points.size());
  for (const Point3& p : points) out.push_back(canonical_point(p, box));
  return out;
}

Point3 box_to_world(const Point3& local, const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  Point3 out;
  out.x = box.cx + c * local.x - s * local.y;
  out.y = box.cy + s * local.x + c * local.y;
  out.z = box.cz + local.z;
  out.reflectance = local.reflectance;
  return out;
}

double box_signed_distance(const Box3D& box, const Point3& p) {
  const Point3 local = canonical_point(p, box);
  const double qx = std::fabs(local.x) - 0.5 * box.l;
  const double qy = std::fabs(local.y) - 0.5 * box.w;
  const double qz = std::fabs(local.z) - 0.5 * box.h;
  const double ox = std::max(qx, 0.0);
  const double oy = std::max(qy, 0.0);
  const double oz = std::max(qz, 0.0);
  const double outside = std::sqrt(ox * ox + oy * oy + oz * oz);
  const double inside = std::min(std::max(qx, std::max(qy, qz)), 0.0);
  return outside + inside;
}

}  // namespace stdet
