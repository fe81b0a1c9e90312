#pragma once

// Independent test oracles. These deliberately re-derive results with naive
// methods (sampling, enumeration, finite differences) and must not call the
// library code paths they are used to verify.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "stdet/geometry.hpp"
#include "stdet/random.hpp"

namespace stdet::oracle {

struct Rect {
  double cx, cy, l, w, yaw;
};

// Point-in-rotated-rectangle by direct rotation into the rect frame.
inline bool point_in_rect(double px, double py, const Rect& r) {
  const double c = std::cos(-r.yaw);
  const double s = std::sin(-r.yaw);
  const double dx = px - r.cx;
  const double dy = py - r.cy;
  const double lx = c * dx - s * dy;
  const double ly = s * dx + c * dy;
  return std::fabs(lx) <= 0.5 * r.l && std::fabs(ly) <= 0.5 * r.w;
}

// Monte-Carlo rejection estimate of BEV IoU over the union's bounding box.
inline double mc_bev_iou(const Rect& a, const Rect& b, int samples, std::uint64_t seed) {
  // Bounding box of both rects from their corner extents.
  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  for (const Rect* r : {&a, &b}) {
    const double c = std::cos(r->yaw), s = std::sin(r->yaw);
    for (int k = 0; k < 4; ++k) {
      const double lx = (k == 0 || k == 3 ? 0.5 : -0.5) * r->l;
      const double ly = (k < 2 ? 0.5 : -0.5) * r->w;
      const double x = r->cx + c * lx - s * ly;
      const double y = r->cy + s * lx + c * ly;
      lo_x = std::min(lo_x, x);
      hi_x = std::max(hi_x, x);
      lo_y = std::min(lo_y, y);
      hi_y = std::max(hi_y, y);
    }
  }
  Rng rng(seed);
  long in_union = 0, in_inter = 0;
  for (int i = 0; i < samples; ++i) {
    const double x = rng.uniform(lo_x, hi_x);
    const double y = rng.uniform(lo_y, hi_y);
    const bool ia = point_in_rect(x, y, a);
    const bool ib = point_in_rect(x, y, b);
    if (ia || ib) ++in_union;
    if (ia && ib) ++in_inter;
  }
  if (in_union == 0) return 0.0;
  return static_cast<double>(in_inter) / static_cast<double>(in_union);
}

// Membership by direct re-derivation, for set-enumeration oracles.
inline bool point_in_box3d(const Point3& p, const Box3D& box) {
  return point_in_rect(p.x, p.y, {box.cx, box.cy, box.l, box.w, box.yaw}) &&
         std::fabs(p.z - box.cz) <= 0.5 * box.h;
}

inline bool point_in_ball(const Point3& p, const Point3& center, double radius) {
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  const double dz = p.z - center.z;
  return dx * dx + dy * dy + dz * dz <= radius * radius;
}

// Closed-form IoU of two axis-aligned 3D boxes given as center/size.
inline double aligned_iou_3d(const Box3D& a, const Box3D& b) {
  auto overlap = [](double ca, double ea, double cb, double eb) {
    const double lo = std::max(ca - 0.5 * ea, cb - 0.5 * eb);
    const double hi = std::min(ca + 0.5 * ea, cb + 0.5 * eb);
    return std::max(hi - lo, 0.0);
  };
  const double ix = overlap(a.cx, a.l, b.cx, b.l);
  const double iy = overlap(a.cy, a.w, b.cy, b.w);
  const double iz = overlap(a.cz, a.h, b.cz, b.h);
  const double inter = ix * iy * iz;
  const double uni = a.l * a.w * a.h + b.l * b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Central finite differences of a scalar function of a flat parameter vector.
inline std::vector<double> central_diff(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double step = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double fp = f(x);
    x[i] = saved - step;
    const double fm = f(x);
    x[i] = saved;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

// Relative gradient error max_i |g - g_ref| / max(1, |g_ref|).
inline double max_rel_error(const std::vector<double>& g, const std::vector<double>& ref) {
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double denom = std::max(1.0, std::fabs(ref[i]));
    worst = std::max(worst, std::fabs(g[i] - ref[i]) / denom);
  }
  return worst;
}

}  // namespace stdet::oracle
