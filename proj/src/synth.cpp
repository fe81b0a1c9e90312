#include "stdet/synth.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "stdet/random.hpp"

namespace stdet {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFaceInset = 0.999;  // keep samples strictly interior

struct Face {
  int axis;     // 0 = l, 1 = w, 2 = h (local frame)
  double sign;  // which side of the axis
  double area;
};

double extent(const Box3D& box, int axis) {
  return axis == 0 ? box.l : axis == 1 ? box.w : box.h;
}

// Faces of `box` whose outward normal points back toward the origin sensor;
// the bottom face is never visible, the top almost always is.
std::vector<Face> visible_faces(const Box3D& box) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  std::vector<Face> faces;
  for (int axis = 0; axis < 3; ++axis) {
    for (const double sign : {1.0, -1.0}) {
      if (axis == 2 && sign < 0) continue;  // bottom sits on the ground
      std::array<double, 3> normal;
      if (axis == 0)
        normal = {c * sign, s * sign, 0.0};
      else if (axis == 1)
        normal = {-s * sign, c * sign, 0.0};
      else
        normal = {0.0, 0.0, sign};
      Point3 center_local;
      (axis == 0 ? center_local.x : axis == 1 ? center_local.y : center_local.z) =
          sign * 0.5 * extent(box, axis);
      const Point3 center = box_to_world(center_local, box);
      const double facing =
          center.x * normal[0] + center.y * normal[1] + center.z * normal[2];
      if (facing < 0.0) {
        const int u = axis == 0 ? 1 : 0;
        const int v = axis == 2 ? 1 : 2;
        faces.push_back({axis, sign, extent(box, u) * extent(box, v)});
      }
    }
  }
  return faces;
}

Point3 sample_face_point(const Box3D& box, const Face& face, Rng& rng) {
  Point3 local;
  double* coords[3] = {&local.x, &local.y, &local.z};
  *coords[face.axis] = face.sign * 0.5 * kFaceInset * extent(box, face.axis);
  for (int axis = 0; axis < 3; ++axis) {
    if (axis == face.axis) continue;
    *coords[axis] = rng.uniform(-0.5, 0.5) * kFaceInset * extent(box, axis);
  }
  Point3 world = box_to_world(local, box);
  world.reflectance = rng.uniform(0.1, 0.9);
  return world;
}

bool inside_any(const Point3& p, const std::vector<GroundTruth>& gts) {
  for (const GroundTruth& gt : gts)
    if (box_signed_distance(gt.box, p) <= 0.0) return true;
  return false;
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.object_count < 0 || spec.clutter_points < 0)
    throw std::invalid_argument("synth counts must be non-negative");
  if (spec.min_object_points < 1 || spec.max_object_points < spec.min_object_points)
    throw std::invalid_argument("synth object point band is empty");
  if (!(spec.area_x_min < spec.area_x_max) || !(spec.area_y_min < spec.area_y_max))
    throw std::invalid_argument("synth area is empty");
  if (!(spec.l_min > 0 && spec.l_min <= spec.l_max) ||
      !(spec.w_min > 0 && spec.w_min <= spec.w_max) ||
      !(spec.h_min > 0 && spec.h_min <= spec.h_max))
    throw std::invalid_argument("synth size ranges are empty");
  if (spec.max_retries < 1) throw std::invalid_argument("max_retries must be >= 1");
}

Difficulty difficulty_from_point_count(int interior_points) {
  if (interior_points >= 100) return Difficulty::kEasy;
  if (interior_points >= 30) return Difficulty::kModerate;
  if (interior_points >= 5) return Difficulty::kHard;
  return Difficulty::kIgnored;
}

SceneSample synth_scene(const SynthSpec& spec, std::uint64_t seed) {
  validate(spec);
  Rng rng(seed);
  SceneSample scene;
  scene.scene_id = static_cast<int>(seed & 0x7fffffff);

  // Pack boxes with zero BEV overlap.
  for (int i = 0; i < spec.object_count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_retries && !placed; ++attempt) {
      Box3D box;
      box.l = rng.uniform(spec.l_min, spec.l_max);
      box.w = rng.uniform(spec.w_min, spec.w_max);
      box.h = rng.uniform(spec.h_min, spec.h_max);
      box.cx = rng.uniform(spec.area_x_min, spec.area_x_max);
      box.cy = rng.uniform(spec.area_y_min, spec.area_y_max);
      box.cz = kGroundZ + 0.5 * box.h;
      box.yaw = rng.uniform(-kPi, kPi);
      bool clear = true;
      for (const GroundTruth& gt : scene.gts)
        if (rotated_bev_iou(box, gt.box) > 0.0) {
          clear = false;
          break;
        }
      if (clear) {
        scene.gts.push_back({box, spec.class_id, Difficulty::kHard});
        placed = true;
      }
    }
    if (!placed)
      throw std::runtime_error("synth packing failed for object " + std::to_string(i) +
                               " after " + std::to_string(spec.max_retries) +
                               " retries");
  }

  // Visible-surface samples; the sampled count is the exact interior count
  // because boxes are BEV-disjoint and clutter avoids interiors below.
  const int band = spec.max_object_points - spec.min_object_points + 1;
  for (GroundTruth& gt : scene.gts) {
    const int count = spec.min_object_points + rng.pick(band);
    const std::vector<Face> faces = visible_faces(gt.box);
    double total_area = 0.0;
    for (const Face& f : faces) total_area += f.area;
    for (int k = 0; k < count; ++k) {
      double r = rng.real01() * total_area;
      const Face* chosen = &faces.back();
      for (const Face& f : faces) {
        if (r < f.area) {
          chosen = &f;
          break;
        }
        r -= f.area;
      }
      scene.cloud.points.push_back(sample_face_point(gt.box, *chosen, rng));
    }
    gt.difficulty = difficulty_from_point_count(count);
  }

  // Ground plane plus a few vertical clutter structures, kept out of boxes.
  std::vector<Point3> structures;
  for (int i = 0; i < 5; ++i) {
    Point3 c;
    c.x = rng.uniform(spec.area_x_min, spec.area_x_max);
    c.y = rng.uniform(spec.area_y_min, spec.area_y_max);
    structures.push_back(c);
  }
  for (int i = 0; i < spec.clutter_points; ++i) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      Point3 p;
      if (rng.real01() < 0.8) {
        p.x = rng.uniform(spec.area_x_min, spec.area_x_max);
        p.y = rng.uniform(spec.area_y_min, spec.area_y_max);
        p.z = kGroundZ + rng.normal(0.0, 0.03);
      } else {
        const Point3& c = structures[rng.pick(static_cast<int>(structures.size()))];
        p.x = c.x + rng.normal(0.0, 0.3);
        p.y = c.y + rng.normal(0.0, 0.3);
        p.z = kGroundZ + rng.uniform(0.0, 2.5);
      }
      p.reflectance = rng.uniform(0.1, 0.9);
      if (!inside_any(p, scene.gts)) {
        scene.cloud.points.push_back(p);
        break;
      }
    }
  }
  return scene;
}

}  // namespace stdet
