#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stdet/geometry.hpp"

namespace stdet {

// One row of a KITTI object label file (15 columns, optional 16th score).
// Camera-frame conventions: x right, y down, z forward; `location` is the
// bottom-face center; `rotation_y` is the heading about the camera y axis.
struct KittiLabel {
  std::string type = "Car";
  double truncated = 0.0;  // [0, 1]
  int occluded = 0;        // {0, 1, 2, 3}
  double alpha = 0.0;      // observation angle
  double bbox_left = 0.0, bbox_top = 0.0, bbox_right = 0.0, bbox_bottom = 0.0;
  double h = 0.0, w = 0.0, l = 0.0;  // meters
  double x = 0.0, y = 0.0, z = 0.0;  // rectified camera frame, meters
  double rotation_y = 0.0;
  std::optional<double> score;  // present on detection files
};

// Rectified-camera <-> LiDAR transform plus the left color camera projection.
// Row-major 3x3 / 3x4 blocks as stored in KITTI calib files.
struct Calib {
  std::array<double, 9> r0_rect{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 12> tr_velo_to_cam{0, -1, 0, 0, 0, 0, -1, 0, 1, 0, 0, 0};
  std::array<double, 12> p2{721.5377, 0, 609.5593, 0, 0,        721.5377,
                            172.854,  0, 0,        0, 1,        0};
  // Canonical axis permutation: x_cam = -y_velo, y_cam = -z_velo, z_cam = x_velo.
  static Calib synthetic() { return Calib{}; }
};

enum class Difficulty { kEasy = 0, kModerate = 1, kHard = 2, kIgnored = 3 };

// A ground-truth object in the internal LiDAR frame.
struct GroundTruth {
  Box3D box;
  int class_id = 0;
  Difficulty difficulty = Difficulty::kHard;
};

// Canonical class-name table: Car 0, Pedestrian 1, Cyclist 2, Van 3, Truck 4,
// Person_sitting 5, Tram 6, Misc 7, DontCare -1. Unknown names map to Misc.
int class_id_from_name(const std::string& name);
const std::string& class_name(int class_id);

// Velodyne scans: packed little-endian float32 (x, y, z, reflectance).
// parse/write round-trip bit-exactly. Throws on trailing bytes, naming the
// offset where the partial record starts.
PointCloud parse_velodyne(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> write_velodyne(const PointCloud& cloud);
PointCloud load_velodyne(const std::string& path);
void save_velodyne(const std::string& path, const PointCloud& cloud);

// Label text I/O; whitespace-tolerant, throws std::runtime_error naming the
// 1-based line on malformed rows. write_labels emits 9 decimals so re-parsing
// recovers geometry well inside 1e-6.
std::vector<KittiLabel> parse_labels(const std::string& text);
std::string write_labels(const std::vector<KittiLabel>& labels);

// Calib file I/O; only R0_rect, Tr_velo_to_cam, and P2 are interpreted.
Calib parse_calib(const std::string& text);
std::string write_calib(const Calib& calib);

// Frame conversion. The yaw mapping assumes the calib rotation carries the
// camera down-axis to the LiDAR minus-up axis (true for KITTI and for
// Calib::synthetic()); centers are exact for any rigid calib. "DontCare"
// rows convert to class_id -1 with Difficulty::kIgnored and a unit box.
GroundTruth camera_to_internal(const KittiLabel& label, const Calib& calib);

// Inverse conversion. Difficulty is encoded into the 2D metadata columns
// (bbox height / occlusion / truncation bands) so that difficulty_of on the
// re-parsed row reproduces it; real image-plane boxes are out of scope.
KittiLabel internal_to_camera(const GroundTruth& gt, const Calib& calib);

// Official devkit bucketing from 2D box height, occlusion, and truncation.
Difficulty difficulty_of(const KittiLabel& label);

}  // namespace stdet
