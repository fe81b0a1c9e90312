#include "stdet/kitti.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stdet {
namespace {

const std::vector<std::string> kClassNames = {
    "Car", "Pedestrian", "Cyclist", "Van", "Truck", "Person_sitting", "Tram", "Misc"};
const std::string kDontCare = "DontCare";

struct Mat3 {
  std::array<double, 9> m;
  std::array<double, 3> apply(const std::array<double, 3>& v) const {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
            m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
  }
  std::array<double, 3> apply_transposed(const std::array<double, 3>& v) const {
    return {m[0] * v[0] + m[3] * v[1] + m[6] * v[2],
            m[1] * v[0] + m[4] * v[1] + m[7] * v[2],
            m[2] * v[0] + m[5] * v[1] + m[8] * v[2]};
  }
};

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a.m[r * 3 + k] * b.m[k * 3 + c];
      out.m[r * 3 + c] = s;
    }
  return out;
}

// Combined velo->rect-cam rotation R and translation t: p_cam = R p_velo + t.
void velo_to_cam_transform(const Calib& calib, Mat3* rot, std::array<double, 3>* t) {
  const Mat3 r0{calib.r0_rect};
  const Mat3 tr_rot{{calib.tr_velo_to_cam[0], calib.tr_velo_to_cam[1],
                     calib.tr_velo_to_cam[2], calib.tr_velo_to_cam[4],
                     calib.tr_velo_to_cam[5], calib.tr_velo_to_cam[6],
                     calib.tr_velo_to_cam[8], calib.tr_velo_to_cam[9],
                     calib.tr_velo_to_cam[10]}};
  const std::array<double, 3> tr_t = {calib.tr_velo_to_cam[3], calib.tr_velo_to_cam[7],
                                      calib.tr_velo_to_cam[11]};
  *rot = mul(r0, tr_rot);
  *t = r0.apply(tr_t);
}

float read_le_f32(const std::uint8_t* p) {
  const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                          (static_cast<std::uint32_t>(p[1]) << 8) |
                          (static_cast<std::uint32_t>(p[2]) << 16) |
                          (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(u);
}

void push_le_f32(std::vector<std::uint8_t>* out, double value) {
  const std::uint32_t u = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  out->push_back(static_cast<std::uint8_t>(u & 0xff));
  out->push_back(static_cast<std::uint8_t>((u >> 8) & 0xff));
  out->push_back(static_cast<std::uint8_t>((u >> 16) & 0xff));
  out->push_back(static_cast<std::uint8_t>((u >> 24) & 0xff));
}

double parse_field(const std::string& token, std::size_t line_no) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size())
    throw std::runtime_error("label line " + std::to_string(line_no) +
                             ": bad numeric field '" + token + "'");
  return value;
}

}  // namespace

int class_id_from_name(const std::string& name) {
  if (name == kDontCare) return -1;
  for (std::size_t i = 0; i < kClassNames.size(); ++i)
    if (kClassNames[i] == name) return static_cast<int>(i);
  return 7;  // Misc
}

const std::string& class_name(int class_id) {
  if (class_id < 0) return kDontCare;
  if (class_id >= static_cast<int>(kClassNames.size())) return kClassNames.back();
  return kClassNames[class_id];
}

PointCloud parse_velodyne(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 16 != 0) {
    const std::size_t whole = bytes.size() - bytes.size() % 16;
    throw std::runtime_error("velodyne payload has " +
                             std::to_string(bytes.size() % 16) +
                             " trailing bytes at offset " + std::to_string(whole));
  }
  PointCloud cloud;
  cloud.points.reserve(bytes.size() / 16);
  for (std::size_t at = 0; at < bytes.size(); at += 16) {
    Point3 p;
    p.x = read_le_f32(&bytes[at]);
    p.y = read_le_f32(&bytes[at + 4]);
    p.z = read_le_f32(&bytes[at + 8]);
    p.reflectance = read_le_f32(&bytes[at + 12]);
    cloud.points.push_back(p);
  }
  return cloud;
}

std::vector<std::uint8_t> write_velodyne(const PointCloud& cloud) {
  std::vector<std::uint8_t> out;
  out.reserve(cloud.points.size() * 16);
  for (const Point3& p : cloud.points) {
    push_le_f32(&out, p.x);
    push_le_f32(&out, p.y);
    push_le_f32(&out, p.z);
    push_le_f32(&out, p.reflectance);
  }
  return out;
}

PointCloud load_velodyne(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open velodyne file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_velodyne(bytes);
}

void save_velodyne(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write velodyne file: " + path);
  const std::vector<std::uint8_t> bytes = write_velodyne(cloud);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<KittiLabel> parse_labels(const std::string& text) {
  std::vector<KittiLabel> labels;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    std::istringstream row(line);
    std::vector<std::string> tokens;
    for (std::string token; row >> token;) tokens.push_back(token);
    if (tokens.empty()) continue;
    if (tokens.size() != 15 && tokens.size() != 16)
      throw std::runtime_error("label line " + std::to_string(line_no) +
                               ": expected 15 or 16 columns, got " +
                               std::to_string(tokens.size()));
    KittiLabel label;
    label.type = tokens[0];
    label.truncated = parse_field(tokens[1], line_no);
    label.occluded = static_cast<int>(std::lround(parse_field(tokens[2], line_no)));
    label.alpha = parse_field(tokens[3], line_no);
    label.bbox_left = parse_field(tokens[4], line_no);
    label.bbox_top = parse_field(tokens[5], line_no);
    label.bbox_right = parse_field(tokens[6], line_no);
    label.bbox_bottom = parse_field(tokens[7], line_no);
    label.h = parse_field(tokens[8], line_no);
    label.w = parse_field(tokens[9], line_no);
    label.l = parse_field(tokens[10], line_no);
    label.x = parse_field(tokens[11], line_no);
    label.y = parse_field(tokens[12], line_no);
    label.z = parse_field(tokens[13], line_no);
    label.rotation_y = parse_field(tokens[14], line_no);
    if (tokens.size() == 16) label.score = parse_field(tokens[15], line_no);
    labels.push_back(label);
  }
  return labels;
}

std::string write_labels(const std::vector<KittiLabel>& labels) {
  std::string out;
  char buf[512];
  for (const KittiLabel& label : labels) {
    std::snprintf(buf, sizeof(buf),
                  "%s %.9f %d %.9f %.9f %.9f %.9f %.9f %.9f %.9f %.9f %.9f %.9f "
                  "%.9f %.9f",
                  label.type.c_str(), label.truncated, label.occluded, label.alpha,
                  label.bbox_left, label.bbox_top, label.bbox_right,
                  label.bbox_bottom, label.h, label.w, label.l, label.x, label.y,
                  label.z, label.rotation_y);
    out += buf;
    if (label.score) {
      std::snprintf(buf, sizeof(buf), " %.9f", *label.score);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Calib parse_calib(const std::string& text) {
  Calib calib;
  bool saw_r0 = false, saw_tr = false;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    std::istringstream row(line.substr(colon + 1));
    std::vector<double> values;
    for (double v = 0.0; row >> v;) values.push_back(v);
    if (key == "R0_rect" || key == "R_rect") {
      if (values.size() != 9) throw std::runtime_error("calib R0_rect needs 9 values");
      std::copy(values.begin(), values.end(), calib.r0_rect.begin());
      saw_r0 = true;
    } else if (key == "Tr_velo_to_cam") {
      if (values.size() != 12)
        throw std::runtime_error("calib Tr_velo_to_cam needs 12 values");
      std::copy(values.begin(), values.end(), calib.tr_velo_to_cam.begin());
      saw_tr = true;
    } else if (key == "P2") {
      if (values.size() != 12) throw std::runtime_error("calib P2 needs 12 values");
      std::copy(values.begin(), values.end(), calib.p2.begin());
    }
  }
  if (!saw_r0 || !saw_tr)
    throw std::runtime_error("calib text missing R0_rect or Tr_velo_to_cam");
  return calib;
}

std::string write_calib(const Calib& calib) {
  std::ostringstream out;
  const auto emit = [&out](const char* key, const double* v, int n) {
    out << key << ':';
    char buf[32];
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof(buf), " %.12e", v[i]);
      out << buf;
    }
    out << '\n';
  };
  emit("P2", calib.p2.data(), 12);
  emit("R0_rect", calib.r0_rect.data(), 9);
  emit("Tr_velo_to_cam", calib.tr_velo_to_cam.data(), 12);
  return out.str();
}

GroundTruth camera_to_internal(const KittiLabel& label, const Calib& calib) {
  Mat3 rot;
  std::array<double, 3> t;
  velo_to_cam_transform(calib, &rot, &t);

  // Bottom-face center -> volumetric center (camera y points down).
  const std::array<double, 3> center_cam = {label.x, label.y - 0.5 * label.h, label.z};
  const std::array<double, 3> c = rot.apply_transposed(
      {center_cam[0] - t[0], center_cam[1] - t[1], center_cam[2] - t[2]});
  const std::array<double, 3> heading_cam = {std::cos(label.rotation_y), 0.0,
                                             -std::sin(label.rotation_y)};
  const std::array<double, 3> heading = rot.apply_transposed(heading_cam);

  GroundTruth gt;
  gt.box.cx = c[0];
  gt.box.cy = c[1];
  gt.box.cz = c[2];
  gt.box.l = std::max(label.l, 0.1);
  gt.box.w = std::max(label.w, 0.1);
  gt.box.h = std::max(label.h, 0.1);
  gt.box.yaw = normalize_angle(std::atan2(heading[1], heading[0]));
  gt.class_id = class_id_from_name(label.type);
  gt.difficulty = difficulty_of(label);
  return gt;
}

KittiLabel internal_to_camera(const GroundTruth& gt, const Calib& calib) {
  Mat3 rot;
  std::array<double, 3> t;
  velo_to_cam_transform(calib, &rot, &t);

  const std::array<double, 3> center_cam =
      rot.apply({gt.box.cx, gt.box.cy, gt.box.cz});
  const std::array<double, 3> heading_cam =
      rot.apply({std::cos(gt.box.yaw), std::sin(gt.box.yaw), 0.0});

  KittiLabel label;
  label.type = class_name(gt.class_id);
  label.h = gt.box.h;
  label.w = gt.box.w;
  label.l = gt.box.l;
  label.x = center_cam[0] + t[0];
  label.y = center_cam[1] + t[1] + 0.5 * gt.box.h;
  label.z = center_cam[2] + t[2];
  label.rotation_y = normalize_angle(std::atan2(-heading_cam[2], heading_cam[0]));
  label.alpha = normalize_angle(label.rotation_y - std::atan2(label.x, label.z));

  // Difficulty is not derivable without an image, so encode it into the 2D
  // metadata columns; difficulty_of inverts this banding on re-parse.
  label.bbox_left = 500.0;
  label.bbox_right = 550.0;
  label.bbox_top = 100.0;
  switch (gt.difficulty) {
    case Difficulty::kEasy:
      label.bbox_bottom = 160.0;
      label.occluded = 0;
      label.truncated = 0.0;
      break;
    case Difficulty::kModerate:
      label.bbox_bottom = 130.0;
      label.occluded = 1;
      label.truncated = 0.2;
      break;
    case Difficulty::kHard:
      label.bbox_bottom = 130.0;
      label.occluded = 2;
      label.truncated = 0.4;
      break;
    case Difficulty::kIgnored:
      label.bbox_bottom = 110.0;
      label.occluded = 3;
      label.truncated = 0.9;
      break;
  }
  return label;
}

Difficulty difficulty_of(const KittiLabel& label) {
  if (label.type == kDontCare) return Difficulty::kIgnored;
  const double height = label.bbox_bottom - label.bbox_top;
  if (height >= 40.0 && label.occluded <= 0 && label.truncated <= 0.15)
    return Difficulty::kEasy;
  if (height >= 25.0 && label.occluded <= 1 && label.truncated <= 0.30)
    return Difficulty::kModerate;
  if (height >= 25.0 && label.occluded <= 2 && label.truncated <= 0.50)
    return Difficulty::kHard;
  return Difficulty::kIgnored;
}

}  // namespace stdet
