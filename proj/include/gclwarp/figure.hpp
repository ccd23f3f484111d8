#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace gclwarp {

enum class Difficulty { easy, hard };

std::string to_string(Difficulty d);
Difficulty difficulty_from_string(const std::string& s);

/// Body parts of the stick figure; 0 is background. Values are the part
/// indices stored in pose maps.
enum class Part : std::uint8_t {
  background = 0,
  torso = 1,
  head = 2,
  upper_arm_l = 3,
  forearm_l = 4,
  upper_arm_r = 5,
  forearm_r = 6,
  thigh_l = 7,
  shin_l = 8,
  thigh_r = 9,
  shin_r = 10,
};

inline constexpr int kNumParts = 10;

/// Parts covered by the long-sleeve garment.
constexpr bool is_garment_part(int part) {
  return part == 1 || (part >= 3 && part <= 6);
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

/// Radians. Shoulder angles measure abduction away from the hanging pose,
/// elbows are relative to the upper arm, hips are abduction of the whole leg.
struct JointAngles {
  double shoulder_l = 0.0;
  double shoulder_r = 0.0;
  double elbow_l = 0.0;
  double elbow_r = 0.0;
  double hip_l = 0.0;
  double hip_r = 0.0;
  double torso_tilt = 0.0;
  bool operator==(const JointAngles&) const = default;
};

/// Capsule lengths and radii in pixels before applying the figure scale.
struct LimbLengths {
  double torso = 0, torso_radius = 0;
  double head = 0, head_radius = 0;
  double upper_arm = 0, upper_arm_radius = 0;
  double forearm = 0, forearm_radius = 0;
  double thigh = 0, thigh_radius = 0;
  double shin = 0, shin_radius = 0;
  bool operator==(const LimbLengths&) const = default;
};

struct ArticulatedFigure {
  JointAngles joint_angles;
  LimbLengths limb_lengths;
  Vec2 root_position;  ///< pelvis, pixels
  double scale = 1.0;
  double shear = 0.0;  ///< horizontal viewpoint shear about the pelvis row
  bool operator==(const ArticulatedFigure&) const = default;
};

struct AngleRange {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double a) const { return a >= lo && a <= hi; }
};

struct JointRanges {
  AngleRange shoulder, elbow, hip, torso_tilt;
  AngleRange shear;
};

const JointRanges& easy_ranges();
const JointRanges& hard_ranges();

/// True iff every joint angle (and the shear) lies inside the easy ranges.
bool within_easy_ranges(const ArticulatedFigure& fig);

struct Canvas {
  int height = 64;
  int width = 64;
};

/// Deterministic figure for (seed, difficulty). Hard figures are redrawn until
/// at least one joint leaves the easy range. The figure is shrunk and shifted
/// so every capsule lies inside the canvas.
ArticulatedFigure sample_figure(std::uint64_t seed, Difficulty difficulty,
                                Canvas canvas = {});

/// Shrinks and shifts a posed figure until all capsules fit inside the canvas
/// with a one pixel margin.
ArticulatedFigure fit_to_canvas(ArticulatedFigure fig, Canvas canvas);

/// One posed capsule. Local coordinates (s, d) run along the axis from
/// `start` and across it; the capsule is the set with distance to the segment
/// [0, length] x {0} at most `radius`.
struct Capsule {
  Vec2 start;
  Vec2 axis;    ///< unit
  Vec2 normal;  ///< unit, axis rotated +90 degrees
  double length = 0;
  double radius = 0;
};

/// Posed figure geometry: capsules in unsheared canvas space, plus the shear
/// about the pelvis that maps them to the image.
class FigureGeometry {
 public:
  explicit FigureGeometry(const ArticulatedFigure& fig);

  const Capsule& capsule(int part) const { return capsules_[part - 1]; }

  /// Image position of the surface point (part, u, v).
  Vec2 surface_to_image(int part, double u, double v) const;

  /// If the image point lies on the capsule of `part`, writes its surface
  /// coordinates and returns true.
  bool image_to_surface(int part, Vec2 p, double& u, double& v) const;

  /// Axis-aligned bounds of all capsules in image space.
  void bounds(double& xmin, double& ymin, double& xmax, double& ymax) const;

 private:
  std::array<Capsule, kNumParts> capsules_;
  Vec2 pivot_;
  double shear_ = 0.0;
};

/// Back-to-front drawing order; later parts occlude earlier ones.
const std::array<int, kNumParts>& draw_order();

}  // namespace gclwarp
