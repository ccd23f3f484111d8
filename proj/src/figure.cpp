#include "gclwarp/figure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace gclwarp {

namespace {

constexpr double deg(double d) { return d * std::numbers::pi / 180.0; }

Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator*(Vec2 a, double k) { return {a.x * k, a.y * k}; }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

Vec2 rotate(Vec2 v, double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  return {v.x * c - v.y * s, v.x * s + v.y * c};
}

Capsule make_capsule(Vec2 start, Vec2 axis, double length, double radius) {
  return {start, axis, rotate(axis, std::numbers::pi / 2), length, radius};
}

double draw(std::mt19937_64& rng, AngleRange r) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

}  // namespace

std::string to_string(Difficulty d) {
  return d == Difficulty::easy ? "easy" : "hard";
}

Difficulty difficulty_from_string(const std::string& s) {
  if (s == "easy") return Difficulty::easy;
  if (s == "hard") return Difficulty::hard;
  throw std::invalid_argument("unknown difficulty: " + s);
}

const JointRanges& easy_ranges() {
  static const JointRanges r{
      {deg(15), deg(70)}, {deg(-35), deg(35)}, {deg(4), deg(18)},
      {deg(-6), deg(6)},  {0.0, 0.0}};
  return r;
}

const JointRanges& hard_ranges() {
  static const JointRanges r{
      {deg(-40), deg(165)}, {deg(-130), deg(130)}, {deg(-8), deg(35)},
      {deg(-20), deg(20)},  {-0.35, 0.35}};
  return r;
}

bool within_easy_ranges(const ArticulatedFigure& fig) {
  const auto& e = easy_ranges();
  const auto& a = fig.joint_angles;
  return e.shoulder.contains(a.shoulder_l) && e.shoulder.contains(a.shoulder_r) &&
         e.elbow.contains(a.elbow_l) && e.elbow.contains(a.elbow_r) &&
         e.hip.contains(a.hip_l) && e.hip.contains(a.hip_r) &&
         e.torso_tilt.contains(a.torso_tilt) && e.shear.contains(fig.shear);
}

const std::array<int, kNumParts>& draw_order() {
  static const std::array<int, kNumParts> order{7, 8, 9, 10, 1, 2, 3, 4, 5, 6};
  return order;
}

FigureGeometry::FigureGeometry(const ArticulatedFigure& fig)
    : pivot_(fig.root_position), shear_(fig.shear) {
  const auto& a = fig.joint_angles;
  const auto& l = fig.limb_lengths;
  const double s = fig.scale;
  const Vec2 down{-std::sin(a.torso_tilt), std::cos(a.torso_tilt)};
  const Vec2 up = down * -1.0;
  const Vec2 left = rotate(down, std::numbers::pi / 2);
  const Vec2 right = left * -1.0;

  const Vec2 pelvis = fig.root_position;
  const Vec2 neck = pelvis + up * (l.torso * s);
  capsules_[0] = make_capsule(pelvis, up, l.torso * s, l.torso_radius * s);
  capsules_[1] = make_capsule(neck + up * (l.head_radius * s), up, l.head * s,
                              l.head_radius * s);

  const Vec2 shoulder_base = neck + down * (0.4 * l.torso_radius * s);
  const Vec2 shoulder_l = shoulder_base + left * (0.85 * l.torso_radius * s);
  const Vec2 shoulder_r = shoulder_base + right * (0.85 * l.torso_radius * s);
  const Vec2 ua_l = rotate(down, a.shoulder_l);
  const Vec2 fa_l = rotate(down, a.shoulder_l + a.elbow_l);
  const Vec2 ua_r = rotate(down, -a.shoulder_r);
  const Vec2 fa_r = rotate(down, -(a.shoulder_r + a.elbow_r));
  capsules_[2] = make_capsule(shoulder_l, ua_l, l.upper_arm * s, l.upper_arm_radius * s);
  capsules_[3] = make_capsule(shoulder_l + ua_l * (l.upper_arm * s), fa_l,
                              l.forearm * s, l.forearm_radius * s);
  capsules_[4] = make_capsule(shoulder_r, ua_r, l.upper_arm * s, l.upper_arm_radius * s);
  capsules_[5] = make_capsule(shoulder_r + ua_r * (l.upper_arm * s), fa_r,
                              l.forearm * s, l.forearm_radius * s);

  const Vec2 hip_l = pelvis + left * (0.5 * l.torso_radius * s);
  const Vec2 hip_r = pelvis + right * (0.5 * l.torso_radius * s);
  const Vec2 leg_l = rotate(down, a.hip_l);
  const Vec2 leg_r = rotate(down, -a.hip_r);
  capsules_[6] = make_capsule(hip_l, leg_l, l.thigh * s, l.thigh_radius * s);
  capsules_[7] = make_capsule(hip_l + leg_l * (l.thigh * s), leg_l, l.shin * s,
                              l.shin_radius * s);
  capsules_[8] = make_capsule(hip_r, leg_r, l.thigh * s, l.thigh_radius * s);
  capsules_[9] = make_capsule(hip_r + leg_r * (l.thigh * s), leg_r, l.shin * s,
                              l.shin_radius * s);
}

Vec2 FigureGeometry::surface_to_image(int part, double u, double v) const {
  const Capsule& c = capsule(part);
  const double along = u * (c.length + 2 * c.radius) - c.radius;
  const double across = v * 2 * c.radius - c.radius;
  const Vec2 p = c.start + c.axis * along + c.normal * across;
  return {p.x + shear_ * (p.y - pivot_.y), p.y};
}

bool FigureGeometry::image_to_surface(int part, Vec2 p, double& u,
                                      double& v) const {
  const Capsule& c = capsule(part);
  const Vec2 unsheared{p.x - shear_ * (p.y - pivot_.y), p.y};
  const Vec2 rel = unsheared - c.start;
  const double along = dot(rel, c.axis);
  const double across = dot(rel, c.normal);
  const double clamped = std::clamp(along, 0.0, c.length);
  if (std::hypot(along - clamped, across) > c.radius) return false;
  u = (along + c.radius) / (c.length + 2 * c.radius);
  v = (across + c.radius) / (2 * c.radius);
  return true;
}

void FigureGeometry::bounds(double& xmin, double& ymin, double& xmax,
                            double& ymax) const {
  xmin = ymin = 1e300;
  xmax = ymax = -1e300;
  const double kx = std::sqrt(1.0 + shear_ * shear_);
  for (const Capsule& c : capsules_) {
    for (double t : {0.0, c.length}) {
      const Vec2 p = c.start + c.axis * t;
      const double x = p.x + shear_ * (p.y - pivot_.y);
      xmin = std::min(xmin, x - c.radius * kx);
      xmax = std::max(xmax, x + c.radius * kx);
      ymin = std::min(ymin, p.y - c.radius);
      ymax = std::max(ymax, p.y + c.radius);
    }
  }
}

ArticulatedFigure fit_to_canvas(ArticulatedFigure fig, Canvas canvas) {
  constexpr double margin = 1.0;
  const double avail_w = canvas.width - 1 - 2 * margin;
  const double avail_h = canvas.height - 1 - 2 * margin;
  double x0, y0, x1, y1;
  FigureGeometry(fig).bounds(x0, y0, x1, y1);
  const double k = std::min(avail_w / (x1 - x0), avail_h / (y1 - y0));
  if (k < 1.0) {
    // Geometry scales about the pelvis, so the bounds shrink proportionally.
    fig.scale *= k * 0.999;
    FigureGeometry(fig).bounds(x0, y0, x1, y1);
  }
  double dx = 0, dy = 0;
  if (x0 < margin) dx = margin - x0;
  if (x1 + dx > canvas.width - 1 - margin) dx = canvas.width - 1 - margin - x1;
  if (y0 < margin) dy = margin - y0;
  if (y1 + dy > canvas.height - 1 - margin) dy = canvas.height - 1 - margin - y1;
  fig.root_position.x += dx;
  fig.root_position.y += dy;
  return fig;
}

ArticulatedFigure sample_figure(std::uint64_t seed, Difficulty difficulty,
                                Canvas canvas) {
  if (canvas.width <= 0 || canvas.height <= 0)
    throw std::invalid_argument("sample_figure: empty canvas");
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0x5EED);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double k = std::min(canvas.width, canvas.height) / 64.0;
  auto jitter = [&](double base) { return base * k * (0.9 + 0.2 * unit(rng)); };

  ArticulatedFigure fig;
  auto& l = fig.limb_lengths;
  l.torso = jitter(15.0);
  l.torso_radius = jitter(5.5);
  l.head = jitter(2.0);
  l.head_radius = jitter(4.5);
  l.upper_arm = jitter(9.0);
  l.upper_arm_radius = jitter(2.4);
  l.forearm = jitter(8.0);
  l.forearm_radius = jitter(2.2);
  l.thigh = jitter(10.0);
  l.thigh_radius = jitter(2.8);
  l.shin = jitter(10.0);
  l.shin_radius = jitter(2.5);

  const JointRanges& r =
      difficulty == Difficulty::easy ? easy_ranges() : hard_ranges();
  for (int attempt = 0;; ++attempt) {
    auto& a = fig.joint_angles;
    a.shoulder_l = draw(rng, r.shoulder);
    a.shoulder_r = draw(rng, r.shoulder);
    a.elbow_l = draw(rng, r.elbow);
    a.elbow_r = draw(rng, r.elbow);
    a.hip_l = draw(rng, r.hip);
    a.hip_r = draw(rng, r.hip);
    a.torso_tilt = draw(rng, r.torso_tilt);
    fig.shear = draw(rng, r.shear);
    if (difficulty == Difficulty::easy || !within_easy_ranges(fig)) break;
    if (attempt > 1000) throw std::logic_error("sample_figure: range setup");
  }
  fig.scale = difficulty == Difficulty::easy ? 0.92 + 0.12 * unit(rng)
                                             : 0.85 + 0.2 * unit(rng);
  fig.root_position = {canvas.width / 2.0 + (unit(rng) - 0.5) * 8.0 * k,
                       canvas.height * 0.56 + (unit(rng) - 0.5) * 4.0 * k};
  return fit_to_canvas(fig, canvas);
}

}  // namespace gclwarp
