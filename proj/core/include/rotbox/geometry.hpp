#pragma once

#include <array>
#include <numbers>

namespace rotbox {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kQuarterPi = std::numbers::pi / 4.0;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

/// Rotated rectangle in image coordinates (x right, y down).
///
/// `w` is measured along the box's local u axis R(theta)*(1,0) and `h` along
/// the local v axis R(theta)*(0,1), with R(theta) = [[cos, -sin], [sin, cos]].
/// A canonical box has w, h > 0 and theta in (-pi/4, pi/4].
struct OrientedBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    double theta = 0.0;

    constexpr double area() const { return w * h; }
    constexpr Vec2 center() const { return {cx, cy}; }
    friend constexpr bool operator==(const OrientedBox&, const OrientedBox&) = default;
};

/// Corners D1..D4, clockwise on screen (y down). D1 has the lowest x + y;
/// ties go to the smaller y, then the smaller x.
struct QuadCorners {
    std::array<Vec2, 4> pts;
};

/// Anchor point plus perpendicular distances to the box sides, indexed in
/// the box's local frame: d1 top (v = -h/2), d2 right (u = +w/2),
/// d3 bottom (v = +h/2), d4 left (u = -w/2). So h = d1 + d3, w = d2 + d4.
struct DistanceForm {
    double x = 0.0;
    double y = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double d3 = 0.0;
    double d4 = 0.0;
    double theta = 0.0;
};

struct SizeAngle {
    double w;
    double h;
    double theta;
};

struct Aabb {
    Vec2 min;
    Vec2 max;
};

bool is_canonical(const OrientedBox& box);

// Throws Error(InvalidBox) unless the box is finite and canonical.
void validate_box(const OrientedBox& box);

/// Maps theta in (-pi, pi] into (-pi/4, pi/4]; every +-pi/2 shift swaps w and h.
SizeAngle normalize_angle(double w, double h, double theta);

/// Canonical representative of any finite box with positive sides; theta may
/// be any finite angle.
OrientedBox canonicalize(const OrientedBox& box);

Vec2 to_world(const OrientedBox& box, Vec2 local);
Vec2 to_local(const OrientedBox& box, Vec2 p);

QuadCorners to_corners(const OrientedBox& box);

// Accepts the corners in any cyclic order and either orientation.
// Throws Error(NotARectangle) when sides deviate by more than 1e-3 relative
// or corners by more than 1e-3 rad from a right angle.
OrientedBox from_corners(const QuadCorners& corners);

OrientedBox from_distance_form(const DistanceForm& df);

// Throws Error(AnchorOutsideBox) unless the anchor is strictly interior.
DistanceForm to_distance_form(const OrientedBox& box, Vec2 anchor);

/// Signed side distances (d1, d2, d3, d4) of p; all positive iff p is
/// strictly inside.
std::array<double, 4> side_distances(const OrientedBox& box, Vec2 p);

/// Boundary inclusive.
bool contains_point(const OrientedBox& box, Vec2 p);

Aabb bounding_box(const OrientedBox& box);

/// Area of the intersection of two rotated rectangles.
double intersection_area(const OrientedBox& a, const OrientedBox& b);

/// Exact IoU by Sutherland-Hodgman clipping of the two quads and the
/// shoelace formula. Symmetric bit-for-bit in its arguments.
double rotated_iou(const OrientedBox& a, const OrientedBox& b);

/// Brute-force IoU on a grid of `cell`-sized squares covering the joint
/// bounding region: a cell counts toward a box when its center lies in it.
double raster_iou_oracle(const OrientedBox& a, const OrientedBox& b, double cell);

}  // namespace rotbox
