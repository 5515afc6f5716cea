#include "rotbox/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <tuple>

#include "rotbox/error.hpp"

namespace rotbox {

namespace {

// Points this close to a side count as on it (pixels).
constexpr double kBoundaryTol = 1e-9;
constexpr double kRectTol = 1e-3;

// Corner offsets in the local frame, in screen-clockwise order starting at
// the local top-left. Their shoelace area is positive.
constexpr std::array<Vec2, 4> kUnitCorners = {{{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}};

std::array<Vec2, 4> corner_ring(const OrientedBox& box, Vec2 origin) {
    const double c = std::cos(box.theta);
    const double s = std::sin(box.theta);
    const Vec2 center{box.cx - origin.x, box.cy - origin.y};
    std::array<Vec2, 4> ring;
    for (std::size_t i = 0; i < 4; ++i) {
        const double u = kUnitCorners[i].x * box.w;
        const double v = kUnitCorners[i].y * box.h;
        ring[i] = {center.x + c * u - s * v, center.y + s * u + c * v};
    }
    return ring;
}

// Fixed-capacity polygon; clipping a quad by four half-planes yields at
// most eight vertices.
struct Polygon {
    std::array<Vec2, 16> v;
    std::size_t n = 0;

    void push(Vec2 p) { v[n++] = p; }
};

double shoelace(const Polygon& poly) {
    if (poly.n < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.n; ++i) {
        twice += cross(poly.v[i], poly.v[(i + 1) % poly.n]);
    }
    return 0.5 * twice;
}

Polygon clip(const std::array<Vec2, 4>& subject, const std::array<Vec2, 4>& clipper) {
    Polygon out;
    for (const Vec2& p : subject) out.push(p);

    for (std::size_t e = 0; e < 4 && out.n > 0; ++e) {
        const Vec2 a = clipper[e];
        const Vec2 edge = clipper[(e + 1) % 4] - a;
        const Polygon in = out;
        out.n = 0;
        for (std::size_t i = 0; i < in.n; ++i) {
            const Vec2 cur = in.v[i];
            const Vec2 nxt = in.v[(i + 1) % in.n];
            const double sc = cross(edge, cur - a);
            const double sn = cross(edge, nxt - a);
            if (sc >= 0.0) out.push(cur);
            if ((sc >= 0.0) != (sn >= 0.0)) {
                const double t = sc / (sc - sn);
                out.push(cur + (nxt - cur) * t);
            }
        }
    }
    return out;
}

bool ordered_before(const OrientedBox& a, const OrientedBox& b) {
    return std::tie(a.cx, a.cy, a.w, a.h, a.theta) < std::tie(b.cx, b.cy, b.w, b.h, b.theta);
}

bool aabb_disjoint(const Aabb& a, const Aabb& b) {
    return a.max.x < b.min.x || b.max.x < a.min.x || a.max.y < b.min.y || b.max.y < a.min.y;
}

}  // namespace

bool is_canonical(const OrientedBox& box) {
    return std::isfinite(box.cx) && std::isfinite(box.cy) && std::isfinite(box.w) && std::isfinite(box.h) &&
           std::isfinite(box.theta) && box.w > 0.0 && box.h > 0.0 && box.theta > -kQuarterPi &&
           box.theta <= kQuarterPi;
}

void validate_box(const OrientedBox& box) {
    if (!is_canonical(box)) {
        throw Error(ErrorCode::InvalidBox, "box (" + std::to_string(box.cx) + ", " + std::to_string(box.cy) + ", " +
                                               std::to_string(box.w) + ", " + std::to_string(box.h) + ", " +
                                               std::to_string(box.theta) + ") is not canonical");
    }
}

SizeAngle normalize_angle(double w, double h, double theta) {
    while (theta <= -kQuarterPi) {
        theta += kPi / 2.0;
        std::swap(w, h);
    }
    while (theta > kQuarterPi) {
        theta -= kPi / 2.0;
        std::swap(w, h);
    }
    return {w, h, theta};
}

OrientedBox canonicalize(const OrientedBox& box) {
    double theta = std::remainder(box.theta, 2.0 * kPi);
    if (theta <= -kPi) theta += 2.0 * kPi;
    const SizeAngle n = normalize_angle(box.w, box.h, theta);
    return {box.cx, box.cy, n.w, n.h, n.theta};
}

Vec2 to_world(const OrientedBox& box, Vec2 local) {
    const double c = std::cos(box.theta);
    const double s = std::sin(box.theta);
    return {box.cx + c * local.x - s * local.y, box.cy + s * local.x + c * local.y};
}

Vec2 to_local(const OrientedBox& box, Vec2 p) {
    const double c = std::cos(box.theta);
    const double s = std::sin(box.theta);
    const double dx = p.x - box.cx;
    const double dy = p.y - box.cy;
    return {c * dx + s * dy, -s * dx + c * dy};
}

QuadCorners to_corners(const OrientedBox& box) {
    const std::array<Vec2, 4> ring = corner_ring(box, {0.0, 0.0});
    const double tie_tol = 1e-9 * (box.w + box.h);

    std::size_t first = 0;
    for (std::size_t i = 1; i < 4; ++i) {
        const double si = ring[i].x + ring[i].y;
        const double sf = ring[first].x + ring[first].y;
        if (si < sf - tie_tol) {
            first = i;
        } else if (std::abs(si - sf) <= tie_tol) {
            if (ring[i].y < ring[first].y || (ring[i].y == ring[first].y && ring[i].x < ring[first].x)) {
                first = i;
            }
        }
    }

    QuadCorners q;
    for (std::size_t i = 0; i < 4; ++i) q.pts[i] = ring[(first + i) % 4];
    return q;
}

OrientedBox from_corners(const QuadCorners& corners) {
    const auto& p = corners.pts;
    std::array<Vec2, 4> edge;
    std::array<double, 4> len;
    for (std::size_t i = 0; i < 4; ++i) {
        edge[i] = p[(i + 1) % 4] - p[i];
        len[i] = std::hypot(edge[i].x, edge[i].y);
        if (!std::isfinite(len[i]) || len[i] <= 0.0) {
            throw Error(ErrorCode::NotARectangle, "degenerate or non-finite side");
        }
    }
    for (std::size_t i = 0; i < 2; ++i) {
        if (std::abs(len[i] - len[i + 2]) > kRectTol * std::max(len[i], len[i + 2])) {
            throw Error(ErrorCode::NotARectangle, "opposite sides differ in length");
        }
    }
    const double max_cos = std::sin(kRectTol);
    for (std::size_t i = 0; i < 4; ++i) {
        const double c = std::abs(dot(edge[i], edge[(i + 1) % 4])) / (len[i] * len[(i + 1) % 4]);
        if (c > max_cos) throw Error(ErrorCode::NotARectangle, "adjacent sides are not orthogonal");
    }

    const Vec2 center = (p[0] + p[1] + p[2] + p[3]) * 0.25;
    double phi = std::atan2(edge[0].y, edge[0].x);
    if (phi <= -kPi) phi = kPi;
    SizeAngle n = normalize_angle(0.5 * (len[0] + len[2]), 0.5 * (len[1] + len[3]), phi);
    // Rounding can land a +pi/4 box just above -pi/4; fold it onto the
    // canonical side of the boundary.
    if (n.theta < -kQuarterPi + 1e-12) n = {n.h, n.w, n.theta + kPi / 2.0};
    return {center.x, center.y, n.w, n.h, n.theta};
}

OrientedBox from_distance_form(const DistanceForm& df) {
    const double c = std::cos(df.theta);
    const double s = std::sin(df.theta);
    const double du = 0.5 * (df.d2 - df.d4);
    const double dv = 0.5 * (df.d3 - df.d1);
    return {df.x + c * du - s * dv, df.y + s * du + c * dv, df.d2 + df.d4, df.d1 + df.d3, df.theta};
}

std::array<double, 4> side_distances(const OrientedBox& box, Vec2 p) {
    const Vec2 l = to_local(box, p);
    return {l.y + 0.5 * box.h, 0.5 * box.w - l.x, 0.5 * box.h - l.y, l.x + 0.5 * box.w};
}

DistanceForm to_distance_form(const OrientedBox& box, Vec2 anchor) {
    const auto d = side_distances(box, anchor);
    if (!(d[0] > 0.0 && d[1] > 0.0 && d[2] > 0.0 && d[3] > 0.0)) {
        throw Error(ErrorCode::AnchorOutsideBox, "anchor (" + std::to_string(anchor.x) + ", " +
                                                     std::to_string(anchor.y) + ") is not strictly inside the box");
    }
    return {anchor.x, anchor.y, d[0], d[1], d[2], d[3], box.theta};
}

bool contains_point(const OrientedBox& box, Vec2 p) {
    const Vec2 l = to_local(box, p);
    return std::abs(l.x) <= 0.5 * box.w + kBoundaryTol && std::abs(l.y) <= 0.5 * box.h + kBoundaryTol;
}

Aabb bounding_box(const OrientedBox& box) {
    const double c = std::abs(std::cos(box.theta));
    const double s = std::abs(std::sin(box.theta));
    const double ex = 0.5 * (c * box.w + s * box.h);
    const double ey = 0.5 * (s * box.w + c * box.h);
    return {{box.cx - ex, box.cy - ey}, {box.cx + ex, box.cy + ey}};
}

double intersection_area(const OrientedBox& a, const OrientedBox& b) {
    const OrientedBox& first = ordered_before(b, a) ? b : a;
    const OrientedBox& second = ordered_before(b, a) ? a : b;
    if (aabb_disjoint(bounding_box(first), bounding_box(second))) return 0.0;

    // Work relative to one center to keep coordinates small.
    const Vec2 origin = first.center();
    const Polygon inter = clip(corner_ring(first, origin), corner_ring(second, origin));
    return std::max(0.0, shoelace(inter));
}

double rotated_iou(const OrientedBox& a, const OrientedBox& b) {
    const double inter = intersection_area(a, b);
    if (inter <= 0.0) return 0.0;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

namespace {

struct Interval {
    double lo;
    double hi;
};

// Range of x for which (x, y) lies in the closed box.
Interval row_span(const OrientedBox& box, double y) {
    const double c = std::cos(box.theta);
    const double s = std::sin(box.theta);
    const double dy = y - box.cy;
    Interval span{-INFINITY, INFINITY};
    // |u| <= w/2 with u = c*dx + s*dy, |v| <= h/2 with v = -s*dx + c*dy.
    const std::array<std::array<double, 3>, 2> slabs = {{{c, s * dy, 0.5 * box.w}, {-s, c * dy, 0.5 * box.h}}};
    for (const auto& [coef, offset, half] : slabs) {
        if (std::abs(coef) < 1e-15) {
            if (std::abs(offset) > half) return {1.0, 0.0};
            continue;
        }
        double lo = (-half - offset) / coef;
        double hi = (half - offset) / coef;
        if (lo > hi) std::swap(lo, hi);
        span.lo = std::max(span.lo, lo + box.cx);
        span.hi = std::min(span.hi, hi + box.cx);
    }
    return span;
}

// Number of cell centers x0 + (i + 0.5) * cell, 0 <= i < n, inside span.
std::int64_t count_centers(Interval span, double x0, double cell, std::int64_t n) {
    if (!(span.lo <= span.hi)) return 0;
    const auto first = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil((span.lo - x0) / cell - 0.5)));
    const auto last =
        std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::floor((span.hi - x0) / cell - 0.5)));
    return std::max<std::int64_t>(0, last - first + 1);
}

}  // namespace

double raster_iou_oracle(const OrientedBox& a, const OrientedBox& b, double cell) {
    if (!(cell > 0.0)) throw Error(ErrorCode::InvalidArgument, "raster cell size must be positive");
    const Aabb ba = bounding_box(a);
    const Aabb bb = bounding_box(b);
    const Vec2 lo{std::min(ba.min.x, bb.min.x), std::min(ba.min.y, bb.min.y)};
    const Vec2 hi{std::max(ba.max.x, bb.max.x), std::max(ba.max.y, bb.max.y)};
    const auto nx = static_cast<std::int64_t>(std::ceil((hi.x - lo.x) / cell));
    const auto ny = static_cast<std::int64_t>(std::ceil((hi.y - lo.y) / cell));

    // Row by row: a convex region meets each row of cell centers in one
    // interval, so each row's count is exact without visiting every cell.
    std::int64_t in_a = 0;
    std::int64_t in_b = 0;
    std::int64_t in_both = 0;
    for (std::int64_t j = 0; j < ny; ++j) {
        const double y = lo.y + (static_cast<double>(j) + 0.5) * cell;
        const Interval sa = row_span(a, y);
        const Interval sb = row_span(b, y);
        in_a += count_centers(sa, lo.x, cell, nx);
        in_b += count_centers(sb, lo.x, cell, nx);
        in_both += count_centers({std::max(sa.lo, sb.lo), std::min(sa.hi, sb.hi)}, lo.x, cell, nx);
    }
    const std::int64_t uni = in_a + in_b - in_both;
    if (uni == 0) return 0.0;
    return static_cast<double>(in_both) / static_cast<double>(uni);
}

}  // namespace rotbox
