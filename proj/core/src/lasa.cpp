#include "rotbox/lasa.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rotbox/error.hpp"

namespace rotbox {

SamplingPattern SamplingPattern::make(PatternKind kind) {
    SamplingPattern p{kind, {}};
    switch (kind) {
        case PatternKind::Rect9:
            for (double v : {-0.5, 0.0, 0.5}) {
                for (double u : {-0.5, 0.0, 0.5}) p.local.push_back({u, v});
            }
            break;
        case PatternKind::Diamond5:
        case PatternKind::Diamond9:
            p.local = {{0.0, 0.0}, {0.5, 0.0}, {-0.5, 0.0}, {0.0, 0.5}, {0.0, -0.5}};
            if (kind == PatternKind::Diamond9) {
                for (double v : {-0.25, 0.25}) {
                    for (double u : {-0.25, 0.25}) p.local.push_back({u, v});
                }
            }
            break;
        case PatternKind::Diamond13: {
            // Center, rhombus vertices, and the points at 1/3 and 2/3 along
            // each rhombus edge.
            const std::array<Vec2, 4> vertex = {{{0.5, 0.0}, {0.0, 0.5}, {-0.5, 0.0}, {0.0, -0.5}}};
            p.local.push_back({0.0, 0.0});
            for (const Vec2& v : vertex) p.local.push_back(v);
            for (std::size_t i = 0; i < 4; ++i) {
                const Vec2 a = vertex[i];
                const Vec2 b = vertex[(i + 1) % 4];
                p.local.push_back(a + (b - a) * (1.0 / 3.0));
                p.local.push_back(a + (b - a) * (2.0 / 3.0));
            }
            break;
        }
    }
    return p;
}

std::string_view to_string(PatternKind kind) {
    switch (kind) {
        case PatternKind::Rect9: return "rect9";
        case PatternKind::Diamond5: return "diamond5";
        case PatternKind::Diamond9: return "diamond9";
        case PatternKind::Diamond13: return "diamond13";
    }
    return "?";
}

std::optional<PatternKind> parse_pattern(std::string_view name) {
    if (name == "none") return std::nullopt;
    for (PatternKind k : {PatternKind::Rect9, PatternKind::Diamond5, PatternKind::Diamond9, PatternKind::Diamond13}) {
        if (name == to_string(k)) return k;
    }
    throw Error(ErrorCode::InvalidArgument,
                "unknown sampling pattern '" + std::string(name) + "' (none|rect9|diamond5|diamond9|diamond13)");
}

std::vector<Vec2> sampling_points(const OrientedBox& box, const SamplingPattern& pattern) {
    std::vector<Vec2> out;
    out.reserve(pattern.local.size());
    for (const Vec2& l : pattern.local) out.push_back(to_world(box, {l.x * 0.5 * box.w, l.y * 0.5 * box.h}));
    return out;
}

double bilinear_sample(const ScoreMap& map, Vec2 p, int k) {
    const int H = map.level.height;
    const int W = map.level.width;
    const double s = map.level.stride;
    const double fx = std::clamp(p.x / s - 0.5, 0.0, static_cast<double>(W - 1));
    const double fy = std::clamp(p.y / s - 0.5, 0.0, static_cast<double>(H - 1));
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const int x1 = std::min(x0 + 1, W - 1);
    const int y1 = std::min(y0 + 1, H - 1);
    const double ax = fx - x0;
    const double ay = fy - y0;
    // Difference form keeps flat neighborhoods exact.
    const double v00 = map.at(k, y0, x0);
    const double v10 = map.at(k, y1, x0);
    const double top = v00 + ax * (map.at(k, y0, x1) - v00);
    const double bottom = v10 + ax * (map.at(k, y1, x1) - v10);
    return top + ay * (bottom - top);
}

double align_score(const OrientedBox& box, int k, const ScoreMap& map, const SamplingPattern& pattern) {
    if (pattern.local.empty()) return 0.0;
    // Offsets from the first sample keep a constant field exact.
    const auto pts = sampling_points(box, pattern);
    const double first = bilinear_sample(map, pts.front(), k);
    double offset = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) offset += bilinear_sample(map, pts[i], k) - first;
    return std::clamp(first + offset / static_cast<double>(pts.size()), 0.0, 1.0);
}

}  // namespace rotbox
