#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "rotbox/geometry.hpp"
#include "rotbox/maps.hpp"

namespace rotbox {

enum class PatternKind { Rect9, Diamond5, Diamond9, Diamond13 };

/// Sampling layout in units of half-extents: a local point (u, v) sits at
/// center + R(theta) * (u * w/2, v * h/2).
struct SamplingPattern {
    PatternKind kind = PatternKind::Diamond9;
    std::vector<Vec2> local;

    static SamplingPattern make(PatternKind kind);
};

std::string_view to_string(PatternKind kind);

/// "rect9", "diamond5", "diamond9", "diamond13"; "none" maps to nullopt.
/// Anything else throws Error(InvalidArgument).
std::optional<PatternKind> parse_pattern(std::string_view name);

std::vector<Vec2> sampling_points(const OrientedBox& box, const SamplingPattern& pattern);

/// Score of anchor k at an image point. Feature coordinates are
/// (x / stride - 0.5, y / stride - 0.5), clamped to the grid.
double bilinear_sample(const ScoreMap& map, Vec2 p, int k);

/// Mean of the bilinear samples at the pattern points inside the box.
double align_score(const OrientedBox& box, int k, const ScoreMap& map, const SamplingPattern& pattern);

}  // namespace rotbox
