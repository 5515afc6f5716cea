#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "rotbox/geometry.hpp"
#include "rotbox/tensor.hpp"

namespace rotbox {

inline constexpr int kNumGroups = 3;
inline constexpr int kPriorsPerGroup = 5;
inline constexpr int kNumPriors = kNumGroups * kPriorsPerGroup;

// Label thresholds on the pair IoU between a ground truth and an anchor
// prior sharing its center.
inline constexpr double kPositiveIou = 0.5;
inline constexpr double kIgnoreIou = 0.2;

// Distances from a boundary anchor point are clamped to this (pixels).
inline constexpr double kMinTargetDistance = 1e-3;

// Bounds on the angle probability before taking the logit.
inline constexpr double kAngleProbClamp = 1e-4;

struct Size2 {
    double w = 0.0;
    double h = 0.0;

    constexpr double area() const { return w * h; }
    friend constexpr bool operator==(Size2, Size2) = default;
};

struct AnchorPrior {
    double w = 0.0;
    double h = 0.0;
    int group = 0;

    friend constexpr bool operator==(const AnchorPrior&, const AnchorPrior&) = default;
};

/// 15 priors, group-major: priors[g * 5 + k] is prior k of area group g.
/// Group 0 holds the smallest objects.
struct AnchorSet {
    std::vector<AnchorPrior> priors;
    std::array<double, 2> group_boundaries{};

    std::span<const AnchorPrior> group(int g) const {
        return std::span<const AnchorPrior>(priors).subspan(static_cast<std::size_t>(g) * kPriorsPerGroup,
                                                            kPriorsPerGroup);
    }
    friend bool operator==(const AnchorSet&, const AnchorSet&) = default;
};

// Throws Error(InvalidArgument) on a malformed set.
void validate_anchor_set(const AnchorSet& set);

// Priors sized for ships in 512x512 remote-sensing crops.
AnchorSet default_anchor_set();

enum class LevelName : std::uint8_t { P2, P3, P4 };

struct LevelSpec {
    LevelName name = LevelName::P2;
    int stride = 4;
    int height = 0;
    int width = 0;

    friend constexpr bool operator==(const LevelSpec&, const LevelSpec&) = default;
};

std::string_view to_string(LevelName name);
LevelName parse_level_name(std::string_view s);
int level_stride(LevelName name);

/// Area group served by a level: P2 -> 0, P3 -> 1, P4 -> 2.
int level_group(LevelName name);

/// P2, P3 and P4 grids covering an image of the given size.
std::vector<LevelSpec> make_levels(int image_width, int image_height);

/// Image position of feature cell (y, x): its center.
constexpr Vec2 anchor_point(const LevelSpec& level, int y, int x) {
    return {(x + 0.5) * level.stride, (y + 0.5) * level.stride};
}

/// IoU of two axis-aligned boxes sharing a center.
double centered_iou(Size2 a, Size2 b);

struct KMeansOptions {
    int max_iterations = 100;
    double tolerance = 1e-4;
    int restarts = 4;
};

struct Clustering {
    std::vector<Size2> centroids;
    std::vector<int> assignment;
    // Mean (1 - IoU) distance after each assignment step of the kept run.
    std::vector<double> objective;
};

/// Lloyd's k-means under the distance 1 - centered_iou with k-means++
/// seeding. A centroid moves to its cluster mean only when that lowers the
/// cluster's total distance, so the objective never increases.
Clustering kmeans_iou(std::span<const Size2> data, int k, std::uint64_t seed, const KMeansOptions& opts = {});

/// Splits the dimensions into equal-count area tertiles and clusters each
/// into five priors. Throws Error(InsufficientData) below 15 samples.
AnchorSet fit_anchor_priors(std::span<const Size2> gt_dims, std::uint64_t seed, const KMeansOptions& opts = {});

enum class LabelKind : std::uint8_t { Background, Ignored, Positive };

struct AnchorLabel {
    LabelKind kind = LabelKind::Background;
    int gt = -1;  // index of the assigned ground truth when Positive

    friend constexpr bool operator==(const AnchorLabel&, const AnchorLabel&) = default;
};

/// Labels of one level laid out [anchor][y][x], matching the score maps.
struct LevelLabels {
    LevelSpec level;
    std::vector<AnchorLabel> labels;

    std::size_t index(int k, int y, int x) const {
        return (static_cast<std::size_t>(k) * level.height + y) * level.width + x;
    }
    const AnchorLabel& at(int k, int y, int x) const { return labels[index(k, y, x)]; }
    AnchorLabel& at(int k, int y, int x) { return labels[index(k, y, x)]; }
    friend bool operator==(const LevelLabels&, const LevelLabels&) = default;
};

using LabelMaps = std::vector<LevelLabels>;

/// Positive / ignored / background label for every (level, cell, anchor).
LabelMaps assign(std::span<const OrientedBox> gts, std::span<const LevelSpec> levels, const AnchorSet& anchors);

struct EncodedTarget {
    std::array<double, 5> t{};  // t1, t2, t3, t4, t0

    double t0() const { return t[4]; }
    friend constexpr bool operator==(const EncodedTarget&, const EncodedTarget&) = default;
};

/// Throws Error(AnchorOutsideBox) when the anchor point lies outside gt.
/// Anchor points on the boundary get their distances clamped.
EncodedTarget encode(const OrientedBox& gt, const AnchorPrior& prior, Vec2 anchor);

OrientedBox decode(const EncodedTarget& target, const AnchorPrior& prior, Vec2 anchor);

/// Angle carried by an angle logit, in (-pi/4, pi/4).
double decode_angle(double t0);

/// Regression target maps, one (K, 5, H, W) tensor per level, filled at
/// Positive entries and zero elsewhere.
std::vector<Tensor> encode_targets(std::span<const OrientedBox> gts, const LabelMaps& labels,
                                   const AnchorSet& anchors);

}  // namespace rotbox
