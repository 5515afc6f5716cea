#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rotbox/anchors.hpp"
#include "rotbox/io.hpp"
#include "rotbox/maps.hpp"

namespace rotbox {

// Ground truths in a synthetic scene overlap pairwise below this IoU.
inline constexpr double kSceneMaxPairIou = 0.1;

/// Ideal head outputs for a random scene: score 1 at every Positive anchor
/// and 0 elsewhere, regression channels holding the exact encoded target at
/// Positives.
struct SyntheticScene {
    std::uint64_t seed = 0;
    int width = 0;
    int height = 0;
    std::vector<OrientedBox> gts;
    std::vector<LevelSpec> levels;
    LabelMaps labels;
    std::vector<ScoreMap> scores;
    std::vector<RegressionMap> regs;

    AnnotationRecord annotation() const;
    ImageMaps maps() const;
};

/// Boxes are drawn near random priors with angles uniform in (-pi/4, pi/4]
/// and kept inside the image. A candidate is accepted when its IoU with
/// every accepted box stays below kSceneMaxPairIou and, with it added, every
/// box still owns at least one Positive anchor and no Positive anchor point
/// lies on or next to its box boundary. Throws Error(PlacementFailed) after 2000 rejected
/// candidates for one box.
SyntheticScene synth_scene(std::uint64_t seed, int n_boxes, int width, int height, std::span<const LevelSpec> levels,
                           const AnchorSet& anchors);

/// Throws Error(InvalidArgument) if two boxes overlap at kSceneMaxPairIou or more.
void check_scene_contract(std::span<const OrientedBox> gts);

}  // namespace rotbox
