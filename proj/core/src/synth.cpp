#include "rotbox/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "rotbox/error.hpp"

namespace rotbox {

namespace {

constexpr int kMaxAttempts = 2000;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Every box owns at least one Positive anchor, and no Positive anchor point
// lies within the target clamp distance of its box's sides, so every
// Positive decodes back to its box exactly.
bool every_box_recoverable(std::span<const OrientedBox> gts, const LabelMaps& labels) {
    std::vector<bool> owned(gts.size(), false);
    for (const LevelLabels& lv : labels) {
        for (int k = 0; k < kPriorsPerGroup; ++k) {
            for (int y = 0; y < lv.level.height; ++y) {
                for (int x = 0; x < lv.level.width; ++x) {
                    const AnchorLabel& l = lv.at(k, y, x);
                    if (l.kind != LabelKind::Positive) continue;
                    const auto d = side_distances(gts[static_cast<std::size_t>(l.gt)], anchor_point(lv.level, y, x));
                    if (*std::min_element(d.begin(), d.end()) <= kMinTargetDistance) return false;
                    owned[static_cast<std::size_t>(l.gt)] = true;
                }
            }
        }
    }
    return std::all_of(owned.begin(), owned.end(), [](bool b) { return b; });
}

}  // namespace

AnnotationRecord SyntheticScene::annotation() const {
    AnnotationRecord rec{"synth_" + std::to_string(seed), width, height, {}};
    for (const auto& b : gts) rec.objects.push_back({b, false});
    return rec;
}

ImageMaps SyntheticScene::maps() const { return {"synth_" + std::to_string(seed), width, height, scores, regs}; }

void check_scene_contract(std::span<const OrientedBox> gts) {
    for (std::size_t i = 0; i < gts.size(); ++i) {
        for (std::size_t j = i + 1; j < gts.size(); ++j) {
            if (rotated_iou(gts[i], gts[j]) >= kSceneMaxPairIou) {
                throw Error(ErrorCode::InvalidArgument, "scene boxes " + std::to_string(i) + " and " +
                                                            std::to_string(j) + " overlap beyond the scene contract");
            }
        }
    }
}

SyntheticScene synth_scene(std::uint64_t seed, int n_boxes, int width, int height, std::span<const LevelSpec> levels,
                           const AnchorSet& anchors) {
    validate_anchor_set(anchors);
    if (n_boxes < 0) throw Error(ErrorCode::InvalidArgument, "box count must be >= 0");
    if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");

    std::mt19937_64 rng(seed);
    SyntheticScene scene;
    scene.seed = seed;
    scene.width = width;
    scene.height = height;
    scene.levels.assign(levels.begin(), levels.end());

    for (int b = 0; b < n_boxes; ++b) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            const auto pick = std::min<std::size_t>(kNumPriors - 1, static_cast<std::size_t>(uniform01(rng) * kNumPriors));
            const AnchorPrior& prior = anchors.priors[pick];
            const double w = prior.w * (0.9 + 0.2 * uniform01(rng));
            const double h = prior.h * (0.9 + 0.2 * uniform01(rng));
            const double theta = kQuarterPi - uniform01(rng) * (kPi / 2.0);
            OrientedBox box{0.0, 0.0, w, h, theta};
            const Aabb ext = bounding_box(box);
            const double ex = ext.max.x;
            const double ey = ext.max.y;
            if (2.0 * ex >= width || 2.0 * ey >= height) continue;
            box.cx = ex + uniform01(rng) * (width - 2.0 * ex);
            box.cy = ey + uniform01(rng) * (height - 2.0 * ey);

            const bool overlaps = std::any_of(scene.gts.begin(), scene.gts.end(), [&](const OrientedBox& g) {
                return rotated_iou(g, box) >= kSceneMaxPairIou;
            });
            if (overlaps) continue;

            std::vector<OrientedBox> trial = scene.gts;
            trial.push_back(box);
            LabelMaps labels = assign(trial, levels, anchors);
            if (!every_box_recoverable(trial, labels)) continue;

            scene.gts = std::move(trial);
            scene.labels = std::move(labels);
            placed = true;
        }
        if (!placed) {
            throw Error(ErrorCode::PlacementFailed, "could not place box " + std::to_string(b) + " of " +
                                                        std::to_string(n_boxes) + " after " +
                                                        std::to_string(kMaxAttempts) + " attempts");
        }
    }
    if (scene.labels.empty()) scene.labels = assign(scene.gts, levels, anchors);

    const std::vector<Tensor> targets = encode_targets(scene.gts, scene.labels, anchors);
    for (std::size_t li = 0; li < levels.size(); ++li) {
        const LevelSpec& level = levels[li];
        Tensor scores({kPriorsPerGroup, static_cast<std::size_t>(level.height), static_cast<std::size_t>(level.width)});
        const LevelLabels& lv = scene.labels[li];
        for (std::size_t i = 0; i < lv.labels.size(); ++i) {
            if (lv.labels[i].kind == LabelKind::Positive) scores[i] = 1.0;
        }
        scene.scores.push_back({level, std::move(scores)});
        scene.regs.push_back({level, targets[li]});
    }
    return scene;
}

}  // namespace rotbox
