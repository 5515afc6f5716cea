#include "rotbox/postprocess.hpp"

#include <algorithm>
#include <string>

#include "rotbox/error.hpp"
#include "rotbox/parallel.hpp"

namespace rotbox {

void validate(const PipelineConfig& cfg) {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(cfg.score_thresh) || !in_unit(cfg.final_thresh) || !in_unit(cfg.nms_iou)) {
        throw Error(ErrorCode::InvalidArgument, "pipeline thresholds must lie in [0, 1]");
    }
}

bool ranks_before(const Detection& a, const Detection& b) {
    if (a.score() != b.score()) return a.score() > b.score();
    return a.provenance < b.provenance;
}

std::vector<Detection> decode_maps(std::span<const ScoreMap> scores, std::span<const RegressionMap> regs,
                                   const AnchorSet& anchors, const PipelineConfig& cfg) {
    validate(cfg);
    validate_anchor_set(anchors);
    if (scores.size() != regs.size()) {
        throw Error(ErrorCode::ShapeMismatch, "need one regression map per score map");
    }

    std::vector<std::vector<Detection>> per_level(scores.size());
    for (std::size_t li = 0; li < scores.size(); ++li) {
        validate(scores[li]);
        validate(regs[li]);
        if (scores[li].level != regs[li].level || scores[li].num_anchors() != regs[li].num_anchors() ||
            scores[li].num_anchors() != kPriorsPerGroup) {
            throw Error(ErrorCode::ShapeMismatch, "score and regression maps disagree at level " + std::to_string(li));
        }
    }

    parallel_for(scores.size(), [&](std::size_t li) {
        const ScoreMap& sm = scores[li];
        const LevelSpec& level = sm.level;
        const auto priors = anchors.group(level_group(level.name));
        std::vector<Detection>& out = per_level[li];

        for (int y = 0; y < level.height; ++y) {
            for (int x = 0; x < level.width; ++x) {
                for (int k = 0; k < kPriorsPerGroup; ++k) {
                    const double s = sm.at(k, y, x);
                    if (s < cfg.score_thresh) continue;
                    const OrientedBox box =
                        decode(regs[li].at(k, y, x), priors[static_cast<std::size_t>(k)], anchor_point(level, y, x));
                    if (!is_canonical(box)) continue;
                    out.push_back({box, s, s, {static_cast<int>(li), y, x, k}});
                }
            }
        }
        if (out.size() > cfg.pre_nms_topk) {
            std::nth_element(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(cfg.pre_nms_topk), out.end(),
                             ranks_before);
            out.resize(cfg.pre_nms_topk);
            std::sort(out.begin(), out.end(),
                      [](const Detection& a, const Detection& b) { return a.provenance < b.provenance; });
        }
    });

    std::vector<Detection> all;
    for (auto& v : per_level) all.insert(all.end(), v.begin(), v.end());
    return all;
}

std::vector<Detection> rotated_nms(std::span<const Detection> dets, double iou_thresh) {
    std::vector<Detection> order(dets.begin(), dets.end());
    std::sort(order.begin(), order.end(), ranks_before);

    std::vector<Aabb> bounds;
    bounds.reserve(order.size());
    for (const Detection& d : order) bounds.push_back(bounding_box(d.box));

    std::vector<bool> suppressed(order.size(), false);
    std::vector<Detection> kept;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (suppressed[i]) continue;
        kept.push_back(order[i]);
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            if (suppressed[j]) continue;
            const Aabb& a = bounds[i];
            const Aabb& b = bounds[j];
            if (a.max.x < b.min.x || b.max.x < a.min.x || a.max.y < b.min.y || b.max.y < a.min.y) continue;
            if (rotated_iou(order[i].box, order[j].box) > iou_thresh) suppressed[j] = true;
        }
    }
    return kept;
}

std::vector<Detection> run_pipeline(std::span<const ScoreMap> scores, std::span<const RegressionMap> regs,
                                    const AnchorSet& anchors, const PipelineConfig& cfg) {
    std::vector<Detection> dets = decode_maps(scores, regs, anchors, cfg);

    if (cfg.pattern) {
        const SamplingPattern pattern = SamplingPattern::make(*cfg.pattern);
        parallel_for(dets.size(), [&](std::size_t i) {
            Detection& d = dets[i];
            d.score_aligned = align_score(d.box, d.provenance.anchor,
                                          scores[static_cast<std::size_t>(d.provenance.level)], pattern);
        });
    }

    std::vector<Detection> kept = rotated_nms(dets, cfg.nms_iou);
    std::erase_if(kept, [&](const Detection& d) { return d.score() < cfg.final_thresh; });
    return kept;
}

}  // namespace rotbox
