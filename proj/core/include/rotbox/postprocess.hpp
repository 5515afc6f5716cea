#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rotbox/anchors.hpp"
#include "rotbox/geometry.hpp"
#include "rotbox/lasa.hpp"
#include "rotbox/maps.hpp"

namespace rotbox {

/// Where a detection came from. Ordered by (level, y, x, anchor).
struct Provenance {
    int level = 0;
    int y = 0;
    int x = 0;
    int anchor = 0;

    friend constexpr auto operator<=>(const Provenance&, const Provenance&) = default;
};

struct Detection {
    OrientedBox box;
    double score_raw = 0.0;
    double score_aligned = 0.0;
    Provenance provenance;

    // Score used for ranking: the aligned score (equal to the raw score when
    // alignment is off).
    double score() const { return score_aligned; }
};

struct PipelineConfig {
    double score_thresh = 0.05;
    double final_thresh = 0.3;
    std::size_t pre_nms_topk = 2000;
    double nms_iou = 0.1;
    std::optional<PatternKind> pattern;
};

// Throws Error(InvalidArgument) when a threshold is outside [0, 1].
void validate(const PipelineConfig& cfg);

/// Higher score first, then provenance order.
bool ranks_before(const Detection& a, const Detection& b);

/// Every (cell, anchor) whose raw score reaches score_thresh, decoded at
/// the cell's anchor point, keeping the pre_nms_topk best per level. Output
/// is ordered by provenance. Decodes that overflow to a degenerate box are
/// dropped.
std::vector<Detection> decode_maps(std::span<const ScoreMap> scores, std::span<const RegressionMap> regs,
                                   const AnchorSet& anchors, const PipelineConfig& cfg);

/// Greedy suppression: keep the best-ranked remaining detection and drop
/// every other one whose rotated IoU with it exceeds iou_thresh. Output is
/// in rank order.
std::vector<Detection> rotated_nms(std::span<const Detection> dets, double iou_thresh);

/// decode_maps, optional score alignment, NMS, final threshold.
std::vector<Detection> run_pipeline(std::span<const ScoreMap> scores, std::span<const RegressionMap> regs,
                                    const AnchorSet& anchors, const PipelineConfig& cfg);

}  // namespace rotbox
