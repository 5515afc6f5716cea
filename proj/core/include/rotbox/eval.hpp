#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rotbox/geometry.hpp"
#include "rotbox/postprocess.hpp"

namespace rotbox {

struct GtObject {
    OrientedBox box;
    bool difficult = false;
};

struct ImageGroundTruth {
    std::string image_id;
    std::vector<GtObject> objects;
};

struct ImageDetections {
    std::string image_id;
    std::vector<Detection> detections;
};

enum class MatchFlag { TruePositive, FalsePositive, Ignored };

struct MatchRecord {
    std::size_t image = 0;
    std::size_t detection = 0;
    double score = 0.0;
    MatchFlag flag = MatchFlag::FalsePositive;
};

enum class ApMethod { Voc07, AllPoints };

std::string_view to_string(ApMethod m);
ApMethod parse_ap_method(std::string_view s);

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

struct APResult {
    double ap = 0.0;
    ApMethod method = ApMethod::Voc07;
    std::vector<PrPoint> pr_points;
    std::size_t n_gt = 0;
    std::size_t n_det = 0;
};

/// Non-difficult ground-truth count.
std::size_t count_gt(std::span<const ImageGroundTruth> gts);

/// Images are paired by position. Detections are swept in global score
/// order (ties: image index, then provenance); each one takes the unmatched
/// non-difficult ground truth of its image with the highest rotated IoU if
/// that IoU reaches iou_thresh. A detection that instead overlaps a
/// difficult object at iou_thresh is Ignored. Everything else is a false
/// positive. Output is in sweep order.
std::vector<MatchRecord> match_detections(std::span<const ImageDetections> dets,
                                          std::span<const ImageGroundTruth> gts, double iou_thresh);

/// Ignored records are skipped. Throws Error(NoGroundTruth) when n_gt == 0.
APResult average_precision(std::span<const MatchRecord> records, std::size_t n_gt, ApMethod method);

APResult evaluate(std::span<const ImageDetections> dets, std::span<const ImageGroundTruth> gts, double iou_thresh,
                  ApMethod method);

}  // namespace rotbox
