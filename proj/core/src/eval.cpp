#include "rotbox/eval.hpp"

#include <algorithm>
#include <numeric>

#include "rotbox/error.hpp"
#include "rotbox/parallel.hpp"

namespace rotbox {

std::string_view to_string(ApMethod m) { return m == ApMethod::Voc07 ? "voc07" : "all_points"; }

ApMethod parse_ap_method(std::string_view s) {
    if (s == "voc07") return ApMethod::Voc07;
    if (s == "all_points") return ApMethod::AllPoints;
    throw Error(ErrorCode::InvalidArgument, "unknown AP method '" + std::string(s) + "' (voc07|all_points)");
}

std::size_t count_gt(std::span<const ImageGroundTruth> gts) {
    std::size_t n = 0;
    for (const auto& img : gts) {
        n += static_cast<std::size_t>(
            std::count_if(img.objects.begin(), img.objects.end(), [](const GtObject& o) { return !o.difficult; }));
    }
    return n;
}

std::vector<MatchRecord> match_detections(std::span<const ImageDetections> dets,
                                          std::span<const ImageGroundTruth> gts, double iou_thresh) {
    if (dets.size() != gts.size()) {
        throw Error(ErrorCode::ShapeMismatch, "detections and ground truth cover different image counts");
    }

    // IoU of every detection against every object of its image.
    std::vector<std::vector<double>> iou(dets.size());
    parallel_for(dets.size(), [&](std::size_t i) {
        const auto& d = dets[i].detections;
        const auto& g = gts[i].objects;
        iou[i].resize(d.size() * g.size());
        for (std::size_t a = 0; a < d.size(); ++a) {
            for (std::size_t b = 0; b < g.size(); ++b) iou[i][a * g.size() + b] = rotated_iou(d[a].box, g[b].box);
        }
    });

    std::vector<MatchRecord> records;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        for (std::size_t a = 0; a < dets[i].detections.size(); ++a) {
            records.push_back({i, a, dets[i].detections[a].score(), MatchFlag::FalsePositive});
        }
    }
    std::sort(records.begin(), records.end(), [&](const MatchRecord& a, const MatchRecord& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.image != b.image) return a.image < b.image;
        const auto& pa = dets[a.image].detections[a.detection].provenance;
        const auto& pb = dets[b.image].detections[b.detection].provenance;
        if (pa != pb) return pa < pb;
        return a.detection < b.detection;
    });

    std::vector<std::vector<bool>> matched(gts.size());
    for (std::size_t i = 0; i < gts.size(); ++i) matched[i].assign(gts[i].objects.size(), false);

    for (MatchRecord& r : records) {
        const auto& objects = gts[r.image].objects;
        const double* row = iou[r.image].data() + r.detection * objects.size();
        double best = -1.0;
        std::size_t best_idx = objects.size();
        double best_difficult = -1.0;
        for (std::size_t g = 0; g < objects.size(); ++g) {
            if (objects[g].difficult) {
                best_difficult = std::max(best_difficult, row[g]);
            } else if (!matched[r.image][g] && row[g] > best) {
                best = row[g];
                best_idx = g;
            }
        }
        if (best_idx < objects.size() && best >= iou_thresh) {
            r.flag = MatchFlag::TruePositive;
            matched[r.image][best_idx] = true;
        } else if (best_difficult >= iou_thresh) {
            r.flag = MatchFlag::Ignored;
        }
    }
    return records;
}

APResult average_precision(std::span<const MatchRecord> records, std::size_t n_gt, ApMethod method) {
    if (n_gt == 0) throw Error(ErrorCode::NoGroundTruth, "average precision needs at least one ground truth");

    std::vector<MatchRecord> sweep;
    for (const auto& r : records) {
        if (r.flag != MatchFlag::Ignored) sweep.push_back(r);
    }
    std::stable_sort(sweep.begin(), sweep.end(),
                     [](const MatchRecord& a, const MatchRecord& b) { return a.score > b.score; });

    APResult res;
    res.method = method;
    res.n_gt = n_gt;
    res.n_det = sweep.size();
    std::vector<std::size_t> tp_count;
    std::size_t tp = 0;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        if (sweep[i].flag == MatchFlag::TruePositive) ++tp;
        tp_count.push_back(tp);
        res.pr_points.push_back({static_cast<double>(tp) / static_cast<double>(n_gt),
                                 static_cast<double>(tp) / static_cast<double>(i + 1)});
    }

    if (method == ApMethod::Voc07) {
        double sum = 0.0;
        for (int t = 0; t <= 10; ++t) {
            const double thresh = t / 10.0;
            double best = 0.0;
            for (const PrPoint& p : res.pr_points) {
                if (p.recall >= thresh) best = std::max(best, p.precision);
            }
            sum += best;
        }
        res.ap = sum / 11.0;
    } else {
        // Precision envelope, integrated over recall steps. Weighting by the
        // true-positive increments keeps a perfect sweep at exactly 1.
        std::vector<double> envelope(res.pr_points.size());
        double running = 0.0;
        for (std::size_t i = res.pr_points.size(); i-- > 0;) {
            running = std::max(running, res.pr_points[i].precision);
            envelope[i] = running;
        }
        double sum = 0.0;
        std::size_t prev = 0;
        for (std::size_t i = 0; i < res.pr_points.size(); ++i) {
            if (tp_count[i] > prev) sum += envelope[i] * static_cast<double>(tp_count[i] - prev);
            prev = tp_count[i];
        }
        res.ap = sum / static_cast<double>(n_gt);
    }
    return res;
}

APResult evaluate(std::span<const ImageDetections> dets, std::span<const ImageGroundTruth> gts, double iou_thresh,
                  ApMethod method) {
    const auto records = match_detections(dets, gts, iou_thresh);
    return average_precision(records, count_gt(gts), method);
}

}  // namespace rotbox
