#include "rotbox/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rotbox/error.hpp"

namespace rotbox {

void validate(const LossConfig& cfg) {
    if (!(cfg.gamma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be >= 0");
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be in (0, 1]");
    if (!(cfg.lambda_d >= 0.0 && cfg.lambda_a >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "loss weights must be >= 0");
    }
    if (!(cfg.eps > 0.0 && cfg.eps < 0.5)) throw Error(ErrorCode::InvalidArgument, "eps must be in (0, 0.5)");
}

double focal_loss(double p, int p_star, double alpha, double gamma, double eps) {
    p = std::clamp(p, eps, 1.0 - eps);
    const double pt = p_star == 1 ? p : 1.0 - p;
    const double at = p_star == 1 ? alpha : 1.0 - alpha;
    return -at * std::pow(1.0 - pt, gamma) * std::log(pt);
}

double iou_loss(const std::array<double, 4>& d, const std::array<double, 4>& d_star, double eps) {
    for (std::size_t i = 0; i < 4; ++i) {
        if (!(d[i] > 0.0) || !(d_star[i] > 0.0)) {
            throw Error(ErrorCode::NonPositiveDistance, "IoU loss needs strictly positive distances");
        }
    }
    const double ih = std::min(d[0], d_star[0]) + std::min(d[2], d_star[2]);
    const double iw = std::min(d[1], d_star[1]) + std::min(d[3], d_star[3]);
    const double inter = ih * iw;
    const double uni = (d[0] + d[2]) * (d[1] + d[3]) + (d_star[0] + d_star[2]) * (d_star[1] + d_star[3]) - inter;
    return -std::log((inter + eps) / (uni + eps));
}

double angle_loss(double theta, double theta_star) { return 1.0 - std::cos(theta - theta_star); }

std::array<double, 4> target_distances(const EncodedTarget& t, const AnchorPrior& prior) {
    return {prior.h * std::exp(t.t[0]), prior.w * std::exp(t.t[1]), prior.h * std::exp(t.t[2]),
            prior.w * std::exp(t.t[3])};
}

LossReport total_loss(std::span<const ScoreMap> scores, std::span<const RegressionMap> regs, const LabelMaps& labels,
                      std::span<const Tensor> targets, const AnchorSet& anchors, const LossConfig& cfg) {
    validate(cfg);
    validate_anchor_set(anchors);
    const std::size_t n_levels = labels.size();
    if (scores.size() != n_levels || regs.size() != n_levels || targets.size() != n_levels) {
        throw Error(ErrorCode::ShapeMismatch, "score, regression, label and target maps must cover the same levels");
    }

    LossReport r;
    // Summation order is fixed: level, anchor, row, column.
    for (std::size_t li = 0; li < n_levels; ++li) {
        const LevelLabels& lv = labels[li];
        const LevelSpec& level = lv.level;
        validate(scores[li]);
        validate(regs[li]);
        const RegressionMap target{level, targets[li]};
        if (scores[li].level != level || regs[li].level != level) {
            throw Error(ErrorCode::ShapeMismatch, "maps of level " + std::string(to_string(level.name)) +
                                                      " disagree on the grid");
        }
        validate(target);
        const int K = scores[li].num_anchors();
        if (regs[li].num_anchors() != K || target.num_anchors() != K ||
            lv.labels.size() != static_cast<std::size_t>(K) * level.height * level.width ||
            K != kPriorsPerGroup) {
            throw Error(ErrorCode::ShapeMismatch, "anchor count differs between maps");
        }
        const auto priors = anchors.group(level_group(level.name));

        for (int k = 0; k < K; ++k) {
            const AnchorPrior& prior = priors[static_cast<std::size_t>(k)];
            for (int y = 0; y < level.height; ++y) {
                for (int x = 0; x < level.width; ++x) {
                    const AnchorLabel& label = lv.at(k, y, x);
                    if (label.kind == LabelKind::Ignored) {
                        ++r.n_ignored;
                        continue;
                    }
                    const bool positive = label.kind == LabelKind::Positive;
                    r.l_cls += focal_loss(scores[li].at(k, y, x), positive ? 1 : 0, cfg.alpha, cfg.gamma, cfg.eps);
                    if (!positive) {
                        ++r.n_background;
                        continue;
                    }
                    ++r.n_positive;
                    const EncodedTarget pred = regs[li].at(k, y, x);
                    const EncodedTarget want = target.at(k, y, x);
                    r.l_dist += iou_loss(target_distances(pred, prior), target_distances(want, prior), cfg.eps);
                    r.l_angle += angle_loss(decode_angle(pred.t0()), decode_angle(want.t0()));
                }
            }
        }
    }

    r.n_cls = std::max<std::size_t>(1, r.n_positive);
    r.n_reg = r.n_cls;
    r.total = r.l_cls / static_cast<double>(r.n_cls) +
              (cfg.lambda_d * r.l_dist + cfg.lambda_a * r.l_angle) / static_cast<double>(r.n_reg);
    return r;
}

}  // namespace rotbox
