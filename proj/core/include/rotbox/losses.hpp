#pragma once

#include <array>
#include <span>

#include "rotbox/anchors.hpp"
#include "rotbox/maps.hpp"

namespace rotbox {

struct LossConfig {
    double alpha = 0.25;
    double gamma = 2.0;
    double lambda_d = 1.0;
    double lambda_a = 10.0;
    double eps = 1e-9;
};

// Throws Error(InvalidArgument) when a field is out of its domain.
void validate(const LossConfig& cfg);

/// Raw sums of the three terms and the combined objective
/// total = l_cls / n_cls + (lambda_d * l_dist + lambda_a * l_angle) / n_reg.
struct LossReport {
    double l_cls = 0.0;
    double l_dist = 0.0;
    double l_angle = 0.0;
    double total = 0.0;
    std::size_t n_cls = 1;
    std::size_t n_reg = 1;
    std::size_t n_positive = 0;
    std::size_t n_background = 0;
    std::size_t n_ignored = 0;
};

/// -alpha_t (1 - p_t)^gamma ln(p_t), p clamped to [eps, 1 - eps].
double focal_loss(double p, int p_star, double alpha, double gamma, double eps = 1e-9);

/// UnitBox IoU loss between two (top, right, bottom, left) distance tuples
/// measured from the same point. Throws Error(NonPositiveDistance).
double iou_loss(const std::array<double, 4>& d, const std::array<double, 4>& d_star, double eps = 1e-9);

/// 1 - cos(theta - theta_star).
double angle_loss(double theta, double theta_star);

/// Distances (d1..d4) encoded by a target relative to a prior.
std::array<double, 4> target_distances(const EncodedTarget& t, const AnchorPrior& prior);

/// Forward value of the detection objective over all levels. `targets`
/// holds one (K, 5, H, W) tensor per level as built by encode_targets.
/// Ignored anchors contribute nothing; regression terms are gated on
/// Positive labels. Throws Error(ShapeMismatch) on inconsistent inputs.
LossReport total_loss(std::span<const ScoreMap> scores, std::span<const RegressionMap> regs, const LabelMaps& labels,
                      std::span<const Tensor> targets, const AnchorSet& anchors, const LossConfig& cfg = {});

}  // namespace rotbox
