#include "rotbox/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "rotbox/error.hpp"
#include "rotbox/parallel.hpp"

namespace rotbox {

namespace {

// Uniform double in [0, 1) from the raw engine output; std distributions
// are not reproducible across standard libraries.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double iou_distance(Size2 a, Size2 b) { return 1.0 - centered_iou(a, b); }

int nearest(Size2 p, const std::vector<Size2>& centroids) {
    int best = 0;
    double best_d = iou_distance(p, centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
        const double d = iou_distance(p, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

std::vector<Size2> kmeanspp_init(std::span<const Size2> data, int k, std::mt19937_64& rng) {
    const std::size_t n = data.size();
    std::vector<Size2> centroids;
    centroids.reserve(static_cast<std::size_t>(k));
    centroids.push_back(data[std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * n))]);

    std::vector<double> d2(n);
    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = iou_distance(data[i], centroids[static_cast<std::size_t>(nearest(data[i], centroids))]);
            d2[i] = d * d;
            total += d2[i];
        }
        std::size_t pick = n - 1;
        if (total <= 0.0) {
            pick = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * n));
        } else {
            const double r = uniform01(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (r < acc) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.push_back(data[pick]);
    }
    return centroids;
}

double assign_step(std::span<const Size2> data, const std::vector<Size2>& centroids, std::vector<int>& assignment) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        assignment[i] = nearest(data[i], centroids);
        total += iou_distance(data[i], centroids[static_cast<std::size_t>(assignment[i])]);
    }
    return total / static_cast<double>(data.size());
}

Clustering lloyd(std::span<const Size2> data, int k, std::uint64_t seed, const KMeansOptions& opts) {
    std::mt19937_64 rng(seed);
    Clustering run;
    run.centroids = kmeanspp_init(data, k, rng);
    run.assignment.assign(data.size(), 0);

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        run.objective.push_back(assign_step(data, run.centroids, run.assignment));

        double max_shift = 0.0;
        for (int c = 0; c < k; ++c) {
            Size2 sum{0.0, 0.0};
            std::size_t count = 0;
            double cost_old = 0.0;
            for (std::size_t i = 0; i < data.size(); ++i) {
                if (run.assignment[i] != c) continue;
                sum.w += data[i].w;
                sum.h += data[i].h;
                cost_old += iou_distance(data[i], run.centroids[static_cast<std::size_t>(c)]);
                ++count;
            }
            if (count == 0) continue;
            const Size2 mean{sum.w / static_cast<double>(count), sum.h / static_cast<double>(count)};
            double cost_new = 0.0;
            for (std::size_t i = 0; i < data.size(); ++i) {
                if (run.assignment[i] == c) cost_new += iou_distance(data[i], mean);
            }
            if (cost_new < cost_old) {
                const Size2 old = run.centroids[static_cast<std::size_t>(c)];
                max_shift = std::max(max_shift, std::hypot(mean.w - old.w, mean.h - old.h));
                run.centroids[static_cast<std::size_t>(c)] = mean;
            }
        }
        if (max_shift < opts.tolerance) break;
    }
    run.objective.push_back(assign_step(data, run.centroids, run.assignment));
    return run;
}

void check_dims(std::span<const Size2> dims) {
    for (const Size2& d : dims) {
        if (!(std::isfinite(d.w) && std::isfinite(d.h) && d.w > 0.0 && d.h > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "object dimensions must be finite and positive");
        }
    }
}

}  // namespace

void validate_anchor_set(const AnchorSet& set) {
    if (set.priors.size() != static_cast<std::size_t>(kNumPriors)) {
        throw Error(ErrorCode::InvalidArgument,
                    "anchor set needs " + std::to_string(kNumPriors) + " priors, got " +
                        std::to_string(set.priors.size()));
    }
    for (std::size_t i = 0; i < set.priors.size(); ++i) {
        const AnchorPrior& p = set.priors[i];
        if (!(std::isfinite(p.w) && std::isfinite(p.h) && p.w > 0.0 && p.h > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "prior " + std::to_string(i) + " has non-positive size");
        }
        if (p.group != static_cast<int>(i) / kPriorsPerGroup) {
            throw Error(ErrorCode::InvalidArgument, "prior " + std::to_string(i) + " is in the wrong group");
        }
    }
    const auto& b = set.group_boundaries;
    if (!(std::isfinite(b[0]) && std::isfinite(b[1]) && b[0] <= b[1])) {
        throw Error(ErrorCode::InvalidArgument, "group boundaries must be finite and ordered");
    }
}

AnchorSet default_anchor_set() {
    constexpr std::array<Size2, kNumPriors> dims = {{
        {12, 12}, {20, 8}, {8, 20}, {28, 10}, {10, 28},
        {32, 32}, {56, 20}, {20, 56}, {80, 28}, {28, 80},
        {96, 96}, {160, 56}, {56, 160}, {220, 72}, {72, 220},
    }};
    AnchorSet set;
    for (int i = 0; i < kNumPriors; ++i) {
        set.priors.push_back({dims[static_cast<std::size_t>(i)].w, dims[static_cast<std::size_t>(i)].h,
                              i / kPriorsPerGroup});
    }
    set.group_boundaries = {600.0, 4000.0};
    return set;
}

std::string_view to_string(LevelName name) {
    switch (name) {
        case LevelName::P2: return "P2";
        case LevelName::P3: return "P3";
        case LevelName::P4: return "P4";
    }
    return "?";
}

LevelName parse_level_name(std::string_view s) {
    if (s == "P2") return LevelName::P2;
    if (s == "P3") return LevelName::P3;
    if (s == "P4") return LevelName::P4;
    throw Error(ErrorCode::InvalidArgument, "unknown level '" + std::string(s) + "'");
}

int level_stride(LevelName name) { return 4 << static_cast<int>(name); }

int level_group(LevelName name) { return static_cast<int>(name); }

std::vector<LevelSpec> make_levels(int image_width, int image_height) {
    if (image_width <= 0 || image_height <= 0) {
        throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
    }
    std::vector<LevelSpec> levels;
    for (LevelName name : {LevelName::P2, LevelName::P3, LevelName::P4}) {
        const int s = level_stride(name);
        levels.push_back({name, s, (image_height + s - 1) / s, (image_width + s - 1) / s});
    }
    return levels;
}

double centered_iou(Size2 a, Size2 b) {
    const double inter = std::min(a.w, b.w) * std::min(a.h, b.h);
    return inter / (a.area() + b.area() - inter);
}

Clustering kmeans_iou(std::span<const Size2> data, int k, std::uint64_t seed, const KMeansOptions& opts) {
    if (k <= 0 || data.size() < static_cast<std::size_t>(k)) {
        throw Error(ErrorCode::InsufficientData,
                    "k-means with k=" + std::to_string(k) + " needs at least k samples, got " +
                        std::to_string(data.size()));
    }
    check_dims(data);
    Clustering best;
    for (int r = 0; r < std::max(1, opts.restarts); ++r) {
        Clustering run = lloyd(data, k, mix_seed(seed, static_cast<std::uint64_t>(r)), opts);
        if (best.objective.empty() || run.objective.back() < best.objective.back()) best = std::move(run);
    }
    return best;
}

AnchorSet fit_anchor_priors(std::span<const Size2> gt_dims, std::uint64_t seed, const KMeansOptions& opts) {
    const std::size_t n = gt_dims.size();
    if (n < static_cast<std::size_t>(kNumPriors)) {
        throw Error(ErrorCode::InsufficientData,
                    "anchor fitting needs at least 15 objects, got " + std::to_string(n));
    }
    check_dims(gt_dims);

    std::vector<Size2> sorted(gt_dims.begin(), gt_dims.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](Size2 a, Size2 b) {
        if (a.area() != b.area()) return a.area() < b.area();
        if (a.w != b.w) return a.w < b.w;
        return a.h < b.h;
    });
    const std::array<std::size_t, 4> cuts = {0, n / 3, 2 * n / 3, n};

    AnchorSet set;
    for (int g = 0; g < kNumGroups; ++g) {
        const auto begin = cuts[static_cast<std::size_t>(g)];
        const auto end = cuts[static_cast<std::size_t>(g) + 1];
        if (end - begin < static_cast<std::size_t>(kPriorsPerGroup)) {
            throw Error(ErrorCode::InsufficientData, "area group " + std::to_string(g) + " has fewer than 5 objects");
        }
        const std::span<const Size2> members(sorted.data() + begin, end - begin);
        Clustering c = kmeans_iou(members, kPriorsPerGroup, mix_seed(seed, 100 + static_cast<std::uint64_t>(g)), opts);
        std::sort(c.centroids.begin(), c.centroids.end(), [](Size2 a, Size2 b) {
            if (a.area() != b.area()) return a.area() < b.area();
            return a.w < b.w;
        });
        for (const Size2& s : c.centroids) set.priors.push_back({s.w, s.h, g});
    }
    for (std::size_t b = 0; b < 2; ++b) {
        const std::size_t cut = cuts[b + 1];
        set.group_boundaries[b] = 0.5 * (sorted[cut - 1].area() + sorted[cut].area());
    }
    return set;
}

LabelMaps assign(std::span<const OrientedBox> gts, std::span<const LevelSpec> levels, const AnchorSet& anchors) {
    validate_anchor_set(anchors);
    LabelMaps maps(levels.size());

    parallel_for(levels.size(), [&](std::size_t li) {
        const LevelSpec& level = levels[li];
        const auto priors = anchors.group(level_group(level.name));
        const std::size_t cells = static_cast<std::size_t>(level.height) * level.width;

        std::vector<double> best_iou(kPriorsPerGroup * cells, -1.0);
        std::vector<int> best_gt(kPriorsPerGroup * cells, -1);

        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            const OrientedBox& gt = gts[gi];
            std::array<double, kPriorsPerGroup> pair_iou{};
            for (int k = 0; k < kPriorsPerGroup; ++k) {
                const AnchorPrior& p = priors[static_cast<std::size_t>(k)];
                pair_iou[static_cast<std::size_t>(k)] = rotated_iou(gt, {gt.cx, gt.cy, p.w, p.h, 0.0});
            }

            const Aabb box = bounding_box(gt);
            const double s = level.stride;
            const int x0 = std::max(0, static_cast<int>(std::ceil((box.min.x - 1e-6) / s - 0.5)));
            const int x1 = std::min(level.width - 1, static_cast<int>(std::floor((box.max.x + 1e-6) / s - 0.5)));
            const int y0 = std::max(0, static_cast<int>(std::ceil((box.min.y - 1e-6) / s - 0.5)));
            const int y1 = std::min(level.height - 1, static_cast<int>(std::floor((box.max.y + 1e-6) / s - 0.5)));

            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    if (!contains_point(gt, anchor_point(level, y, x))) continue;
                    for (int k = 0; k < kPriorsPerGroup; ++k) {
                        const std::size_t idx = (static_cast<std::size_t>(k) * level.height + y) * level.width + x;
                        if (pair_iou[static_cast<std::size_t>(k)] > best_iou[idx]) {
                            best_iou[idx] = pair_iou[static_cast<std::size_t>(k)];
                            best_gt[idx] = static_cast<int>(gi);
                        }
                    }
                }
            }
        }

        LevelLabels out{level, std::vector<AnchorLabel>(kPriorsPerGroup * cells)};
        for (std::size_t i = 0; i < out.labels.size(); ++i) {
            if (best_gt[i] < 0) continue;
            if (best_iou[i] > kPositiveIou) {
                out.labels[i] = {LabelKind::Positive, best_gt[i]};
            } else if (best_iou[i] >= kIgnoreIou) {
                out.labels[i] = {LabelKind::Ignored, -1};
            }
        }
        maps[li] = std::move(out);
    });
    return maps;
}

EncodedTarget encode(const OrientedBox& gt, const AnchorPrior& prior, Vec2 anchor) {
    if (!contains_point(gt, anchor)) {
        throw Error(ErrorCode::AnchorOutsideBox, "cannot encode a target for an anchor point outside its box");
    }
    auto d = side_distances(gt, anchor);
    for (double& di : d) di = std::max(di, kMinTargetDistance);

    const double q = std::clamp(gt.theta / kQuarterPi * 0.5 + 0.5, kAngleProbClamp, 1.0 - kAngleProbClamp);
    EncodedTarget t;
    t.t = {std::log(d[0] / prior.h), std::log(d[1] / prior.w), std::log(d[2] / prior.h), std::log(d[3] / prior.w),
           std::log(q) - std::log1p(-q)};
    return t;
}

double decode_angle(double t0) {
    // 2 * sigmoid(t0) - 1 == tanh(t0 / 2); saturation is pulled back inside
    // the open interval.
    const double theta = std::tanh(0.5 * t0) * kQuarterPi;
    if (theta >= kQuarterPi) return std::nextafter(kQuarterPi, 0.0);
    if (theta <= -kQuarterPi) return std::nextafter(-kQuarterPi, 0.0);
    return theta;
}

OrientedBox decode(const EncodedTarget& target, const AnchorPrior& prior, Vec2 anchor) {
    const auto& t = target.t;
    return from_distance_form({anchor.x, anchor.y, prior.h * std::exp(t[0]), prior.w * std::exp(t[1]),
                               prior.h * std::exp(t[2]), prior.w * std::exp(t[3]), decode_angle(t[4])});
}

std::vector<Tensor> encode_targets(std::span<const OrientedBox> gts, const LabelMaps& labels,
                                   const AnchorSet& anchors) {
    std::vector<Tensor> out;
    out.reserve(labels.size());
    for (const LevelLabels& lv : labels) {
        const LevelSpec& level = lv.level;
        const auto priors = anchors.group(level_group(level.name));
        const auto H = static_cast<std::size_t>(level.height);
        const auto W = static_cast<std::size_t>(level.width);
        Tensor t({kPriorsPerGroup, 5, H, W});
        for (int k = 0; k < kPriorsPerGroup; ++k) {
            for (int y = 0; y < level.height; ++y) {
                for (int x = 0; x < level.width; ++x) {
                    const AnchorLabel& l = lv.at(k, y, x);
                    if (l.kind != LabelKind::Positive) continue;
                    const EncodedTarget e =
                        encode(gts[static_cast<std::size_t>(l.gt)], priors[static_cast<std::size_t>(k)],
                               anchor_point(level, y, x));
                    for (std::size_t c = 0; c < 5; ++c) {
                        t[((static_cast<std::size_t>(k) * 5 + c) * H + y) * W + x] = e.t[c];
                    }
                }
            }
        }
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace rotbox
