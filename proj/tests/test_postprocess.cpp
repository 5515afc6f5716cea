#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "rotbox/error.hpp"
#include "rotbox/postprocess.hpp"

namespace rotbox {
namespace {

struct Maps {
    std::vector<ScoreMap> scores;
    std::vector<RegressionMap> regs;
};

// One P3 level, every score zero, regressions zero.
Maps blank(int h, int w) {
    const LevelSpec level{LevelName::P3, 8, h, w};
    const auto H = static_cast<std::size_t>(h), W = static_cast<std::size_t>(w);
    return {{{level, Tensor({5, H, W})}}, {{level, Tensor({5, 5, H, W})}}};
}

void plant(Maps& m, int k, int y, int x, double score, const EncodedTarget& t) {
    const LevelSpec& l = m.scores[0].level;
    const auto H = static_cast<std::size_t>(l.height), W = static_cast<std::size_t>(l.width);
    m.scores[0].values[(static_cast<std::size_t>(k) * H + y) * W + x] = score;
    for (std::size_t c = 0; c < 5; ++c) m.regs[0].values[((static_cast<std::size_t>(k) * 5 + c) * H + y) * W + x] = t.t[c];
}

Detection det(OrientedBox b, double score, int id) { return {b, score, score, {0, 0, id, 0}}; }

TEST(DecodeMaps, RecoversPlantedBox) {
    const AnchorSet anchors = default_anchor_set();
    Maps m = blank(16, 16);
    const OrientedBox gt{61.5, 70.25, 50, 22, 0.4};
    const LevelSpec& l = m.scores[0].level;
    plant(m, 3, 8, 7, 1.0, encode(gt, anchors.priors[8], anchor_point(l, 8, 7)));
    const auto dets = decode_maps(m.scores, m.regs, anchors, {});
    ASSERT_EQ(dets.size(), 1u);
    EXPECT_TRUE(testing::same_box(dets[0].box, gt, 1e-9));
    EXPECT_EQ(dets[0].provenance, (Provenance{0, 8, 7, 3}));
    EXPECT_EQ(dets[0].score_raw, 1.0);
}

TEST(DecodeMaps, BelowThresholdIsEmpty) {
    Maps m = blank(6, 6);
    for (std::size_t i = 0; i < m.scores[0].values.size(); ++i) m.scores[0].values[i] = 0.049;
    EXPECT_TRUE(decode_maps(m.scores, m.regs, default_anchor_set(), {}).empty());
    PipelineConfig cfg;
    cfg.score_thresh = 0.0;
    EXPECT_EQ(decode_maps(m.scores, m.regs, default_anchor_set(), cfg).size(), 5u * 36u);
}

TEST(DecodeMaps, TopKKeepsHighestScores) {
    Maps m = blank(6, 6);
    plant(m, 0, 1, 1, 0.6, {});
    plant(m, 1, 2, 4, 0.9, {});
    plant(m, 2, 5, 0, 0.7, {});
    PipelineConfig cfg;
    cfg.pre_nms_topk = 2;
    const auto dets = decode_maps(m.scores, m.regs, default_anchor_set(), cfg);
    ASSERT_EQ(dets.size(), 2u);
    // Provenance order.
    EXPECT_EQ(dets[0].score_raw, 0.9);
    EXPECT_EQ(dets[1].score_raw, 0.7);
}

TEST(DecodeMaps, DropsDegenerateDecodes) {
    Maps m = blank(4, 4);
    EncodedTarget huge;
    huge.t = {800, 800, 800, 800, 0};
    plant(m, 0, 0, 0, 0.9, huge);
    EncodedTarget tiny;
    tiny.t = {-800, -800, -800, -800, 0};
    plant(m, 1, 0, 0, 0.9, tiny);
    EXPECT_TRUE(decode_maps(m.scores, m.regs, default_anchor_set(), {}).empty());
}

TEST(DecodeMaps, ShapeMismatch) {
    Maps m = blank(4, 4);
    Maps n = blank(4, 5);
    std::vector<RegressionMap> regs = n.regs;
    try {
        decode_maps(m.scores, regs, default_anchor_set(), {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
    }
    EXPECT_THROW(decode_maps(m.scores, {}, default_anchor_set(), {}), Error);
}

TEST(Nms, IdenticalBoxesKeepTheBest) {
    const OrientedBox b{10, 10, 8, 4, 0.2};
    const std::vector<Detection> in = {det(b, 0.8, 0), det(b, 0.9, 1)};
    const auto out = rotated_nms(in, 0.1);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].score(), 0.9);
}

TEST(Nms, DisjointBoxesAllKept) {
    std::vector<Detection> in;
    for (int i = 0; i < 10; ++i) in.push_back(det({20.0 * i, 0, 8, 4, 0}, 0.1 * i, i));
    const auto out = rotated_nms(in, 0.0);
    ASSERT_EQ(out.size(), 10u);
    for (std::size_t i = 1; i < out.size(); ++i) EXPECT_GT(out[i - 1].score(), out[i].score());
}

TEST(Nms, ChainKeepsEnds) {
    const OrientedBox a{1, 0.5, 2, 1, 0}, b{2, 0.5, 4, 1, 0}, c{3, 0.5, 2, 1, 0};
    ASSERT_NEAR(rotated_iou(a, b), 0.5, 1e-12);
    ASSERT_NEAR(rotated_iou(b, c), 0.5, 1e-12);
    ASSERT_EQ(rotated_iou(a, c), 0.0);
    const std::vector<Detection> in = {det(c, 0.7, 2), det(a, 0.9, 0), det(b, 0.8, 1)};
    const auto out = rotated_nms(in, 0.3);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].box, a);
    EXPECT_EQ(out[1].box, c);
}

TEST(Nms, TiesBreakByProvenance) {
    const OrientedBox b{10, 10, 8, 4, 0};
    const std::vector<Detection> in = {det(b, 0.5, 3), det(b, 0.5, 1), det(b, 0.5, 2)};
    const auto out = rotated_nms(in, 0.5);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].provenance.x, 1);
}

bool same_set(std::vector<Detection> a, std::vector<Detection> b) {
    auto by_prov = [](const Detection& x, const Detection& y) { return x.provenance < y.provenance; };
    std::sort(a.begin(), a.end(), by_prov);
    std::sort(b.begin(), b.end(), by_prov);
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].provenance != b[i].provenance || !(a[i].box == b[i].box)) return false;
    }
    return true;
}

TEST(Nms, MatchesReferenceAndProperties) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<std::size_t>(testing::uniform(rng, 0, 150));
        auto dets = testing::random_detections(rng, n, 200);
        const double thresh = testing::uniform(rng, 0, 0.6);
        const auto out = rotated_nms(dets, thresh);
        const auto ref = testing::reference_nms(dets, thresh);
        ASSERT_EQ(out.size(), ref.size());
        for (std::size_t i = 0; i < out.size(); ++i) ASSERT_EQ(out[i].provenance, ref[i].provenance);
        for (std::size_t i = 0; i < out.size(); ++i) {
            for (std::size_t j = i + 1; j < out.size(); ++j) ASSERT_LE(rotated_iou(out[i].box, out[j].box), thresh);
        }
        const auto again = rotated_nms(out, thresh);
        ASSERT_EQ(again.size(), out.size());
        for (std::size_t i = 0; i < out.size(); ++i) ASSERT_EQ(again[i].provenance, out[i].provenance);
        std::shuffle(dets.begin(), dets.end(), rng);
        ASSERT_TRUE(same_set(rotated_nms(dets, thresh), out));
    }
}

TEST(Pipeline, AdjacentDuplicatesCollapse) {
    const AnchorSet anchors = default_anchor_set();
    Maps m = blank(16, 16);
    const LevelSpec& l = m.scores[0].level;
    const OrientedBox gt{64, 64, 56, 20, 0.1};
    plant(m, 1, 7, 7, 0.9, encode(gt, anchors.priors[6], anchor_point(l, 7, 7)));
    plant(m, 1, 7, 8, 0.8, encode(gt, anchors.priors[6], anchor_point(l, 7, 8)));
    const auto out = run_pipeline(m.scores, m.regs, anchors, {});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].provenance, (Provenance{0, 7, 7, 1}));
    EXPECT_TRUE(testing::same_box(out[0].box, gt, 1e-9));
}

TEST(Pipeline, NoPatternPassesRawScores) {
    std::mt19937_64 rng(42);
    Maps m = blank(12, 12);
    for (std::size_t i = 0; i < m.scores[0].values.size(); ++i) m.scores[0].values[i] = testing::uniform(rng, 0, 1);
    for (std::size_t i = 0; i < m.regs[0].values.size(); ++i) m.regs[0].values[i] = testing::uniform(rng, -1, 1);
    const auto out = run_pipeline(m.scores, m.regs, default_anchor_set(), {});
    ASSERT_FALSE(out.empty());
    for (const auto& d : out) {
        EXPECT_EQ(d.score_aligned, d.score_raw);
        EXPECT_GE(d.score(), 0.3);
    }
}

TEST(Pipeline, AlignedScoresDriveRankingAndThreshold) {
    const AnchorSet anchors = default_anchor_set();
    std::mt19937_64 rng(43);
    Maps m = blank(12, 12);
    for (std::size_t i = 0; i < m.scores[0].values.size(); ++i) m.scores[0].values[i] = testing::uniform(rng, 0, 1);
    for (std::size_t i = 0; i < m.regs[0].values.size(); ++i) m.regs[0].values[i] = testing::uniform(rng, -1, 1);
    PipelineConfig cfg;
    cfg.pattern = PatternKind::Diamond9;
    const auto out = run_pipeline(m.scores, m.regs, anchors, cfg);
    const auto pattern = SamplingPattern::make(PatternKind::Diamond9);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& d = out[i];
        EXPECT_EQ(d.score_aligned, align_score(d.box, d.provenance.anchor, m.scores[0], pattern));
        EXPECT_GE(d.score_aligned, 0.3);
        if (i > 0) EXPECT_TRUE(ranks_before(out[i - 1], d));
    }
}

TEST(Pipeline, DeterministicAcrossRuns) {
    std::mt19937_64 rng(44);
    Maps m = blank(20, 20);
    for (std::size_t i = 0; i < m.scores[0].values.size(); ++i) m.scores[0].values[i] = testing::uniform(rng, 0, 1);
    for (std::size_t i = 0; i < m.regs[0].values.size(); ++i) m.regs[0].values[i] = testing::uniform(rng, -1, 1);
    PipelineConfig cfg;
    cfg.pattern = PatternKind::Rect9;
    const auto a = run_pipeline(m.scores, m.regs, default_anchor_set(), cfg);
    const auto b = run_pipeline(m.scores, m.regs, default_anchor_set(), cfg);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].box, b[i].box);
        EXPECT_EQ(a[i].score_aligned, b[i].score_aligned);
    }
}

TEST(PipelineConfig, Validation) {
    PipelineConfig cfg;
    EXPECT_NO_THROW(validate(cfg));
    cfg.nms_iou = 1.2;
    EXPECT_THROW(validate(cfg), Error);
    cfg = {};
    cfg.score_thresh = -0.1;
    EXPECT_THROW(validate(cfg), Error);
}

}  // namespace
}  // namespace rotbox
