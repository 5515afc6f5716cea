#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rotbox/error.hpp"
#include "rotbox/lasa.hpp"

namespace rotbox {
namespace {

constexpr std::array<PatternKind, 4> kAll = {PatternKind::Rect9, PatternKind::Diamond5, PatternKind::Diamond9,
                                             PatternKind::Diamond13};

ScoreMap make_map(int h, int w, int k, int stride, auto&& f) {
    const LevelSpec level{LevelName::P2, stride, h, w};
    Tensor t({static_cast<std::size_t>(k), static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
    for (int a = 0; a < k; ++a) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                t[(static_cast<std::size_t>(a) * h + y) * w + x] = f(a, anchor_point(level, y, x));
            }
        }
    }
    return {level, std::move(t)};
}

TEST(Pattern, PointCounts) {
    EXPECT_EQ(SamplingPattern::make(PatternKind::Rect9).local.size(), 9u);
    EXPECT_EQ(SamplingPattern::make(PatternKind::Diamond5).local.size(), 5u);
    EXPECT_EQ(SamplingPattern::make(PatternKind::Diamond9).local.size(), 9u);
    EXPECT_EQ(SamplingPattern::make(PatternKind::Diamond13).local.size(), 13u);
}

TEST(Pattern, CentrallySymmetricAndStrictlyInterior) {
    for (PatternKind kind : kAll) {
        const auto p = SamplingPattern::make(kind);
        Vec2 sum{0, 0};
        for (const Vec2& l : p.local) {
            sum = sum + l;
            EXPECT_LT(std::abs(l.x), 1.0);
            EXPECT_LT(std::abs(l.y), 1.0);
            bool mirrored = false;
            for (const Vec2& m : p.local) mirrored |= std::abs(m.x + l.x) < 1e-15 && std::abs(m.y + l.y) < 1e-15;
            EXPECT_TRUE(mirrored) << to_string(kind);
        }
        EXPECT_NEAR(sum.x, 0, 1e-15);
        EXPECT_NEAR(sum.y, 0, 1e-15);
    }
}

TEST(Pattern, ParseNames) {
    EXPECT_EQ(parse_pattern("none"), std::nullopt);
    for (PatternKind kind : kAll) EXPECT_EQ(parse_pattern(to_string(kind)), kind);
    EXPECT_THROW(parse_pattern("diamond7"), Error);
    EXPECT_THROW(parse_pattern(""), Error);
}

TEST(SamplingPoints, Diamond5Example) {
    const auto pts = sampling_points({30, 20, 8, 4, 0}, SamplingPattern::make(PatternKind::Diamond5));
    const std::vector<Vec2> want = {{30, 20}, {32, 20}, {28, 20}, {30, 21}, {30, 19}};
    ASSERT_EQ(pts.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        EXPECT_NEAR(pts[i].x, want[i].x, 1e-12);
        EXPECT_NEAR(pts[i].y, want[i].y, 1e-12);
    }
}

TEST(SamplingPoints, RotateWithTheBox) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 500; ++i) {
        OrientedBox b = testing::random_box(rng, 4, 100, 0, 300);
        const double phi = testing::uniform(rng, -0.3, 0.3);
        OrientedBox r = b;
        r.theta += phi;
        const double c = std::cos(phi), s = std::sin(phi);
        for (PatternKind kind : kAll) {
            const auto pattern = SamplingPattern::make(kind);
            const auto p0 = sampling_points(b, pattern);
            const auto p1 = sampling_points(r, pattern);
            for (std::size_t j = 0; j < p0.size(); ++j) {
                const double dx = p0[j].x - b.cx, dy = p0[j].y - b.cy;
                ASSERT_NEAR(p1[j].x, b.cx + c * dx - s * dy, 1e-9);
                ASSERT_NEAR(p1[j].y, b.cy + s * dx + c * dy, 1e-9);
                ASSERT_TRUE(contains_point(b, p0[j]));
            }
        }
    }
}

TEST(Bilinear, CellCentersAndMidpoints) {
    const ScoreMap m = make_map(4, 4, 1, 8, [](int, Vec2 p) { return p.x < 16 ? 0.0 : 1.0; });
    EXPECT_EQ(bilinear_sample(m, {4, 4}, 0), 0.0);
    EXPECT_EQ(bilinear_sample(m, {20, 12}, 0), 1.0);
    EXPECT_DOUBLE_EQ(bilinear_sample(m, {16, 12}, 0), 0.5);
    // Clamped to the edge outside the grid.
    EXPECT_EQ(bilinear_sample(m, {-50, -50}, 0), 0.0);
    EXPECT_EQ(bilinear_sample(m, {500, 500}, 0), 1.0);
}

TEST(Bilinear, UsesTheRequestedAnchorChannel) {
    const ScoreMap m = make_map(3, 3, 5, 4, [](int a, Vec2) { return 0.1 * a; });
    for (int k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(bilinear_sample(m, {5.3, 7.1}, k), 0.1 * k);
}

TEST(AlignScore, ConstantMapPassesThrough) {
    std::mt19937_64 rng(6);
    for (double c : {0.0, 0.37, 1.0}) {
        const ScoreMap m = make_map(16, 16, 1, 4, [c](int, Vec2) { return c; });
        for (int i = 0; i < 100; ++i) {
            const OrientedBox b = testing::random_box(rng, 2, 80, -20, 84);
            for (PatternKind kind : kAll) ASSERT_EQ(align_score(b, 0, m, SamplingPattern::make(kind)), c);
        }
    }
}

TEST(AlignScore, AffineFieldGivesCenterValue) {
    const double a = 0.0015, bb = -0.001, c = 0.5;
    auto f = [&](Vec2 p) { return a * p.x + bb * p.y + c; };
    const ScoreMap m = make_map(64, 64, 1, 4, [&](int, Vec2 p) { return f(p); });
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        // Keep every sample inside the interior of the grid.
        const OrientedBox b = testing::random_box(rng, 2, 60, 50, 206);
        for (PatternKind kind : kAll) {
            ASSERT_NEAR(align_score(b, 0, m, SamplingPattern::make(kind)), f(b.center()), 1e-6) << to_string(kind);
        }
    }
}

TEST(AlignScore, GtShapedRegion) {
    const OrientedBox gt{120, 100, 80, 40, 0.3};
    const ScoreMap m = make_map(64, 64, 1, 4, [&](int, Vec2 p) { return contains_point(gt, p) ? 1.0 : 0.0; });
    for (PatternKind kind : kAll) {
        const auto pattern = SamplingPattern::make(kind);
        EXPECT_NEAR(align_score(gt, 0, m, pattern), 1.0, 1e-12);
        OrientedBox away = gt;
        away.cx = 40;
        away.cy = 220;
        EXPECT_NEAR(align_score(away, 0, m, pattern), 0.0, 1e-12);
    }
}

TEST(AlignScore, BoundedAndMonotone) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> base(20 * 20), bump(20 * 20);
        for (auto& v : base) v = testing::uniform(rng, 0, 0.8);
        for (auto& v : bump) v = testing::uniform(rng, 0, 0.2);
        const LevelSpec level{LevelName::P3, 8, 20, 20};
        std::vector<double> raised(base.size());
        for (std::size_t i = 0; i < base.size(); ++i) raised[i] = base[i] + bump[i];
        const ScoreMap lo{level, Tensor({1, 20, 20}, base)};
        const ScoreMap hi{level, Tensor({1, 20, 20}, raised)};
        const double mn = *std::min_element(base.begin(), base.end());
        const double mx = *std::max_element(base.begin(), base.end());
        for (int i = 0; i < 20; ++i) {
            const OrientedBox b = testing::random_box(rng, 4, 120, -10, 170);
            for (PatternKind kind : kAll) {
                const auto pattern = SamplingPattern::make(kind);
                const double s = align_score(b, 0, lo, pattern);
                ASSERT_GE(s, mn);
                ASSERT_LE(s, mx);
                ASSERT_GE(align_score(b, 0, hi, pattern), s);
            }
        }
    }
}

TEST(AlignScore, SubPixelShiftsAreContinuous) {
    std::mt19937_64 rng(9);
    std::vector<double> vals(32 * 32);
    for (auto& v : vals) v = testing::uniform(rng, 0, 1);
    const ScoreMap m{{LevelName::P2, 4, 32, 32}, Tensor({1, 32, 32}, vals)};
    // Bilinear slope is at most 1/stride per pixel, so a step of delta moves
    // the mean by at most delta / stride * sqrt(2).
    const double delta = 0.01;
    for (PatternKind kind : kAll) {
        const auto pattern = SamplingPattern::make(kind);
        OrientedBox b{60, 60, 30, 14, 0.2};
        double prev = align_score(b, 0, m, pattern);
        for (int i = 1; i <= 200; ++i) {
            b.cx = 60 + i * delta;
            b.cy = 60 + 0.5 * i * delta;
            const double s = align_score(b, 0, m, pattern);
            ASSERT_LE(std::abs(s - prev), delta / 4 * 1.5 + 1e-12);
            prev = s;
        }
    }
}

}  // namespace
}  // namespace rotbox
