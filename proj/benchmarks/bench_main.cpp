#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "rotbox/anchors.hpp"
#include "rotbox/lasa.hpp"
#include "rotbox/postprocess.hpp"
#include "rotbox/synth.hpp"

namespace {

using namespace rotbox;

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

OrientedBox random_box(std::mt19937_64& rng, double field) {
    return {uniform(rng, 0, field), uniform(rng, 0, field), uniform(rng, 4, 80), uniform(rng, 4, 80),
            uniform(rng, -kQuarterPi, kQuarterPi)};
}

void BM_RotatedIou(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::vector<std::pair<OrientedBox, OrientedBox>> pairs;
    for (int i = 0; i < 1024; ++i) {
        OrientedBox a = random_box(rng, 100);
        OrientedBox b = random_box(rng, 100);
        pairs.emplace_back(a, b);
    }
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& [a, b] = pairs[i++ & 1023];
        benchmark::DoNotOptimize(rotated_iou(a, b));
    }
}
BENCHMARK(BM_RotatedIou);

void BM_Nms(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::vector<Detection> dets;
    for (int i = 0; i < state.range(0); ++i) {
        const double s = uniform(rng, 0, 1);
        dets.push_back({random_box(rng, 600), s, s, {0, i, 0, 0}});
    }
    for (auto _ : state) benchmark::DoNotOptimize(rotated_nms(dets, 0.1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Nms)->Arg(100)->Arg(500)->Arg(2000);

void BM_AlignScore(benchmark::State& state) {
    const auto kind = static_cast<PatternKind>(state.range(0));
    std::mt19937_64 rng(3);
    const LevelSpec level{LevelName::P2, 4, 128, 128};
    std::vector<double> vals(128 * 128);
    for (auto& v : vals) v = uniform(rng, 0, 1);
    const ScoreMap map{level, Tensor({1, 128, 128}, vals)};
    const SamplingPattern pattern = SamplingPattern::make(kind);
    std::vector<OrientedBox> boxes;
    for (int i = 0; i < 1024; ++i) boxes.push_back(random_box(rng, 512));
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(align_score(boxes[i++ & 1023], 0, map, pattern));
    state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_AlignScore)->DenseRange(0, 3);

void BM_Assign(benchmark::State& state) {
    const AnchorSet anchors = default_anchor_set();
    const auto levels = make_levels(512, 512);
    const SyntheticScene scene = synth_scene(4, static_cast<int>(state.range(0)), 512, 512, levels, anchors);
    for (auto _ : state) benchmark::DoNotOptimize(assign(scene.gts, levels, anchors));
}
BENCHMARK(BM_Assign)->Arg(5)->Arg(20);

void BM_Pipeline(benchmark::State& state) {
    const AnchorSet anchors = default_anchor_set();
    const auto levels = make_levels(512, 512);
    const SyntheticScene scene = synth_scene(5, 20, 512, 512, levels, anchors);
    PipelineConfig cfg;
    cfg.pattern = PatternKind::Diamond9;
    for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(scene.scores, scene.regs, anchors, cfg));
}
BENCHMARK(BM_Pipeline);

}  // namespace

BENCHMARK_MAIN();
