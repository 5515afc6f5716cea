#pragma once

#include <cstddef>

#include "rotbox/anchors.hpp"
#include "rotbox/tensor.hpp"

namespace rotbox {

/// Post-sigmoid anchor scores of one level, shaped (K, H, W).
struct ScoreMap {
    LevelSpec level;
    Tensor values;

    int num_anchors() const { return static_cast<int>(values.dim(0)); }
    double at(int k, int y, int x) const {
        return values[(static_cast<std::size_t>(k) * level.height + y) * level.width + x];
    }
};

/// Regression outputs of one level, shaped (K, 5, H, W) with channel order
/// t1, t2, t3, t4, t0.
struct RegressionMap {
    LevelSpec level;
    Tensor values;

    int num_anchors() const { return static_cast<int>(values.dim(0)); }
    EncodedTarget at(int k, int y, int x) const {
        EncodedTarget t;
        const auto H = static_cast<std::size_t>(level.height);
        const auto W = static_cast<std::size_t>(level.width);
        for (std::size_t c = 0; c < 5; ++c) {
            t.t[c] = values[((static_cast<std::size_t>(k) * 5 + c) * H + y) * W + x];
        }
        return t;
    }
};

// Both throw Error(ShapeMismatch) on wrong dims and Error(InvalidArgument)
// on values out of range (scores outside [0, 1], non-finite regressions).
void validate(const ScoreMap& map);
void validate(const RegressionMap& map);

}  // namespace rotbox
