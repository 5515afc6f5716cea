#include "rotbox/maps.hpp"

#include <cmath>
#include <string>

#include "rotbox/error.hpp"

namespace rotbox {

namespace {
void expect_dims(const Tensor& t, std::initializer_list<std::size_t> want, const char* what) {
    const auto dims = t.dims();
    bool ok = dims.size() == want.size();
    std::size_t i = 0;
    for (std::size_t d : want) {
        if (ok && dims[i] != d) ok = false;
        ++i;
    }
    if (!ok) throw Error(ErrorCode::ShapeMismatch, std::string(what) + " dims do not match the level grid");
}
}  // namespace

void validate(const ScoreMap& map) {
    if (map.values.ndim() != 3) throw Error(ErrorCode::ShapeMismatch, "score map must be (K, H, W)");
    expect_dims(map.values,
                {map.values.dim(0), static_cast<std::size_t>(map.level.height),
                 static_cast<std::size_t>(map.level.width)},
                "score map");
    for (double v : map.values.data()) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidArgument, "score outside [0, 1]");
    }
}

void validate(const RegressionMap& map) {
    if (map.values.ndim() != 4) throw Error(ErrorCode::ShapeMismatch, "regression map must be (K, 5, H, W)");
    expect_dims(map.values,
                {map.values.dim(0), 5, static_cast<std::size_t>(map.level.height),
                 static_cast<std::size_t>(map.level.width)},
                "regression map");
    for (double v : map.values.data()) {
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite regression value");
    }
}

}  // namespace rotbox
