#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "rotbox/eval.hpp"
#include "rotbox/geometry.hpp"
#include "rotbox/postprocess.hpp"

namespace rotbox {

/// Image frame, ground truth quads (green, dashed), detection quads (red)
/// with score labels at D1. Byte-stable for fixed input.
std::string render_svg(int width, int height, std::span<const Detection> dets, std::span<const OrientedBox> gts);

/// Throws Error(IoFailure).
void write_svg(const std::filesystem::path& path, int width, int height, std::span<const Detection> dets,
               std::span<const OrientedBox> gts);

/// Precision-recall curve as a step plot on a unit square.
std::string render_pr_curve_svg(const APResult& result);

}  // namespace rotbox
