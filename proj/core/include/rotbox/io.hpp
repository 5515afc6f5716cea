#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rotbox/anchors.hpp"
#include "rotbox/eval.hpp"
#include "rotbox/losses.hpp"
#include "rotbox/maps.hpp"
#include "rotbox/tensor.hpp"

namespace rotbox {

// ---------------------------------------------------------------------------
// Tensor container
//
//   offset  size        field
//   0       4           magic "RBK1"
//   4       4           ndim, uint32 little-endian
//   8       4 * ndim    dims, uint32 little-endian
//   ...     4 * prod    payload, float32 little-endian, row-major
//
// Nothing may follow the payload.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMaxTensorDims = 8;

std::vector<std::uint8_t> encode_tensor(const Tensor& t);

/// Throws Error(BadMagic | Truncated | DimOverflow | TrailingBytes).
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// ---------------------------------------------------------------------------
// Annotations: one JSON object per line,
//   {"image_id": "...", "width": W, "height": H,
//    "objects": [{"cx":..,"cy":..,"w":..,"h":..,"theta_deg":..,"difficult":false}]}
// Angles within [-90, 90] degrees are accepted and normalized into (-45, 45].
// ---------------------------------------------------------------------------

struct AnnotationRecord {
    std::string image_id;
    int width = 0;
    int height = 0;
    std::vector<GtObject> objects;

    ImageGroundTruth ground_truth() const { return {image_id, objects}; }
    std::vector<OrientedBox> boxes() const;
};

/// Throws Error(ParseError).
AnnotationRecord parse_annotation_line(std::string_view line);
std::string format_annotation_line(const AnnotationRecord& rec);

/// Blank lines are skipped; errors name the offending line.
std::vector<AnnotationRecord> parse_annotations(std::string_view text);
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path, std::span<const AnnotationRecord> records);

// ---------------------------------------------------------------------------
// Detections: one JSON object per image,
//   {"image_id": "...", "detections": [{"cx":..,"cy":..,"w":..,"h":..,
//     "theta_deg":..,"score":..,"score_raw":..,"level":..,"y":..,"x":..,"anchor":..}]}
// ---------------------------------------------------------------------------

std::string format_detections_line(const ImageDetections& dets);
ImageDetections parse_detections_line(std::string_view line);
std::vector<ImageDetections> parse_detections(std::string_view text);
std::vector<ImageDetections> read_detections(const std::filesystem::path& path);
void write_detections(const std::filesystem::path& path, std::span<const ImageDetections> dets);

// ---------------------------------------------------------------------------
// Anchor sets
//   {"priors": [{"w":..,"h":..,"group":0}, ...15], "group_boundaries": [a, b]}
// ---------------------------------------------------------------------------

std::string anchors_to_json(const AnchorSet& set);
AnchorSet anchors_from_json(std::string_view text);
AnchorSet read_anchors(const std::filesystem::path& path);
void write_anchors(const std::filesystem::path& path, const AnchorSet& set);

std::string ap_result_to_json(const APResult& r, double iou_thresh);
std::string loss_report_to_json(const LossReport& r);

// ---------------------------------------------------------------------------
// Map directories: scores_<level>.rbk (K, H, W) and regs_<level>.rbk
// (K, 5, H, W) for P2, P3 and P4, plus image.json {"image_id", "width",
// "height"}.
// ---------------------------------------------------------------------------

struct ImageMaps {
    std::string image_id;
    int width = 0;
    int height = 0;
    std::vector<ScoreMap> scores;
    std::vector<RegressionMap> regs;
};

void write_image_maps(const std::filesystem::path& dir, const ImageMaps& maps);
ImageMaps read_image_maps(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Config files: `key = value` per line, `#` starts a comment.
// ---------------------------------------------------------------------------

std::map<std::string, std::string> parse_config(std::string_view text);

}  // namespace rotbox
