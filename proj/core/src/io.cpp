#include "rotbox/io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "rotbox/error.hpp"

namespace rotbox {

using nlohmann::json;

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'R', 'B', 'K', '1'};
constexpr double kRadToDeg = 180.0 / kPi;
constexpr double kDegToRad = kPi / 180.0;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint32_t>(b[off]) | static_cast<std::uint32_t>(b[off + 1]) << 8 |
           static_cast<std::uint32_t>(b[off + 2]) << 16 | static_cast<std::uint32_t>(b[off + 3]) << 24;
}

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

const json& field(const json& obj, const char* key) {
    if (!obj.is_object()) parse_fail("expected a JSON object");
    const auto it = obj.find(key);
    if (it == obj.end()) parse_fail(std::string("missing field '") + key + "'");
    return *it;
}

double number(const json& obj, const char* key) {
    const json& v = field(obj, key);
    if (!v.is_number()) parse_fail(std::string("field '") + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) parse_fail(std::string("field '") + key + "' must be finite");
    return d;
}

int integer(const json& obj, const char* key) {
    const json& v = field(obj, key);
    if (!v.is_number_integer()) parse_fail(std::string("field '") + key + "' must be an integer");
    const auto i = v.get<std::int64_t>();
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
        parse_fail(std::string("field '") + key + "' is out of range");
    }
    return static_cast<int>(i);
}

std::string text(const json& obj, const char* key) {
    const json& v = field(obj, key);
    if (!v.is_string()) parse_fail(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

const json& array(const json& obj, const char* key) {
    const json& v = field(obj, key);
    if (!v.is_array()) parse_fail(std::string("field '") + key + "' must be an array");
    return v;
}

json parse_json(std::string_view s) {
    try {
        return json::parse(s);
    } catch (const json::exception& e) {
        parse_fail(std::string("malformed JSON: ") + e.what());
    }
}

// Box from annotation fields; degrees in [-90, 90] are folded into (-45, 45].
OrientedBox box_from_json(const json& o) {
    const double cx = number(o, "cx");
    const double cy = number(o, "cy");
    const double w = number(o, "w");
    const double h = number(o, "h");
    const double deg = number(o, "theta_deg");
    if (!(w > 0.0 && h > 0.0)) parse_fail("box sides must be positive");
    if (deg < -90.0 || deg > 90.0) parse_fail("theta_deg must lie in [-90, 90]");
    const SizeAngle n = normalize_angle(w, h, deg * kDegToRad);
    OrientedBox box{cx, cy, n.w, n.h, n.theta};
    if (!is_canonical(box)) parse_fail("box is not representable");
    return box;
}

json box_to_json(const OrientedBox& b) {
    return {{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}, {"theta_deg", b.theta * kRadToDeg}};
}

template <class Parse>
auto parse_lines(std::string_view text, Parse parse) {
    std::vector<decltype(parse(std::string_view{}))> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        ++line_no;
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            out.push_back(parse(line));
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
    if (t.ndim() > kMaxTensorDims) throw Error(ErrorCode::DimOverflow, "too many dimensions");
    std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
    put_u32(out, static_cast<std::uint32_t>(t.ndim()));
    for (std::size_t d : t.dims()) {
        if (d > std::numeric_limits<std::uint32_t>::max()) throw Error(ErrorCode::DimOverflow, "dimension too large");
        put_u32(out, static_cast<std::uint32_t>(d));
    }
    out.reserve(out.size() + 4 * t.size());
    for (double v : t.data()) {
        const auto f = static_cast<float>(v);
        if (!std::isfinite(f)) throw Error(ErrorCode::InvalidArgument, "tensor values must be finite float32");
        put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
    return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw Error(ErrorCode::Truncated, "file shorter than the magic");
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw Error(ErrorCode::BadMagic, "magic is not RBK1");
    if (bytes.size() < 8) throw Error(ErrorCode::Truncated, "missing dimension count");
    const std::uint32_t ndim = get_u32(bytes, 4);
    if (ndim > kMaxTensorDims) {
        throw Error(ErrorCode::DimOverflow, "ndim " + std::to_string(ndim) + " exceeds " +
                                                std::to_string(kMaxTensorDims));
    }
    const std::size_t header = 8 + 4 * static_cast<std::size_t>(ndim);
    if (bytes.size() < header) throw Error(ErrorCode::Truncated, "missing dimensions");

    std::vector<std::size_t> dims(ndim);
    std::uint64_t count = 1;
    // Element count is capped so the byte size fits comfortably in memory
    // arithmetic on every platform.
    constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 40;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        dims[i] = get_u32(bytes, 8 + 4 * static_cast<std::size_t>(i));
        if (dims[i] != 0 && count > kMaxElements / dims[i]) {
            throw Error(ErrorCode::DimOverflow, "element count overflows");
        }
        count *= dims[i];
    }
    const std::uint64_t payload = count * 4;
    const std::uint64_t available = bytes.size() - header;
    if (available < payload) {
        throw Error(ErrorCode::Truncated, "payload has " + std::to_string(available) + " bytes, dims require " +
                                              std::to_string(payload));
    }
    if (available > payload) throw Error(ErrorCode::TrailingBytes, "bytes follow the payload");

    std::vector<double> data(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, header + 4 * i)));
    }
    return Tensor(std::move(dims), std::move(data));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return {bytes.begin(), bytes.end()};
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) { write_file_bytes(path, encode_tensor(t)); }

Tensor read_tensor(const std::filesystem::path& path) {
    try {
        return decode_tensor(read_file_bytes(path));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::vector<OrientedBox> AnnotationRecord::boxes() const {
    std::vector<OrientedBox> out;
    out.reserve(objects.size());
    for (const auto& o : objects) out.push_back(o.box);
    return out;
}

AnnotationRecord parse_annotation_line(std::string_view line) {
    const json j = parse_json(line);
    AnnotationRecord rec;
    rec.image_id = text(j, "image_id");
    rec.width = integer(j, "width");
    rec.height = integer(j, "height");
    if (rec.width <= 0 || rec.height <= 0) parse_fail("image width and height must be positive");
    for (const json& o : array(j, "objects")) {
        GtObject obj{box_from_json(o), false};
        if (const auto it = o.find("difficult"); it != o.end()) {
            if (!it->is_boolean()) parse_fail("field 'difficult' must be a boolean");
            obj.difficult = it->get<bool>();
        }
        rec.objects.push_back(obj);
    }
    return rec;
}

std::string format_annotation_line(const AnnotationRecord& rec) {
    json objects = json::array();
    for (const auto& o : rec.objects) {
        json j = box_to_json(o.box);
        j["difficult"] = o.difficult;
        objects.push_back(std::move(j));
    }
    const json j = {{"image_id", rec.image_id}, {"width", rec.width}, {"height", rec.height}, {"objects", objects}};
    return j.dump();
}

std::vector<AnnotationRecord> parse_annotations(std::string_view text) {
    return parse_lines(text, parse_annotation_line);
}

std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
    return parse_annotations(read_text_file(path));
}

void write_annotations(const std::filesystem::path& path, std::span<const AnnotationRecord> records) {
    std::string out;
    for (const auto& r : records) out += format_annotation_line(r) + "\n";
    write_text_file(path, out);
}

std::string format_detections_line(const ImageDetections& dets) {
    json arr = json::array();
    for (const Detection& d : dets.detections) {
        json j = box_to_json(d.box);
        j["score"] = d.score_aligned;
        j["score_raw"] = d.score_raw;
        j["level"] = d.provenance.level;
        j["y"] = d.provenance.y;
        j["x"] = d.provenance.x;
        j["anchor"] = d.provenance.anchor;
        arr.push_back(std::move(j));
    }
    const json j = {{"image_id", dets.image_id}, {"detections", arr}};
    return j.dump();
}

ImageDetections parse_detections_line(std::string_view line) {
    const json j = parse_json(line);
    ImageDetections out;
    out.image_id = text(j, "image_id");
    for (const json& o : array(j, "detections")) {
        Detection d;
        d.box = box_from_json(o);
        d.score_aligned = number(o, "score");
        d.score_raw = o.contains("score_raw") ? number(o, "score_raw") : d.score_aligned;
        if (!(d.score_aligned >= 0.0 && d.score_aligned <= 1.0 && d.score_raw >= 0.0 && d.score_raw <= 1.0)) {
            parse_fail("detection scores must lie in [0, 1]");
        }
        if (o.contains("level")) {
            d.provenance = {integer(o, "level"), integer(o, "y"), integer(o, "x"), integer(o, "anchor")};
        }
        out.detections.push_back(d);
    }
    return out;
}

std::vector<ImageDetections> parse_detections(std::string_view text) {
    return parse_lines(text, parse_detections_line);
}

std::vector<ImageDetections> read_detections(const std::filesystem::path& path) {
    return parse_detections(read_text_file(path));
}

void write_detections(const std::filesystem::path& path, std::span<const ImageDetections> dets) {
    std::string out;
    for (const auto& d : dets) out += format_detections_line(d) + "\n";
    write_text_file(path, out);
}

std::string anchors_to_json(const AnchorSet& set) {
    json priors = json::array();
    for (const auto& p : set.priors) priors.push_back({{"w", p.w}, {"h", p.h}, {"group", p.group}});
    const json j = {{"priors", priors}, {"group_boundaries", {set.group_boundaries[0], set.group_boundaries[1]}}};
    return j.dump(2) + "\n";
}

AnchorSet anchors_from_json(std::string_view s) {
    const json j = parse_json(s);
    AnchorSet set;
    for (const json& p : array(j, "priors")) set.priors.push_back({number(p, "w"), number(p, "h"), integer(p, "group")});
    const json& b = array(j, "group_boundaries");
    if (b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
        parse_fail("group_boundaries must hold two numbers");
    }
    set.group_boundaries = {b[0].get<double>(), b[1].get<double>()};
    try {
        validate_anchor_set(set);
    } catch (const Error& e) {
        parse_fail(e.what());
    }
    return set;
}

AnchorSet read_anchors(const std::filesystem::path& path) {
    try {
        return anchors_from_json(read_text_file(path));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void write_anchors(const std::filesystem::path& path, const AnchorSet& set) {
    write_text_file(path, anchors_to_json(set));
}

std::string ap_result_to_json(const APResult& r, double iou_thresh) {
    json pts = json::array();
    for (const auto& p : r.pr_points) pts.push_back({p.recall, p.precision});
    const json j = {{"ap", r.ap},     {"method", std::string(to_string(r.method))}, {"iou_thresh", iou_thresh},
                    {"n_gt", r.n_gt}, {"n_det", r.n_det},                           {"pr_points", pts}};
    return j.dump(2) + "\n";
}

std::string loss_report_to_json(const LossReport& r) {
    const json j = {{"l_cls", r.l_cls},
                    {"l_dist", r.l_dist},
                    {"l_angle", r.l_angle},
                    {"total", r.total},
                    {"n_cls", r.n_cls},
                    {"n_reg", r.n_reg},
                    {"n_positive", r.n_positive},
                    {"n_background", r.n_background},
                    {"n_ignored", r.n_ignored}};
    return j.dump(2) + "\n";
}

void write_image_maps(const std::filesystem::path& dir, const ImageMaps& maps) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    for (const ScoreMap& s : maps.scores) {
        write_tensor(s.values, dir / ("scores_" + std::string(to_string(s.level.name)) + ".rbk"));
    }
    for (const RegressionMap& r : maps.regs) {
        write_tensor(r.values, dir / ("regs_" + std::string(to_string(r.level.name)) + ".rbk"));
    }
    const json meta = {{"image_id", maps.image_id}, {"width", maps.width}, {"height", maps.height}};
    write_text_file(dir / "image.json", meta.dump(2) + "\n");
}

ImageMaps read_image_maps(const std::filesystem::path& dir) {
    ImageMaps maps;
    const json meta = [&] {
        try {
            return parse_json(read_text_file(dir / "image.json"));
        } catch (const Error& e) {
            throw Error(e.code(), (dir / "image.json").string() + ": " + e.what());
        }
    }();
    try {
        maps.image_id = text(meta, "image_id");
        maps.width = integer(meta, "width");
        maps.height = integer(meta, "height");
    } catch (const Error& e) {
        throw Error(e.code(), (dir / "image.json").string() + ": " + e.what());
    }
    for (const LevelSpec& level : make_levels(maps.width, maps.height)) {
        const std::string name(to_string(level.name));
        ScoreMap s{level, read_tensor(dir / ("scores_" + name + ".rbk"))};
        RegressionMap r{level, read_tensor(dir / ("regs_" + name + ".rbk"))};
        try {
            validate(s);
            validate(r);
        } catch (const Error& e) {
            throw Error(e.code(), dir.string() + " level " + name + ": " + e.what());
        }
        maps.scores.push_back(std::move(s));
        maps.regs.push_back(std::move(r));
    }
    return maps;
}

std::map<std::string, std::string> parse_config(std::string_view text) {
    std::map<std::string, std::string> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            parse_fail("config line " + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) parse_fail("config line " + std::to_string(line_no) + ": empty key");
        out[key] = value;
    }
    return out;
}

}  // namespace rotbox
