#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rotbox/anchors.hpp"
#include "rotbox/error.hpp"
#include "rotbox/eval.hpp"
#include "rotbox/geometry.hpp"
#include "rotbox/io.hpp"
#include "rotbox/lasa.hpp"
#include "rotbox/losses.hpp"
#include "rotbox/parallel.hpp"
#include "rotbox/postprocess.hpp"
#include "rotbox/svg.hpp"
#include "rotbox/synth.hpp"

namespace rotbox::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kDegToRad = kPi / 180.0;

// Values shared by config files and flags. Config keys use the field names.
struct Settings {
    double score_thresh = 0.05;
    double final_thresh = 0.3;
    std::size_t pre_nms_topk = 2000;
    double nms_iou = 0.1;
    std::string lasa = "none";

    double alpha = 0.25;
    double gamma = 2.0;
    double lambda_d = 1.0;
    double lambda_a = 10.0;
    double eps = 1e-9;

    double iou_thresh = 0.5;
    std::string ap_method = "voc07";

    std::uint64_t seed = 0;
    std::string anchors;
};

template <class T>
T parse_value(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T v{};
    in >> v;
    if (!in || !(in >> std::ws).eof()) {
        throw Error(ErrorCode::ParseError, "config key '" + key + "': cannot parse '" + value + "'");
    }
    return v;
}

void apply_config(Settings& s, const std::map<std::string, std::string>& cfg) {
    const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters = {
        {"score_thresh", [&](auto& k, auto& v) { s.score_thresh = parse_value<double>(k, v); }},
        {"final_thresh", [&](auto& k, auto& v) { s.final_thresh = parse_value<double>(k, v); }},
        {"pre_nms_topk", [&](auto& k, auto& v) { s.pre_nms_topk = parse_value<std::size_t>(k, v); }},
        {"nms_iou", [&](auto& k, auto& v) { s.nms_iou = parse_value<double>(k, v); }},
        {"lasa", [&](auto&, auto& v) { s.lasa = v; }},
        {"alpha", [&](auto& k, auto& v) { s.alpha = parse_value<double>(k, v); }},
        {"gamma", [&](auto& k, auto& v) { s.gamma = parse_value<double>(k, v); }},
        {"lambda_d", [&](auto& k, auto& v) { s.lambda_d = parse_value<double>(k, v); }},
        {"lambda_a", [&](auto& k, auto& v) { s.lambda_a = parse_value<double>(k, v); }},
        {"eps", [&](auto& k, auto& v) { s.eps = parse_value<double>(k, v); }},
        {"iou_thresh", [&](auto& k, auto& v) { s.iou_thresh = parse_value<double>(k, v); }},
        {"ap_method", [&](auto&, auto& v) { s.ap_method = v; }},
        {"seed", [&](auto& k, auto& v) { s.seed = parse_value<std::uint64_t>(k, v); }},
        {"anchors", [&](auto&, auto& v) { s.anchors = v; }},
    };
    for (const auto& [key, value] : cfg) {
        const auto it = setters.find(key);
        if (it == setters.end()) throw Error(ErrorCode::ParseError, "unknown config key '" + key + "'");
        it->second(key, value);
    }
}

// The config file must be read before flags are parsed so that flags win.
std::optional<std::string> find_config_path(std::span<const std::string> args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].starts_with("--config=")) return args[i].substr(9);
    }
    return std::nullopt;
}

PipelineConfig pipeline_config(const Settings& s) {
    PipelineConfig cfg;
    cfg.score_thresh = s.score_thresh;
    cfg.final_thresh = s.final_thresh;
    cfg.pre_nms_topk = s.pre_nms_topk;
    cfg.nms_iou = s.nms_iou;
    cfg.pattern = parse_pattern(s.lasa);
    validate(cfg);
    return cfg;
}

LossConfig loss_config(const Settings& s) {
    LossConfig cfg{s.alpha, s.gamma, s.lambda_d, s.lambda_a, s.eps};
    validate(cfg);
    return cfg;
}

AnchorSet load_anchors(const Settings& s) {
    return s.anchors.empty() ? default_anchor_set() : read_anchors(s.anchors);
}

OrientedBox parse_box_arg(const std::string& text) {
    std::vector<double> v;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, "box '" + text + "': '" + item + "' is not a number");
        }
    }
    if (v.size() != 5) throw Error(ErrorCode::ParseError, "box '" + text + "' needs cx,cy,w,h,theta_deg");
    if (!(v[2] > 0.0 && v[3] > 0.0) || !std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); })) {
        throw Error(ErrorCode::InvalidBox, "box '" + text + "' must be finite with positive sides");
    }
    if (v[4] < -90.0 || v[4] > 90.0) throw Error(ErrorCode::InvalidBox, "theta_deg must lie in [-90, 90]");
    return canonicalize({v[0], v[1], v[2], v[3], v[4] * kDegToRad});
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
    } else {
        write_text_file(path, text);
    }
}

const AnnotationRecord& find_record(const std::vector<AnnotationRecord>& recs, const std::string& id) {
    for (const auto& r : recs) {
        if (r.image_id == id) return r;
    }
    throw Error(ErrorCode::InvalidArgument, "no annotation record for image '" + id + "'");
}

// Label maps as (K, H, W) tensors: gt index for Positive, -1 Ignored,
// -2 Background.
Tensor label_tensor(const LevelLabels& lv) {
    Tensor t({kPriorsPerGroup, static_cast<std::size_t>(lv.level.height), static_cast<std::size_t>(lv.level.width)});
    for (std::size_t i = 0; i < lv.labels.size(); ++i) {
        const AnchorLabel& l = lv.labels[i];
        t[i] = l.kind == LabelKind::Positive ? l.gt : (l.kind == LabelKind::Ignored ? -1.0 : -2.0);
    }
    return t;
}

// ---------------------------------------------------------------------------

struct Anchors {
    std::string annotations;
    std::string out;
};

int cmd_anchors(const Settings& s, const Anchors& a, std::ostream& out) {
    std::vector<Size2> dims;
    for (const auto& rec : read_annotations(a.annotations)) {
        for (const auto& o : rec.objects) dims.push_back({o.box.w, o.box.h});
    }
    emit(a.out, anchors_to_json(fit_anchor_priors(dims, s.seed)), out);
    return kExitOk;
}

struct Assign {
    std::string annotations;
    std::string out;
};

int cmd_assign(const Settings& s, const Assign& a, std::ostream& out) {
    const AnchorSet anchors = load_anchors(s);
    std::ostringstream summary;
    for (const auto& rec : read_annotations(a.annotations)) {
        const auto boxes = rec.boxes();
        const auto levels = make_levels(rec.width, rec.height);
        const LabelMaps labels = assign(boxes, levels, anchors);
        const auto targets = encode_targets(boxes, labels, anchors);
        const fs::path dir = fs::path(a.out) / rec.image_id;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());

        summary << rec.image_id;
        for (std::size_t li = 0; li < labels.size(); ++li) {
            const std::string name(to_string(labels[li].level.name));
            write_tensor(label_tensor(labels[li]), dir / ("labels_" + name + ".rbk"));
            write_tensor(targets[li], dir / ("targets_" + name + ".rbk"));
            std::size_t pos = 0;
            std::size_t ign = 0;
            for (const auto& l : labels[li].labels) {
                pos += l.kind == LabelKind::Positive;
                ign += l.kind == LabelKind::Ignored;
            }
            summary << ' ' << name << " positive=" << pos << " ignored=" << ign;
        }
        summary << '\n';
    }
    out << summary.str();
    return kExitOk;
}

struct Detect {
    std::vector<std::string> inputs;
    std::string out;
};

int cmd_detect(const Settings& s, const Detect& d, std::ostream& out) {
    const AnchorSet anchors = load_anchors(s);
    const PipelineConfig cfg = pipeline_config(s);
    std::vector<ImageDetections> results(d.inputs.size());
    parallel_for(d.inputs.size(), [&](std::size_t i) {
        const ImageMaps maps = read_image_maps(d.inputs[i]);
        results[i] = {maps.image_id, run_pipeline(maps.scores, maps.regs, anchors, cfg)};
        for (const Detection& det : results[i].detections) {
            if (!is_canonical(det.box) || !(det.score() >= cfg.final_thresh && det.score() <= 1.0)) {
                throw Error(ErrorCode::InvariantViolation, "pipeline produced an out-of-contract detection");
            }
        }
    });
    std::string text;
    for (const auto& r : results) text += format_detections_line(r) + "\n";
    emit(d.out, text, out);
    return kExitOk;
}

struct Loss {
    std::string input;
    std::string annotations;
};

int cmd_loss(const Settings& s, const Loss& l, std::ostream& out) {
    const AnchorSet anchors = load_anchors(s);
    const LossConfig cfg = loss_config(s);
    const ImageMaps maps = read_image_maps(l.input);
    const auto records = read_annotations(l.annotations);
    const AnnotationRecord& rec = find_record(records, maps.image_id);
    if (rec.width != maps.width || rec.height != maps.height) {
        throw Error(ErrorCode::ShapeMismatch, "annotation image size differs from the map metadata");
    }
    const auto boxes = rec.boxes();
    const auto levels = make_levels(rec.width, rec.height);
    const LabelMaps labels = assign(boxes, levels, anchors);
    const auto targets = encode_targets(boxes, labels, anchors);
    out << loss_report_to_json(total_loss(maps.scores, maps.regs, labels, targets, anchors, cfg));
    return kExitOk;
}

struct Eval {
    std::string detections;
    std::string annotations;
    std::string out;
    std::string svg;
};

int cmd_eval(const Settings& s, const Eval& e, std::ostream& out, std::ostream& err) {
    const ApMethod method = parse_ap_method(s.ap_method);
    if (!(s.iou_thresh >= 0.0 && s.iou_thresh <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "iou_thresh must lie in [0, 1]");
    }
    const auto records = read_annotations(e.annotations);
    const auto dets = read_detections(e.detections);

    std::vector<ImageGroundTruth> gts;
    std::vector<ImageDetections> paired;
    std::map<std::string, std::size_t> index;
    for (const auto& r : records) {
        if (!index.emplace(r.image_id, gts.size()).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate annotation record '" + r.image_id + "'");
        }
        gts.push_back(r.ground_truth());
        paired.push_back({r.image_id, {}});
    }
    for (const auto& d : dets) {
        const auto it = index.find(d.image_id);
        if (it == index.end()) {
            throw Error(ErrorCode::InvalidArgument, "detections for unknown image '" + d.image_id + "'");
        }
        auto& slot = paired[it->second].detections;
        slot.insert(slot.end(), d.detections.begin(), d.detections.end());
    }

    const APResult result = evaluate(paired, gts, s.iou_thresh, method);
    const std::string json = ap_result_to_json(result, s.iou_thresh);
    if (!e.out.empty()) write_text_file(e.out, json);
    if (!e.svg.empty()) write_text_file(e.svg, render_pr_curve_svg(result));
    out << json;
    err << "AP " << fixed(result.ap, 4) << " (" << to_string(method) << ", IoU " << fixed(s.iou_thresh, 2) << ")\n";
    return kExitOk;
}

struct Synth {
    int n_boxes = 10;
    int width = 512;
    int height = 512;
    std::string out;
};

int cmd_synth(const Settings& s, const Synth& sy, std::ostream& out) {
    const AnchorSet anchors = load_anchors(s);
    const auto levels = make_levels(sy.width, sy.height);
    const SyntheticScene scene = synth_scene(s.seed, sy.n_boxes, sy.width, sy.height, levels, anchors);
    check_scene_contract(scene.gts);

    const fs::path dir(sy.out);
    write_image_maps(dir, scene.maps());
    const AnnotationRecord rec = scene.annotation();
    write_annotations(dir / "annotations.jsonl", std::span(&rec, 1));
    write_anchors(dir / "anchors.json", anchors);
    out << "wrote " << scene.gts.size() << " boxes to " << dir.string() << '\n';
    return kExitOk;
}

struct Iou {
    std::string box_a;
    std::string box_b;
    bool oracle = false;
    double cell = 0.0;
    int precision = 4;
};

int cmd_iou(const Iou& c, std::ostream& out) {
    const OrientedBox a = parse_box_arg(c.box_a);
    const OrientedBox b = parse_box_arg(c.box_b);
    const double iou = rotated_iou(a, b);
    out << fixed(iou, c.precision) << '\n';
    if (c.oracle) {
        const double cell = c.cell > 0.0 ? c.cell : std::min({a.w, a.h, b.w, b.h}) / 200.0;
        const double ref = raster_iou_oracle(a, b, cell);
        out << "oracle " << fixed(ref, c.precision) << " cell " << fixed(cell, 6) << " diff "
            << fixed(std::abs(iou - ref), 6) << '\n';
    }
    return kExitOk;
}

struct Render {
    std::string annotations;
    std::string detections;
    std::string image_id;
    std::string out;
};

int cmd_render(const Render& r, std::ostream& out) {
    const auto records = read_annotations(r.annotations);
    if (records.empty()) throw Error(ErrorCode::InvalidArgument, "annotation file has no records");
    const AnnotationRecord& rec = r.image_id.empty() ? records.front() : find_record(records, r.image_id);
    std::vector<Detection> dets;
    if (!r.detections.empty()) {
        for (const auto& d : read_detections(r.detections)) {
            if (d.image_id == rec.image_id) dets.insert(dets.end(), d.detections.begin(), d.detections.end());
        }
    }
    emit(r.out, render_svg(rec.width, rec.height, dets, rec.boxes()), out);
    return kExitOk;
}

void add_config_flag(CLI::App* app) {
    // Consumed before parsing; registered so CLI11 accepts and documents it.
    app->add_option("--config", "key=value defaults file (flags override)");
}

void add_pipeline_flags(CLI::App* app, Settings& s) {
    app->add_option("--score-thresh", s.score_thresh, "minimum raw score to decode");
    app->add_option("--final-thresh", s.final_thresh, "minimum final score to report");
    app->add_option("--pre-nms-topk", s.pre_nms_topk, "detections kept per level before NMS");
    app->add_option("--nms-iou", s.nms_iou, "rotated IoU above which NMS suppresses");
    app->add_option("--lasa", s.lasa, "score alignment pattern: none|rect9|diamond5|diamond9|diamond13");
}

void add_anchor_flag(CLI::App* app, Settings& s) {
    app->add_option("--anchors", s.anchors, "anchor set JSON (default: built-in priors)");
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    Settings s;
    CLI::App app{"rotbox: rotated-box detection geometry, anchors, losses, post-processing and evaluation"};
    app.name("rotbox");
    app.require_subcommand(1);
    add_config_flag(&app);

    Anchors anchors_args;
    auto* anchors_cmd = app.add_subcommand("anchors", "fit 15 anchor priors from annotations");
    anchors_cmd->add_option("--annotations", anchors_args.annotations, "annotation JSONL")->required();
    anchors_cmd->add_option("--seed", s.seed, "k-means seed");
    anchors_cmd->add_option("--out", anchors_args.out, "output JSON (default: stdout)");
    add_config_flag(anchors_cmd);

    Assign assign_args;
    auto* assign_cmd = app.add_subcommand("assign", "write label and target maps for annotated images");
    assign_cmd->add_option("--annotations", assign_args.annotations, "annotation JSONL")->required();
    assign_cmd->add_option("--out", assign_args.out, "output directory")->required();
    add_anchor_flag(assign_cmd, s);
    add_config_flag(assign_cmd);

    Detect detect_args;
    auto* detect_cmd = app.add_subcommand("detect", "decode, align and suppress head outputs");
    detect_cmd->add_option("--input", detect_args.inputs, "map directory (repeatable)")->required();
    detect_cmd->add_option("--out", detect_args.out, "detections JSONL (default: stdout)");
    add_anchor_flag(detect_cmd, s);
    add_pipeline_flags(detect_cmd, s);
    add_config_flag(detect_cmd);

    Loss loss_args;
    auto* loss_cmd = app.add_subcommand("loss", "evaluate the training objective on head outputs");
    loss_cmd->add_option("--input", loss_args.input, "map directory")->required();
    loss_cmd->add_option("--annotations", loss_args.annotations, "annotation JSONL")->required();
    loss_cmd->add_option("--alpha", s.alpha, "focal alpha");
    loss_cmd->add_option("--gamma", s.gamma, "focal gamma");
    loss_cmd->add_option("--lambda-d", s.lambda_d, "distance loss weight");
    loss_cmd->add_option("--lambda-a", s.lambda_a, "angle loss weight");
    loss_cmd->add_option("--eps", s.eps, "log / IoU stabilizer");
    add_anchor_flag(loss_cmd, s);
    add_config_flag(loss_cmd);

    Eval eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "average precision of detections against annotations");
    eval_cmd->add_option("--detections", eval_args.detections, "detections JSONL")->required();
    eval_cmd->add_option("--annotations", eval_args.annotations, "annotation JSONL")->required();
    eval_cmd->add_option("--iou-thresh", s.iou_thresh, "rotated IoU for a match");
    eval_cmd->add_option("--method", s.ap_method, "voc07|all_points");
    eval_cmd->add_option("--out", eval_args.out, "also write the result JSON here");
    eval_cmd->add_option("--svg", eval_args.svg, "write a PR-curve SVG");
    add_config_flag(eval_cmd);

    Synth synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic scene with ideal head outputs");
    synth_cmd->add_option("--seed", s.seed, "scene seed");
    synth_cmd->add_option("--n-boxes", synth_args.n_boxes, "number of boxes")->check(CLI::NonNegativeNumber);
    synth_cmd->add_option("--width", synth_args.width, "image width")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--height", synth_args.height, "image height")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--out", synth_args.out, "output directory")->required();
    add_anchor_flag(synth_cmd, s);
    add_config_flag(synth_cmd);

    Iou iou_args;
    auto* iou_cmd = app.add_subcommand("iou", "rotated IoU of two boxes given as cx,cy,w,h,theta_deg");
    iou_cmd->add_option("--box-a", iou_args.box_a, "first box")->required();
    iou_cmd->add_option("--box-b", iou_args.box_b, "second box")->required();
    iou_cmd->add_flag("--oracle", iou_args.oracle, "cross-check against the raster oracle");
    iou_cmd->add_option("--cell", iou_args.cell, "oracle cell size (default: min side / 200)");
    iou_cmd->add_option("--precision", iou_args.precision, "digits after the decimal point")->check(CLI::Range(0, 17));
    add_config_flag(iou_cmd);

    Render render_args;
    auto* render_cmd = app.add_subcommand("render", "draw annotations and detections as SVG");
    render_cmd->add_option("--annotations", render_args.annotations, "annotation JSONL")->required();
    render_cmd->add_option("--detections", render_args.detections, "detections JSONL");
    render_cmd->add_option("--image-id", render_args.image_id, "record to draw (default: first)");
    render_cmd->add_option("--out", render_args.out, "output SVG (default: stdout)");
    add_config_flag(render_cmd);

    try {
        if (const auto path = find_config_path(args)) apply_config(s, parse_config(read_text_file(*path)));

        std::vector<std::string> argv(args.rbegin(), args.rend());
        app.parse(argv);

        if (anchors_cmd->parsed()) return cmd_anchors(s, anchors_args, out);
        if (assign_cmd->parsed()) return cmd_assign(s, assign_args, out);
        if (detect_cmd->parsed()) return cmd_detect(s, detect_args, out);
        if (loss_cmd->parsed()) return cmd_loss(s, loss_args, out);
        if (eval_cmd->parsed()) return cmd_eval(s, eval_args, out, err);
        if (synth_cmd->parsed()) return cmd_synth(s, synth_args, out);
        if (iou_cmd->parsed()) return cmd_iou(iou_args, out);
        if (render_cmd->parsed()) return cmd_render(render_args, out);
        err << app.help();
        return kExitInputError;
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "rotbox: " << e.what() << "\n\n" << app.help();
        return kExitInputError;
    } catch (const Error& e) {
        err << "rotbox: " << e.what() << '\n';
        return e.is_input_error() ? kExitInputError : kExitInternalError;
    } catch (const std::exception& e) {
        err << "rotbox: internal error: " << e.what() << '\n';
        return kExitInternalError;
    }
}

}  // namespace rotbox::cli
