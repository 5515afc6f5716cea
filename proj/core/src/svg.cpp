#include "rotbox/svg.hpp"

#include <cstdio>

#include "rotbox/io.hpp"

namespace rotbox {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s(buf);
    if (s == "-0.000") s = "0.000";
    return s;
}

std::string polygon(const OrientedBox& box, const char* style) {
    const QuadCorners q = to_corners(box);
    std::string pts;
    for (std::size_t i = 0; i < 4; ++i) {
        if (i) pts += ' ';
        pts += fmt(q.pts[i].x) + "," + fmt(q.pts[i].y);
    }
    return "  <polygon points=\"" + pts + "\" " + style + "/>\n";
}

}  // namespace

std::string render_svg(int width, int height, std::span<const Detection> dets, std::span<const OrientedBox> gts) {
    const std::string w = std::to_string(width);
    const std::string h = std::to_string(height);
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + w + "\" height=\"" + h + "\" viewBox=\"0 0 " + w +
           " " + h + "\">\n";
    out += "  <rect x=\"0\" y=\"0\" width=\"" + w + "\" height=\"" + h +
           "\" fill=\"white\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (const OrientedBox& g : gts) {
        out += polygon(g, "fill=\"none\" stroke=\"#1a9850\" stroke-width=\"2\" stroke-dasharray=\"4 2\"");
    }
    for (const Detection& d : dets) {
        out += polygon(d.box, "fill=\"none\" stroke=\"#d73027\" stroke-width=\"1.5\"");
        const Vec2 label = to_corners(d.box).pts[0];
        out += "  <text x=\"" + fmt(label.x) + "\" y=\"" + fmt(label.y - 2.0) +
               "\" font-family=\"monospace\" font-size=\"10\" fill=\"#d73027\">" + fmt(d.score()) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

void write_svg(const std::filesystem::path& path, int width, int height, std::span<const Detection> dets,
               std::span<const OrientedBox> gts) {
    write_text_file(path, render_svg(width, height, dets, gts));
}

std::string render_pr_curve_svg(const APResult& result) {
    constexpr double kSize = 400.0;
    constexpr double kPad = 40.0;
    auto px = [](double r) { return fmt(kPad + r * kSize); };
    auto py = [](double p) { return fmt(kPad + (1.0 - p) * kSize); };

    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" viewBox=\"0 0 480 480\">\n";
    out += "  <rect x=\"" + fmt(kPad) + "\" y=\"" + fmt(kPad) + "\" width=\"" + fmt(kSize) + "\" height=\"" +
           fmt(kSize) + "\" fill=\"white\" stroke=\"black\"/>\n";
    std::string path = "M " + px(0.0) + " " + py(1.0);
    for (const PrPoint& p : result.pr_points) path += " L " + px(p.recall) + " " + py(p.precision);
    out += "  <path d=\"" + path + "\" fill=\"none\" stroke=\"#4575b4\" stroke-width=\"2\"/>\n";
    out += "  <text x=\"" + fmt(kPad) + "\" y=\"" + fmt(kPad - 12.0) + "\" font-family=\"monospace\" font-size=\"14\">" +
           std::string(to_string(result.method)) + " AP " + fmt(result.ap) + "</text>\n";
    out += "  <text x=\"" + fmt(kPad + kSize / 2.0) + "\" y=\"" + fmt(2.0 * kPad + kSize - 12.0) +
           "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">recall</text>\n";
    out += "</svg>\n";
    return out;
}

}  // namespace rotbox
