#include "leaderaffect/svg.hpp"

#include "leaderaffect/errors.hpp"
#include "leaderaffect/fsutil.hpp"

#include <cmath>

namespace leaderaffect::svg {

std::string num(double v, int decimals) {
    if (!std::isfinite(v)) throw Error("non-finite coordinate in figure");
    std::string s = format_fixed(v, decimals);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

std::string escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

Document::Document(double width, double height) : width_(width), height_(height) {}

void Document::meta(std::string key, std::string value) { meta_.emplace_back(std::move(key), std::move(value)); }

void Document::element(std::string_view tag, const Attrs& geometry, const Attrs& attrs, std::string_view body) {
    body_.append(static_cast<std::size_t>(depth_) * 2, ' ');
    body_ += '<';
    body_ += tag;
    for (const auto* list : {&geometry, &attrs}) {
        for (const auto& a : *list) body_ += " " + a.name + "=\"" + escape(a.value) + "\"";
    }
    if (body.empty()) {
        body_ += "/>\n";
    } else {
        body_ += ">" + escape(body) + "</" + std::string(tag) + ">\n";
    }
}

void Document::open_group(const Attrs& attrs) {
    body_.append(static_cast<std::size_t>(depth_) * 2, ' ');
    body_ += "<g";
    for (const auto& a : attrs) body_ += " " + a.name + "=\"" + escape(a.value) + "\"";
    body_ += ">\n";
    ++depth_;
}

void Document::close_group() {
    if (depth_ <= 1) throw Error("unbalanced SVG group");
    --depth_;
    body_.append(static_cast<std::size_t>(depth_) * 2, ' ');
    body_ += "</g>\n";
}

void Document::rect(double x, double y, double w, double h, const Attrs& attrs) {
    element("rect", {{"x", num(x)}, {"y", num(y)}, {"width", num(w)}, {"height", num(h)}}, attrs);
}

void Document::line(double x1, double y1, double x2, double y2, const Attrs& attrs) {
    element("line", {{"x1", num(x1)}, {"y1", num(y1)}, {"x2", num(x2)}, {"y2", num(y2)}}, attrs);
}

void Document::circle(double cx, double cy, double r, const Attrs& attrs) {
    element("circle", {{"cx", num(cx)}, {"cy", num(cy)}, {"r", num(r)}}, attrs);
}

namespace {

std::string points(const std::vector<std::pair<double, double>>& pts) {
    std::string s;
    for (const auto& [x, y] : pts) {
        if (!s.empty()) s += ' ';
        s += num(x) + "," + num(y);
    }
    return s;
}

}  // namespace

void Document::polyline(const std::vector<std::pair<double, double>>& pts, const Attrs& attrs) {
    element("polyline", {{"points", points(pts)}}, attrs);
}

void Document::polygon(const std::vector<std::pair<double, double>>& pts, const Attrs& attrs) {
    element("polygon", {{"points", points(pts)}}, attrs);
}

void Document::text(double x, double y, std::string_view content, const Attrs& attrs) {
    element("text", {{"x", num(x)}, {"y", num(y)}}, attrs, content);
}

std::string Document::str() const {
    if (depth_ != 1) throw Error("unclosed SVG group");
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) + "\" height=\"" + num(height_) +
           "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) + "\" font-family=\"Helvetica, Arial, sans-serif\">\n";
    if (!meta_.empty()) {
        out += "  <metadata>\n";
        for (const auto& [k, v] : meta_) {
            out += "    <entry key=\"" + escape(k) + "\" value=\"" + escape(v) + "\"/>\n";
        }
        out += "  </metadata>\n";
    }
    out += "  <rect x=\"0\" y=\"0\" width=\"" + num(width_) + "\" height=\"" + num(height_) + "\" fill=\"#ffffff\"/>\n";
    out += body_;
    out += "</svg>\n";
    return out;
}

}  // namespace leaderaffect::svg
