#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace leaderaffect::svg {

/// Locale-independent fixed-point number with trailing zeros stripped.
std::string num(double v, int decimals = 2);

std::string escape(std::string_view text);

struct Attr {
    std::string name;
    std::string value;
};
using Attrs = std::vector<Attr>;

/// Minimal append-only SVG writer. Output depends only on the calls made.
class Document {
public:
    Document(double width, double height);

    /// Key/value pairs emitted inside <metadata>.
    void meta(std::string key, std::string value);

    void open_group(const Attrs& attrs = {});
    void close_group();

    void rect(double x, double y, double w, double h, const Attrs& attrs = {});
    void line(double x1, double y1, double x2, double y2, const Attrs& attrs = {});
    void circle(double cx, double cy, double r, const Attrs& attrs = {});
    void polyline(const std::vector<std::pair<double, double>>& pts, const Attrs& attrs = {});
    void polygon(const std::vector<std::pair<double, double>>& pts, const Attrs& attrs = {});
    void text(double x, double y, std::string_view content, const Attrs& attrs = {});

    std::string str() const;

private:
    void element(std::string_view tag, const Attrs& geometry, const Attrs& attrs, std::string_view body = {});

    double width_, height_;
    std::vector<std::pair<std::string, std::string>> meta_;
    std::string body_;
    int depth_ = 1;
};

}  // namespace leaderaffect::svg
