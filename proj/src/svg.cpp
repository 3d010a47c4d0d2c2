#include "cmflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cmflow::svg {

namespace {

struct Rgb {
    int r, g, b;
};

// small viridis-like ramp
Rgb colormap(double t) {
    static const Rgb stops[] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    int i = std::min(3, static_cast<int>(t));
    double f = t - i;
    return {static_cast<int>(stops[i].r + f * (stops[i + 1].r - stops[i].r)),
            static_cast<int>(stops[i].g + f * (stops[i + 1].g - stops[i].g)),
            static_cast<int>(stops[i].b + f * (stops[i + 1].b - stops[i].b))};
}

std::string hex(const Rgb& c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

}  // namespace

void render_heatmap(const std::string& path, int mesh, const std::vector<double>& values,
                    const std::string& title) {
    if (static_cast<int>(values.size()) != mesh * mesh)
        throw std::invalid_argument("svg heatmap: size mismatch");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : values)
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!std::isfinite(lo)) { lo = 0.0; hi = 1.0; }
    const double span = hi > lo ? hi - lo : 1.0;

    const int plot = 500, margin = 40;
    const double cell = static_cast<double>(plot) / mesh;
    std::ostringstream out;
    out.precision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot + 2 * margin
        << "\" height=\"" << plot + 2 * margin + 20 << "\">\n";
    if (!title.empty())
        out << "<text x=\"" << margin << "\" y=\"20\" font-size=\"14\">" << title
            << "</text>\n";
    for (int iy = 0; iy < mesh; ++iy)
        for (int ix = 0; ix < mesh; ++ix) {
            double v = values[static_cast<std::size_t>(iy) * mesh + ix];
            std::string color = std::isfinite(v) ? hex(colormap((v - lo) / span)) : "#808080";
            double x = margin + ix * cell;
            double y = margin + plot - (iy + 1) * cell;  // y axis upward
            out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell + 0.5
                << "\" height=\"" << cell + 0.5 << "\" fill=\"" << color << "\"/>\n";
        }
    out << "<text x=\"" << margin << "\" y=\"" << plot + 2 * margin + 12
        << "\" font-size=\"12\">range [" << lo << ", " << hi << "]</text>\n";
    out << "</svg>\n";

    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write " + path);
    file << out.str();
}

void render_curve(const std::string& path, const std::vector<double>& x,
                  const std::vector<double>& y, bool log_y, const std::string& title) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("svg curve: bad input");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
        if (log_y && y[i] <= 0.0) continue;
        xs.push_back(x[i]);
        ys.push_back(log_y ? std::log10(y[i]) : y[i]);
    }
    if (xs.empty()) throw std::invalid_argument("svg curve: no plottable points");
    double x0 = *std::min_element(xs.begin(), xs.end());
    double x1 = *std::max_element(xs.begin(), xs.end());
    double y0 = *std::min_element(ys.begin(), ys.end());
    double y1 = *std::max_element(ys.begin(), ys.end());
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;

    const int w = 560, h = 400, margin = 50;
    auto px = [&](double v) { return margin + (v - x0) / (x1 - x0) * (w - 2 * margin); };
    auto py = [&](double v) { return h - margin - (v - y0) / (y1 - y0) * (h - 2 * margin); };

    std::ostringstream out;
    out.precision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n";
    if (!title.empty())
        out << "<text x=\"" << margin << "\" y=\"20\" font-size=\"14\">" << title
            << "</text>\n";
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << w - 2 * margin
        << "\" height=\"" << h - 2 * margin << "\" fill=\"none\" stroke=\"#000\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) out << px(xs[i]) << ',' << py(ys[i]) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << margin << "\" y=\"" << h - 10 << "\" font-size=\"12\">x: [" << x0
        << ", " << x1 << "]  " << (log_y ? "log10(y)" : "y") << ": [" << y0 << ", " << y1
        << "]</text>\n";
    out << "</svg>\n";

    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write " + path);
    file << out.str();
}

}  // namespace cmflow::svg
