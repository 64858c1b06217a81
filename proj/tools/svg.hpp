#pragma once
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

// Minimal SVG line plots: series of (x, y) points, optional markers, ticked axes.
namespace svg {

struct Series {
    std::vector<double> x, y;
    std::string colour = "#1f77b4";
    std::string label;
    bool markers = true;
    bool line = true;
};

inline std::string num(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

class Plot {
public:
    Plot(std::string title, std::string xlabel, std::string ylabel)
        : title_(std::move(title)), xl_(std::move(xlabel)), yl_(std::move(ylabel)) {}
    void add(Series s) { series_.push_back(std::move(s)); }
    void equal_aspect() { equal_ = true; }
    void hline(double y, std::string colour) { hlines_.emplace_back(y, std::move(colour)); }

    void write(const std::string& path) const {
        double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
        for (const auto& s : series_)
            for (std::size_t k = 0; k < s.x.size(); ++k) {
                if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
                x0 = std::min(x0, s.x[k]);
                x1 = std::max(x1, s.x[k]);
                y0 = std::min(y0, s.y[k]);
                y1 = std::max(y1, s.y[k]);
            }
        for (const auto& [y, c] : hlines_) y0 = std::min(y0, y), y1 = std::max(y1, y);
        if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
        if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
        const double px = 0.05 * (x1 - x0), py = 0.05 * (y1 - y0);
        x0 -= px, x1 += px, y0 -= py, y1 += py;
        const double L = 70, T = 40, W = 480, H = 360;
        double w = W, h = H;
        if (equal_) {
            const double s = std::min(W / (x1 - x0), H / (y1 - y0));
            w = s * (x1 - x0);
            h = s * (y1 - y0);
        }
        auto X = [&](double x) { return L + (x - x0) / (x1 - x0) * w; };
        auto Y = [&](double y) { return T + h - (y - y0) / (y1 - y0) * h; };
        std::ostringstream o;
        o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(L + w + 160) << "\" height=\""
          << num(T + h + 60) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        o << "<text x=\"" << num(L) << "\" y=\"20\" font-size=\"14\">" << title_ << "</text>\n";
        o << "<rect x=\"" << num(L) << "\" y=\"" << num(T) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
          << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int k = 0; k <= 4; ++k) {
            const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
            o << "<text x=\"" << num(X(xv)) << "\" y=\"" << num(T + h + 16) << "\" text-anchor=\"middle\">" << num(xv)
              << "</text>\n";
            o << "<text x=\"" << num(L - 6) << "\" y=\"" << num(Y(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
              << "</text>\n";
        }
        o << "<text x=\"" << num(L + w / 2) << "\" y=\"" << num(T + h + 36) << "\" text-anchor=\"middle\">" << xl_
          << "</text>\n";
        o << "<text transform=\"translate(16," << num(T + h / 2) << ") rotate(-90)\" text-anchor=\"middle\">" << yl_
          << "</text>\n";
        for (const auto& [y, c] : hlines_)
            o << "<line x1=\"" << num(L) << "\" x2=\"" << num(L + w) << "\" y1=\"" << num(Y(y)) << "\" y2=\""
              << num(Y(y)) << "\" stroke=\"" << c << "\" stroke-dasharray=\"4 3\"/>\n";
        int legend = 0;
        for (const auto& s : series_) {
            if (s.line && s.x.size() > 1) {
                o << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"1.5\" points=\"";
                for (std::size_t k = 0; k < s.x.size(); ++k)
                    if (std::isfinite(s.y[k])) o << num(X(s.x[k])) << ',' << num(Y(s.y[k])) << ' ';
                o << "\"/>\n";
            }
            if (s.markers)
                for (std::size_t k = 0; k < s.x.size(); ++k)
                    if (std::isfinite(s.y[k]))
                        o << "<circle cx=\"" << num(X(s.x[k])) << "\" cy=\"" << num(Y(s.y[k])) << "\" r=\"3\" fill=\""
                          << s.colour << "\"/>\n";
            if (!s.label.empty()) {
                const double ly = T + 10 + 16 * legend++;
                o << "<line x1=\"" << num(L + w + 12) << "\" x2=\"" << num(L + w + 32) << "\" y1=\"" << num(ly)
                  << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.colour << "\" stroke-width=\"2\"/>\n";
                o << "<text x=\"" << num(L + w + 36) << "\" y=\"" << num(ly + 4) << "\">" << s.label << "</text>\n";
            }
        }
        o << "</svg>\n";
        std::ofstream(path) << o.str();
    }

private:
    std::string title_, xl_, yl_;
    std::vector<Series> series_;
    std::vector<std::pair<double, std::string>> hlines_;
    bool equal_ = false;
};

} // namespace svg
