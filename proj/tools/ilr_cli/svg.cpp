#include "ilr_cli/svg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace ilr_cli {

namespace {

const std::array<const char*, 10> palette{"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
                                          "#e6ab02", "#a6761d", "#666666", "#1f78b4", "#b2df8a"};

std::string px(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
    return std::string(buf, res.ptr);
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

void open_svg(std::ostringstream& out, double width, double height) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << px(width) << "\" height=\""
        << px(height) << "\" viewBox=\"0 0 " << px(width) << ' ' << px(height) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void text(std::ostringstream& out, double x, double y, const std::string& s, const char* anchor = "middle",
          int size = 12) {
    out << "<text x=\"" << px(x) << "\" y=\"" << px(y) << "\" font-family=\"sans-serif\" font-size=\"" << size
        << "\" text-anchor=\"" << anchor << "\">" << escape(s) << "</text>\n";
}

}

std::string render_compositions(const std::string& title, std::vector<CompositionPanel> panels, std::size_t columns) {
    constexpr double panel_w = 260.0;
    constexpr double panel_h = 180.0;
    constexpr double margin = 30.0;
    columns = std::max<std::size_t>(1, columns);
    const std::size_t rows = (panels.size() + columns - 1) / columns;
    const double width = margin + static_cast<double>(columns) * (panel_w + margin);
    const double height = 2 * margin + static_cast<double>(rows) * (panel_h + 2 * margin);

    std::ostringstream out;
    open_svg(out, width, height);
    text(out, width / 2, margin * 0.8, title, "middle", 14);

    for (std::size_t p = 0; p < panels.size(); ++p) {
        auto& panel = panels[p];
        const double x0 = margin + static_cast<double>(p % columns) * (panel_w + margin);
        const double y0 = 2 * margin + static_cast<double>(p / columns) * (panel_h + 2 * margin);
        text(out, x0 + panel_w / 2, y0 - 6, panel.title);
        out << "<rect x=\"" << px(x0) << "\" y=\"" << px(y0) << "\" width=\"" << px(panel_w) << "\" height=\""
            << px(panel_h) << "\" fill=\"none\" stroke=\"black\"/>\n";

        auto& draws = panel.draws;
        std::stable_sort(draws.begin(), draws.end(), [](const auto& a, const auto& b) {
            return a[a.size() - 1] * b.total() > b[b.size() - 1] * a.total();
        });
        if (draws.empty()) {
            continue;
        }
        const double bar_w = panel_w / static_cast<double>(draws.size());
        for (std::size_t i = 0; i < draws.size(); ++i) {
            const auto& x = draws[i];
            const double total = static_cast<double>(x.total());
            double y = y0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double h = panel_h * static_cast<double>(x[j]) / total;
                if (h > 0.0) {
                    out << "<rect x=\"" << px(x0 + static_cast<double>(i) * bar_w) << "\" y=\"" << px(y)
                        << "\" width=\"" << px(bar_w) << "\" height=\"" << px(h) << "\" fill=\""
                        << palette[j % palette.size()] << "\"/>\n";
                }
                y += h;
            }
        }
    }
    out << "</svg>\n";
    return out.str();
}

std::string render_log_ratio_figure(const std::string& title, const std::string& y_label,
                                    const std::vector<std::string>& x_labels, std::size_t coords,
                                    const std::vector<LogRatioSeries>& series) {
    constexpr double panel_w = 220.0;
    constexpr double panel_h = 260.0;
    constexpr double left = 60.0;
    constexpr double gap = 50.0;
    constexpr double top = 50.0;
    constexpr double legend_h = 18.0;
    const double width = left + static_cast<double>(coords) * (panel_w + gap);
    const double height = top + panel_h + 60.0 + legend_h * static_cast<double>(series.size());

    std::ostringstream out;
    open_svg(out, width, height);
    text(out, width / 2, 22, title, "middle", 14);

    const std::size_t nx = x_labels.size();
    auto x_at = [&](double x0, std::size_t i) {
        return nx <= 1 ? x0 + panel_w / 2 : x0 + 15.0 + (panel_w - 30.0) * static_cast<double>(i) / static_cast<double>(nx - 1);
    };

    for (std::size_t c = 0; c < coords; ++c) {
        const double x0 = left + static_cast<double>(c) * (panel_w + gap);
        // Each coordinate gets its own vertical scale, always including zero.
        double lo = 0.0;
        double hi = 0.0;
        for (const auto& s : series) {
            for (const auto& v : s.values) {
                if (c < v.size() && std::isfinite(v[c])) {
                    lo = std::min(lo, v[c]);
                    hi = std::max(hi, v[c]);
                }
            }
        }
        const double pad = std::max(1e-3, 0.08 * (hi - lo));
        lo -= pad;
        hi += pad;
        auto y_at = [&](double v) { return top + panel_h * (hi - v) / (hi - lo); };

        out << "<rect x=\"" << px(x0) << "\" y=\"" << px(top) << "\" width=\"" << px(panel_w) << "\" height=\""
            << px(panel_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
        text(out, x0 + panel_w / 2, top - 8, "coordinate " + std::to_string(c + 1));
        text(out, x0 - 4, top + 4, px(hi), "end", 10);
        text(out, x0 - 4, top + panel_h, px(lo), "end", 10);

        const double zero_y = y_at(0.0);
        out << "<line x1=\"" << px(x0) << "\" y1=\"" << px(zero_y) << "\" x2=\"" << px(x0 + panel_w) << "\" y2=\""
            << px(zero_y) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
        text(out, x0 + panel_w - 4, zero_y - 4, "perfect correspondence", "end", 9);

        for (std::size_t i = 0; i < nx; ++i) {
            text(out, x_at(x0, i), top + panel_h + 16, x_labels[i], "middle", 9);
        }

        for (std::size_t s = 0; s < series.size(); ++s) {
            const char* colour = palette[s % palette.size()];
            std::string path;
            for (std::size_t i = 0; i < series[s].values.size() && i < nx; ++i) {
                const auto& v = series[s].values[i];
                if (c >= v.size() || !std::isfinite(v[c])) {
                    continue;
                }
                const double x = x_at(x0, i);
                const double y = y_at(v[c]);
                path += (path.empty() ? "M" : " L") + px(x) + ' ' + px(y);
                out << "<circle cx=\"" << px(x) << "\" cy=\"" << px(y) << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
            }
            if (series[s].connected && !path.empty()) {
                out << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << colour << "\"/>\n";
            }
        }
    }

    out << "<text x=\"14\" y=\"" << px(top + panel_h / 2) << "\" font-family=\"sans-serif\" font-size=\"12\" "
        << "text-anchor=\"middle\" transform=\"rotate(-90 14 " << px(top + panel_h / 2) << ")\">" << escape(y_label)
        << "</text>\n";
    text(out, width / 2, top + panel_h + 34, "total count K (or median total)");

    for (std::size_t s = 0; s < series.size(); ++s) {
        const double y = top + panel_h + 52 + legend_h * static_cast<double>(s);
        out << "<circle cx=\"" << px(left) << "\" cy=\"" << px(y - 4) << "\" r=\"4\" fill=\""
            << palette[s % palette.size()] << "\"/>\n";
        text(out, left + 10, y, series[s].name, "start", 11);
    }
    out << "</svg>\n";
    return out.str();
}

}
