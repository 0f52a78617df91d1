#include "qaguard/report.hpp"

#include <cstdio>
#include <fstream>

#include "qaguard/errors.hpp"

namespace qaguard {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 440;
constexpr double kLeft = 64;
constexpr double kRight = 170;  // room for the legend
constexpr double kTop = 40;
constexpr double kBottom = 56;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(std::string_view s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_svg(const LineChart& chart) {
    if (chart.series.empty()) throw ValidationError("chart has no series");
    if (chart.x_ticks.empty()) throw ValidationError("chart has no x values");
    if (!(chart.y_max > chart.y_min)) throw ValidationError("chart y range is empty");
    for (const auto& s : chart.series) {
        if (s.values.size() != chart.x_ticks.size()) {
            throw ValidationError("series '" + s.name + "' does not match the x axis");
        }
    }

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const auto n = chart.x_ticks.size();
    const auto x_at = [&](std::size_t i) {
        return n == 1 ? kLeft + plot_w / 2 : kLeft + plot_w * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    const auto y_at = [&](double v) {
        const double t = (v - chart.y_min) / (chart.y_max - chart.y_min);
        return kTop + plot_h * (1.0 - t);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
           escape(chart.title) + "</text>\n";

    for (int g = 0; g <= 5; ++g) {
        const double v = chart.y_min + (chart.y_max - chart.y_min) * g / 5.0;
        const double y = y_at(v);
        svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft + plot_w) + "\" y2=\"" +
               num(y) + "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + num(v) +
               "</text>\n";
    }
    for (std::size_t i = 0; i < n; ++i) {
        svg += "<text x=\"" + num(x_at(i)) + "\" y=\"" + num(kTop + plot_h + 18) + "\" text-anchor=\"middle\">" +
               escape(chart.x_ticks[i]) + "</text>\n";
    }
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" + num(kLeft + plot_w) +
           "\" y2=\"" + num(kTop + plot_h) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
           num(kTop + plot_h) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 12) + "\" text-anchor=\"middle\">" +
           escape(chart.x_label) + "</text>\n";
    svg += "<text x=\"16\" y=\"" + num(kTop + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           num(kTop + plot_h / 2) + ")\">" + escape(chart.y_label) + "</text>\n";

    for (std::size_t s = 0; s < chart.series.size(); ++s) {
        const auto& series = chart.series[s];
        const char* color = kPalette[s % std::size(kPalette)];
        std::string points;
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0) points += ' ';
            points += num(x_at(i)) + "," + num(y_at(series.values[i]));
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" +
               points + "\"/>\n";
        for (std::size_t i = 0; i < n; ++i) {
            svg += "<circle cx=\"" + num(x_at(i)) + "\" cy=\"" + num(y_at(series.values[i])) + "\" r=\"3\" fill=\"" +
                   color + "\"/>\n";
        }
        const double ly = kTop + 10 + 20.0 * static_cast<double>(s);
        const double lx = kLeft + plot_w + 16;
        svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 20) + "\" y2=\"" + num(ly) +
               "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + num(lx + 26) + "\" y=\"" + num(ly + 4) + "\">" + escape(series.name) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

LineChart em_chart(const SweepResult& result, ContextSource source) {
    LineChart chart;
    chart.title = "Exact match vs poisoned articles (" + std::string(to_string(source)) + ")";
    chart.x_label = "poison level";
    chart.y_label = "EM (%)";
    const auto levels = result.levels();
    for (const int l : levels) chart.x_ticks.push_back(std::to_string(l));

    for (const auto strategy : kAllStrategies) {
        // the original question has no new contexts; it is drawn as the reference line
        const auto cell_source = is_valid_cell(strategy, source) ? source : ContextSource::original_c;
        if (strategy != Strategy::original && cell_source != source) continue;
        ChartSeries series{std::string(to_string(strategy)), {}};
        std::vector<int> missing;
        for (const int l : levels) {
            const auto it = result.cells.find(CellKey{l, strategy, cell_source});
            if (it == result.cells.end()) {
                missing.push_back(l);
                continue;
            }
            series.values.push_back(it->second.em);
        }
        if (series.values.empty()) continue;
        if (!missing.empty()) {
            std::string msg = std::string(to_string(strategy)) + "/" + std::string(to_string(cell_source)) +
                              " has no result at level";
            for (const int l : missing) msg += " " + std::to_string(l);
            throw IncompleteGridError(msg);
        }
        chart.series.push_back(std::move(series));
    }
    return chart;
}

std::vector<std::filesystem::path> write_plots(const SweepResult& result, const std::filesystem::path& dir) {
    std::vector<ContextSource> sources;
    for (const auto& [key, _] : result.cells) {
        if (key.strategy == Strategy::original) continue;
        if (std::find(sources.begin(), sources.end(), key.context_source) == sources.end()) {
            sources.push_back(key.context_source);
        }
    }
    if (result.cells.empty()) throw ValidationError("no strategies to plot");
    if (sources.empty()) sources.push_back(ContextSource::original_c);
    std::sort(sources.begin(), sources.end());

    const auto plots = dir / "plots";
    std::filesystem::create_directories(plots);
    std::vector<std::filesystem::path> written;
    for (const auto source : sources) {
        const auto chart = em_chart(result, source);
        if (chart.series.empty()) throw ValidationError("no strategies to plot");
        const auto path = plots / ("em_" + std::string(to_string(source)) + ".svg");
        std::ofstream out(path, std::ios::binary);
        const auto svg = render_svg(chart);
        out.write(svg.data(), static_cast<std::streamsize>(svg.size()));
        if (!out) throw Error("cannot write " + path.string());
        written.push_back(path);
    }
    return written;
}

}  // namespace qaguard
