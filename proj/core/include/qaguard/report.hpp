#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qaguard/evaluation.hpp"
#include "qaguard/strategy.hpp"

namespace qaguard {

struct ChartSeries {
    std::string name;
    std::vector<double> values;  // one per x label
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> x_ticks;  // categorical, evenly spaced
    std::vector<ChartSeries> series;
    double y_min = 0.0;
    double y_max = 100.0;
};

/// Deterministic SVG: identical input gives identical bytes.
std::string render_svg(const LineChart& chart);

/// EM% vs poison level for one context source, one polyline per strategy present.
/// A strategy present at some levels but not others raises IncompleteGridError.
LineChart em_chart(const SweepResult& result, ContextSource source);

/// Writes plots/em_<context_source>.svg for each context source in the result and
/// returns the paths written. Throws ValidationError when the result has no strategies.
std::vector<std::filesystem::path> write_plots(const SweepResult& result,
                                               const std::filesystem::path& dir);

}  // namespace qaguard
