#pragma once

#include <flockadapt/engine.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace flockadapt {

struct Series
{
    std::string name;
    std::vector<double> x;
    std::vector<double> y; ///< NaN breaks the line
};

struct Chart
{
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

std::string render_svg(const Chart& chart);

/// phase_errors, speeds, desired_copies and energy charts for a trace.
std::vector<Chart> trace_charts(const Trace& trace);

/// Writes one SVG per chart into `dir` and returns the paths.
std::vector<std::filesystem::path> write_trace_plots(const Trace& trace, const std::filesystem::path& dir);

} // namespace flockadapt
