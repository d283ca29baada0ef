#include <flockadapt/svg_plot.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <locale>
#include <sstream>

namespace flockadapt {

namespace {

constexpr double width = 800.0;
constexpr double height = 480.0;
constexpr double left = 80.0;
constexpr double right = 180.0;
constexpr double top = 40.0;
constexpr double bottom = 56.0;

constexpr std::array<const char*, 8> palette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s)
{
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
            out.push_back(c);
        }
    }
    return out;
}

std::string num(double v)
{
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
}

std::string tick_label(double v)
{
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(4);
    os << (std::abs(v) < 1e-12 ? 0.0 : v);
    return os.str();
}

// "Nice" tick step covering span with roughly `count` intervals.
double nice_step(double span, int count)
{
    const double raw = span / count;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            return m * mag;
        }
    }
    return 10.0 * mag;
}

struct Range
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v)
    {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void settle()
    {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
            const double pad = std::max(1e-6, 0.05 * std::abs(hi));
            lo -= pad;
            hi += pad;
        }
    }
};

} // namespace

std::string render_svg(const Chart& chart)
{
    Range xr;
    Range yr;
    for (const Series& s : chart.series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (std::isfinite(s.y[i])) {
                xr.add(s.x[i]);
                yr.add(s.y[i]);
            }
        }
    }
    xr.settle();
    yr.settle();
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    auto sx = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto sy = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
       << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
       << escape(chart.title) << "</text>\n";

    // grid and ticks
    const double xs = nice_step(xr.hi - xr.lo, 8);
    for (double v = std::ceil(xr.lo / xs) * xs; v <= xr.hi + 1e-9 * xs; v += xs) {
        os << "<line x1=\"" << num(sx(v)) << "\" y1=\"" << num(top) << "\" x2=\"" << num(sx(v)) << "\" y2=\""
           << num(top + ph) << "\" stroke=\"#e5e5e5\"/>\n";
        os << "<text x=\"" << num(sx(v)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
           << tick_label(v) << "</text>\n";
    }
    const double ys = nice_step(yr.hi - yr.lo, 6);
    for (double v = std::ceil(yr.lo / ys) * ys; v <= yr.hi + 1e-9 * ys; v += ys) {
        os << "<line x1=\"" << num(left) << "\" y1=\"" << num(sy(v)) << "\" x2=\"" << num(left + pw) << "\" y2=\""
           << num(sy(v)) << "\" stroke=\"#e5e5e5\"/>\n";
        os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(v) + 4) << "\" text-anchor=\"end\">"
           << tick_label(v) << "</text>\n";
    }
    os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(height - 12) << "\" text-anchor=\"middle\">"
       << escape(chart.x_label) << "</text>\n";
    os << "<text transform=\"translate(18 " << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(chart.y_label) << "</text>\n";

    for (std::size_t c = 0; c < chart.series.size(); ++c) {
        const Series& s = chart.series[c];
        const char* colour = palette[c % palette.size()];
        std::string d;
        bool pen = false;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.y[i])) {
                pen = false;
                continue;
            }
            d += (pen ? " L" : " M") + num(sx(s.x[i])) + ' ' + num(sy(s.y[i]));
            pen = true;
        }
        if (!d.empty()) {
            os << "<path d=\"" << d.substr(1) << "\" fill=\"none\" stroke=\"" << colour
               << "\" stroke-width=\"1.5\"/>\n";
        }
        const double ly = top + 10 + 18.0 * static_cast<double>(c);
        os << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw + 34)
           << "\" y2=\"" << num(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << num(left + pw + 40) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.name)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::vector<Chart> trace_charts(const Trace& trace)
{
    std::vector<double> t;
    for (const TraceSample& s : trace.samples) {
        t.push_back(s.time);
    }
    auto column = [&](auto&& get) {
        std::vector<double> out;
        out.reserve(trace.samples.size());
        for (const TraceSample& s : trace.samples) {
            out.push_back(get(s));
        }
        return out;
    };

    Chart errors{"Phase shift errors", "time (s)", "shift - desired copy (rad)", {}};
    Chart speeds{"Linear speeds", "time (s)", "speed (m/s)", {}};
    Chart copies{"Desired shift copies", "time (s)", "desired shift (rad)", {}};
    Chart energy{"Pattern error E and potential V", "time (s)", "value", {}};

    for (std::size_t k = 0; k < trace.edges.size(); ++k) {
        const TraceEdge& e = trace.edges[k];
        const std::string tail = std::to_string(e.tail);
        const std::string head = std::to_string(e.head);
        errors.series.push_back({e.label() + " @" + tail, t, column([&](const TraceSample& s) {
                                     return wrap_angle(s.shift[k] - s.desired_tail[k]);
                                 })});
        errors.series.push_back({e.label() + " @" + head, t, column([&](const TraceSample& s) {
                                     return wrap_angle(s.shift[k] - s.desired_head[k]);
                                 })});
        copies.series.push_back(
            {e.label() + " @" + tail, t, column([&](const TraceSample& s) { return s.desired_tail[k]; })});
        copies.series.push_back(
            {e.label() + " @" + head, t, column([&](const TraceSample& s) { return s.desired_head[k]; })});
    }
    for (std::size_t i = 0; i < trace.agents.size(); ++i) {
        speeds.series.push_back({"agent " + std::to_string(trace.agents[i]), t,
                                 column([&](const TraceSample& s) { return s.speed[i]; })});
    }
    energy.series.push_back({"E", t, column([](const TraceSample& s) { return s.e; })});
    energy.series.push_back({"V", t, column([](const TraceSample& s) { return s.v; })});
    return {errors, speeds, copies, energy};
}

std::vector<std::filesystem::path> write_trace_plots(const Trace& trace, const std::filesystem::path& dir)
{
    static const char* names[] = {"phase_errors.svg", "speeds.svg", "desired_copies.svg", "energy.svg"};
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
    std::vector<std::filesystem::path> written;
    const std::vector<Chart> charts = trace_charts(trace);
    for (std::size_t c = 0; c < charts.size(); ++c) {
        const std::filesystem::path path = dir / names[c];
        std::ofstream out(path, std::ios::binary);
        out << render_svg(charts[c]);
        if (!out) {
            throw IoError("cannot write " + path.string());
        }
        written.push_back(path);
    }
    return written;
}

} // namespace flockadapt
