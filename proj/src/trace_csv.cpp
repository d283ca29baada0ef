#include <flockadapt/scenario_io.hpp>
#include <flockadapt/trace_csv.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace flockadapt {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::string agent_prefix(AgentId id)
{
    return "a" + std::to_string(id) + "_";
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, sep)) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

double parse_cell(const std::string& cell, int line)
{
    if (cell.empty()) {
        return nan;
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ParseError(line, 1, "invalid number '" + cell + "'");
    }
    return v;
}

bool parse_agent_column(const std::string& name, AgentId& id, std::string& field)
{
    if (name.size() < 3 || name[0] != 'a') {
        return false;
    }
    const auto underscore = name.find('_');
    if (underscore == std::string::npos) {
        return false;
    }
    auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + underscore, id);
    if (ec != std::errc() || ptr != name.data() + underscore) {
        return false;
    }
    field = name.substr(underscore + 1);
    return true;
}

bool parse_edge(const std::string& label, TraceEdge& edge)
{
    const auto dash = label.find('-', 1);
    if (dash == std::string::npos) {
        return false;
    }
    auto r1 = std::from_chars(label.data(), label.data() + dash, edge.tail);
    auto r2 = std::from_chars(label.data() + dash + 1, label.data() + label.size(), edge.head);
    return r1.ec == std::errc() && r2.ec == std::errc() && r1.ptr == label.data() + dash &&
           r2.ptr == label.data() + label.size();
}

} // namespace

std::string format_csv_number(double value)
{
    if (std::isnan(value)) {
        return {};
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, csv_significant_digits);
    if (ec != std::errc()) {
        throw NumericError("cannot format CSV value");
    }
    return {buf, ptr};
}

double csv_resolution(double value)
{
    if (value == 0.0 || !std::isfinite(value)) {
        return 0.0;
    }
    const double exponent = std::floor(std::log10(std::abs(value)));
    return 0.5 * std::pow(10.0, exponent - (csv_significant_digits - 1));
}

std::vector<std::string> trace_columns(const Trace& trace)
{
    std::vector<std::string> cols{"time_s"};
    for (AgentId id : trace.agents) {
        for (const char* field : {"phase_rad", "rate_radps", "speed_mps", "x_rad"}) {
            cols.push_back(agent_prefix(id) + field);
        }
    }
    for (const TraceEdge& e : trace.edges) {
        cols.push_back("shift_" + e.label() + "_rad");
        cols.push_back("desired_" + e.label() + "_" + std::to_string(e.tail) + "_rad");
        cols.push_back("desired_" + e.label() + "_" + std::to_string(e.head) + "_rad");
    }
    cols.emplace_back("E");
    cols.emplace_back("V");
    return cols;
}

void write_trace_csv(const Trace& trace, std::ostream& out)
{
    out << "# flockadapt trace\n";
    std::istringstream scenario(write_scenario(trace.scenario));
    for (std::string line; std::getline(scenario, line);) {
        out << (line.empty() ? "#" : "# " + line) << "\n";
    }
    for (const std::string& notice : trace.scenario.notices) {
        out << "#! " << notice << "\n";
    }

    const std::vector<std::string> cols = trace_columns(trace);
    for (std::size_t c = 0; c < cols.size(); ++c) {
        out << (c ? "," : "") << cols[c];
    }
    out << "\n";

    for (const TraceSample& s : trace.samples) {
        out << format_csv_number(s.time);
        for (std::size_t i = 0; i < trace.agents.size(); ++i) {
            out << ',' << format_csv_number(s.phase[i]) << ',' << format_csv_number(s.rate[i]) << ','
                << format_csv_number(s.speed[i]) << ',' << format_csv_number(s.x[i]);
        }
        for (std::size_t k = 0; k < trace.edges.size(); ++k) {
            out << ',' << format_csv_number(s.shift[k]) << ',' << format_csv_number(s.desired_tail[k]) << ','
                << format_csv_number(s.desired_head[k]);
        }
        out << ',' << format_csv_number(s.e) << ',' << format_csv_number(s.v) << "\n";
    }
}

void write_trace_csv(const Trace& trace, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write trace file " + path.string());
    }
    write_trace_csv(trace, out);
    if (!out) {
        throw IoError("failed while writing trace file " + path.string());
    }
}

Trace read_trace_csv_text(const std::string& text)
{
    std::istringstream in(text);
    std::string scenario_text;
    std::vector<std::string> notices;
    std::string line;
    int line_no = 0;
    bool have_header = false;
    std::vector<std::string> cols;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.rfind("#!", 0) == 0) {
            notices.push_back(line.size() > 3 ? line.substr(3) : std::string());
        } else if (line.rfind('#', 0) == 0) {
            if (line_no == 1) {
                continue; // banner
            }
            scenario_text += (line.size() > 2 ? line.substr(2) : std::string()) + "\n";
        } else {
            cols = split(line, ',');
            have_header = true;
            break;
        }
    }
    if (!have_header) {
        throw ParseError(line_no, 1, "trace has no column header");
    }

    Trace trace;
    try {
        trace.scenario = load_scenario_text(scenario_text, "trace");
    } catch (const Error& e) {
        throw ValidationError(std::string("trace header does not describe a valid scenario: ") + e.what());
    }
    trace.scenario.notices = notices;

    if (cols.empty() || cols.front() != "time_s") {
        throw ParseError(line_no, 1, "first column must be time_s");
    }
    for (const std::string& name : cols) {
        AgentId id = 0;
        std::string field;
        if (parse_agent_column(name, id, field) && field == "phase_rad") {
            trace.agents.push_back(id);
        }
        if (name.rfind("shift_", 0) == 0 && name.size() > 10) {
            TraceEdge e{};
            if (!parse_edge(name.substr(6, name.size() - 10), e)) {
                throw ParseError(line_no, 1, "malformed edge column '" + name + "'");
            }
            trace.edges.push_back(e);
        }
    }
    if (trace_columns(trace) != cols) {
        throw ParseError(line_no, 1, "column header does not follow the trace layout");
    }

    const std::size_t na = trace.agents.size();
    const std::size_t ne = trace.edges.size();
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const std::vector<std::string> cells = split(line, ',');
        if (cells.size() != cols.size()) {
            throw ParseError(line_no, 1,
                             "expected " + std::to_string(cols.size()) + " cells, got " + std::to_string(cells.size()));
        }
        TraceSample s;
        std::size_t c = 0;
        s.time = parse_cell(cells[c++], line_no);
        for (auto* col : {&s.phase, &s.rate, &s.speed, &s.x, &s.coupling, &s.radius}) {
            col->assign(na, nan);
        }
        for (std::size_t i = 0; i < na; ++i) {
            s.phase[i] = parse_cell(cells[c++], line_no);
            s.rate[i] = parse_cell(cells[c++], line_no);
            s.speed[i] = parse_cell(cells[c++], line_no);
            s.x[i] = parse_cell(cells[c++], line_no);
        }
        s.shift.assign(ne, nan);
        s.desired_tail.assign(ne, nan);
        s.desired_head.assign(ne, nan);
        for (std::size_t k = 0; k < ne; ++k) {
            s.shift[k] = parse_cell(cells[c++], line_no);
            s.desired_tail[k] = parse_cell(cells[c++], line_no);
            s.desired_head[k] = parse_cell(cells[c++], line_no);
        }
        s.e = parse_cell(cells[c++], line_no);
        s.v = parse_cell(cells[c++], line_no);
        s.lyapunov_rate = nan;
        s.adaptation_active =
            trace.scenario.adaptation.active_at(s.time + 1e-9 * trace.scenario.dt, trace.scenario.adaptation_start());
        trace.samples.push_back(std::move(s));
    }
    return trace;
}

Trace read_trace_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open trace file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return read_trace_csv_text(buffer.str());
}

} // namespace flockadapt
