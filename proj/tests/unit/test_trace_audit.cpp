#include <flockadapt/audit.hpp>
#include <flockadapt/scenario_io.hpp>
#include <flockadapt/svg_plot.hpp>
#include <flockadapt/trace_csv.hpp>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace flockadapt;
using ::testing::Contains;

namespace {

const std::filesystem::path scenario_dir = FLOCKADAPT_SCENARIO_DIR;

const Trace& cached(const std::string& name)
{
    static std::map<std::string, Trace> traces;
    auto it = traces.find(name);
    if (it == traces.end()) {
        it = traces.emplace(name, run_scenario(load_scenario(scenario_dir / (name + ".scenario")))).first;
    }
    return it->second;
}

std::string csv_of(const Trace& t)
{
    std::ostringstream os;
    write_trace_csv(t, os);
    return os.str();
}

std::size_t first_sample_after(const Trace& t, double time)
{
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        if (t.samples[i].time > time) {
            return i;
        }
    }
    return t.samples.size();
}

} // namespace

TEST(CsvNumber, NineSignificantDigits)
{
    EXPECT_EQ(format_csv_number(2.0943951023931953), "2.0943951");
    EXPECT_EQ(format_csv_number(1.9499540608488373), "1.94995406");
    EXPECT_EQ(format_csv_number(12.0), "12");
    EXPECT_EQ(format_csv_number(-1.5e-12), "-1.5e-12");
    EXPECT_EQ(format_csv_number(std::nan("")), "");
    EXPECT_DOUBLE_EQ(csv_resolution(2.0), 5e-9);
    EXPECT_DOUBLE_EQ(csv_resolution(0.01), 5e-11);
}

TEST(TraceCsv, ColumnLayout)
{
    const Trace& t = cached("canonical_loss3_adapt");
    const std::vector<std::string> cols = trace_columns(t);
    EXPECT_EQ(cols.front(), "time_s");
    EXPECT_EQ(cols[1], "a1_phase_rad");
    EXPECT_EQ(cols[4], "a1_x_rad");
    EXPECT_THAT(cols, Contains("shift_2-4_rad"));
    EXPECT_THAT(cols, Contains("desired_2-4_4_rad"));
    EXPECT_EQ(cols[cols.size() - 2], "E");
    EXPECT_EQ(cols.back(), "V");
    EXPECT_EQ(cols.size(), 1 + 4 * 4 + 4 * 3 + 2u);
}

TEST(TraceCsv, HeaderCarriesScenarioAndEmptyCellsForAbsentAgents)
{
    const Trace& t = cached("canonical_loss3_adapt");
    const std::string text = csv_of(t);
    EXPECT_EQ(text.rfind("# flockadapt trace\n", 0), 0u);
    EXPECT_NE(text.find("# name = \"canonical_loss3_adapt\""), std::string::npos);

    std::istringstream in(text);
    std::string line;
    std::string header;
    std::string last;
    while (std::getline(in, line)) {
        if (line.rfind("time_s", 0) == 0) {
            header = line;
        } else if (!line.empty() && line[0] != '#') {
            last = line;
        }
    }
    ASSERT_FALSE(header.empty());
    // agent 3 is the third agent block: columns 9..12 (1-based field index)
    std::vector<std::string> fields;
    std::stringstream ls(last);
    for (std::string f; std::getline(ls, f, ',');) {
        fields.push_back(f);
    }
    ASSERT_GE(fields.size(), 13u);
    for (int c = 9; c <= 12; ++c) {
        EXPECT_EQ(fields[c], "") << c;
    }
    EXPECT_FALSE(fields[5].empty());
}

TEST(TraceCsv, ReadBackMatchesWithinStoredPrecision)
{
    const Trace& t = cached("canonical_loss3_adapt");
    const Trace back = read_trace_csv_text(csv_of(t));
    EXPECT_EQ(back.agents, t.agents);
    EXPECT_EQ(back.edges, t.edges);
    EXPECT_EQ(write_scenario(back.scenario), write_scenario(t.scenario));
    ASSERT_EQ(back.samples.size(), t.samples.size());
    for (std::size_t i = 0; i < t.samples.size(); i += 37) {
        const TraceSample& a = t.samples[i];
        const TraceSample& b = back.samples[i];
        EXPECT_EQ(a.adaptation_active, b.adaptation_active) << a.time;
        for (std::size_t k = 0; k < a.phase.size(); ++k) {
            if (std::isnan(a.phase[k])) {
                EXPECT_TRUE(std::isnan(b.phase[k]));
            } else {
                EXPECT_NEAR(b.phase[k], a.phase[k], csv_resolution(a.phase[k]) * 1.01);
            }
        }
        EXPECT_NEAR(b.e, a.e, csv_resolution(a.e) * 1.01 + 1e-300);
        EXPECT_TRUE(std::isnan(b.coupling[0]));
    }
    // a second write is byte-identical
    EXPECT_EQ(csv_of(back), csv_of(t));
}

TEST(TraceCsv, RejectsForeignFiles)
{
    EXPECT_THROW(read_trace_csv_text("time_s,x\n0,1\n"), Error);
    std::string text = csv_of(cached("canonical_4uav"));
    const auto pos = text.find("a1_rate_radps");
    text.replace(pos, 13, "a1_rate_rpm__");
    EXPECT_THROW(read_trace_csv_text(text), Error);
    EXPECT_THROW(read_trace_csv("/nonexistent/trace.csv"), IoError);
}

TEST(Audit, BundledRunsPassInMemoryAndFromCsv)
{
    for (const char* name : {"canonical_4uav", "canonical_loss3_noadapt", "canonical_loss3_adapt", "endloss_benign",
                             "vehicle_4uav"}) {
        const Trace& t = cached(name);
        const AuditReport mem = audit_trace(t);
        EXPECT_TRUE(mem.passed()) << name << "\n" << mem.to_text();
        const AuditReport file = audit_trace(read_trace_csv_text(csv_of(t)));
        EXPECT_TRUE(file.passed()) << name << "\n" << file.to_text();
        for (const InvariantResult& r : file.invariants) {
            if (r.name == "timestamps" || r.name == "pattern-identity" || r.name == "E-rederived") {
                EXPECT_GT(r.checked, 0u) << name << " " << r.name;
            }
        }
    }
}

TEST(Audit, LyapunovCheckCoversAdaptationWindow)
{
    const AuditReport r = audit_trace(cached("canonical_loss3_adapt"));
    const auto it = std::find_if(r.invariants.begin(), r.invariants.end(),
                                 [](const InvariantResult& i) { return i.name == "lyapunov-E"; });
    ASSERT_NE(it, r.invariants.end());
    EXPECT_GE(it->checked, 590u);
}

TEST(Audit, IncreasingEAfterStartIsCaught)
{
    Trace t = read_trace_csv_text(csv_of(cached("canonical_loss3_adapt")));
    const std::size_t i = first_sample_after(t, 250.0);
    t.samples[i].e = t.samples[i - 1].e + 1e-6;
    const AuditReport r = audit_trace(t);
    EXPECT_FALSE(r.passed());
    EXPECT_THAT(r.failed_names(), Contains("lyapunov-E"));
    EXPECT_NE(r.to_text().find("FAIL  lyapunov-E"), std::string::npos);
}

TEST(Audit, CorruptedShiftIsCaught)
{
    Trace t = read_trace_csv_text(csv_of(cached("canonical_4uav")));
    t.samples[100].shift[1] += 1e-4;
    EXPECT_THAT(audit_trace(t).failed_names(), Contains("pattern-identity"));
}

TEST(Audit, CorruptedRateIsCaught)
{
    Trace t = cached("canonical_4uav");
    // a sustained offset over a few seconds of steady flight
    for (std::size_t i = 400; i < 410; ++i) {
        t.samples[i].rate[2] += 1e-3;
    }
    EXPECT_THAT(audit_trace(t).failed_names(), Contains("rate-identity"));
}

TEST(Audit, PotentialMismatchIsCaught)
{
    Trace t = cached("canonical_loss3_noadapt");
    t.samples[300].v *= 1.0 + 1e-6;
    EXPECT_THAT(audit_trace(t).failed_names(), Contains("V-rederived"));
}

TEST(Audit, SpeedOutsideBoundIsCaught)
{
    Trace t = cached("canonical_4uav");
    t.samples[10].speed[0] = 15.5;
    EXPECT_THAT(audit_trace(t).failed_names(), Contains("bounds"));
}

TEST(Plots, FourChartsWritten)
{
    const Trace& t = cached("canonical_loss3_adapt");
    const std::vector<Chart> charts = trace_charts(t);
    ASSERT_EQ(charts.size(), 4u);
    const std::string svg = render_svg(charts[0]);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "flockadapt_plot_test";
    std::filesystem::remove_all(dir);
    const auto paths = write_trace_plots(t, dir);
    ASSERT_EQ(paths.size(), 4u);
    for (const auto& p : paths) {
        EXPECT_GT(std::filesystem::file_size(p), 500u) << p;
    }
    EXPECT_TRUE(std::filesystem::exists(dir / "energy.svg"));
    std::filesystem::remove_all(dir);
}
