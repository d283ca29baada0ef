// Command-line front end. Talks to the library only through the C interface.

#include <flockadapt/flockadapt.h>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;

namespace {

enum Exit { exit_ok = 0, exit_io = 1, exit_validation = 2, exit_numeric = 3, exit_audit = 4 };

int exit_code(fa_status status)
{
    switch (status) {
    case FA_OK:
        return exit_ok;
    case FA_ERR_VALIDATION:
    case FA_ERR_PARSE:
    case FA_ERR_TOPOLOGY:
    case FA_ERR_DIMENSION:
    case FA_ERR_ARGUMENT:
        return exit_validation;
    case FA_ERR_NUMERIC:
        return exit_numeric;
    default:
        return exit_io;
    }
}

struct Failure
{
    fa_status status;
    std::string message;
};

template <typename T, void (*Free)(T*)>
using Handle = std::unique_ptr<T, decltype([](T* p) { Free(p); })>;

using ScenarioHandle = Handle<fa_scenario, fa_scenario_free>;
using TraceHandle = Handle<fa_trace, fa_trace_free>;
using PredictionHandle = Handle<fa_prediction, fa_prediction_free>;
using AuditHandle = Handle<fa_audit_report, fa_audit_free>;

void check(fa_status status, const std::string& context)
{
    if (status != FA_OK) {
        const std::string detail = fa_last_error();
        // file errors already name the file
        throw Failure{status, detail.starts_with(context) ? detail : context + ": " + detail};
    }
}

std::string take(char* text)
{
    std::string out(text ? text : "");
    fa_string_free(text);
    return out;
}

struct Overrides
{
    std::optional<double> dt;
    std::optional<double> duration;
    std::optional<std::uint64_t> seed;
};

ScenarioHandle load(const std::string& path, const Overrides& o)
{
    fa_scenario* raw = nullptr;
    check(fa_scenario_load(path.c_str(), &raw), path);
    ScenarioHandle s(raw);
    if (o.dt) {
        check(fa_scenario_set_dt(s.get(), *o.dt), path + ": --dt");
    }
    if (o.duration) {
        check(fa_scenario_set_duration(s.get(), *o.duration), path + ": --duration");
    }
    if (o.seed) {
        check(fa_scenario_set_seed(s.get(), *o.seed), path + ": --seed");
    }
    return s;
}

std::string notices(const fa_scenario* s)
{
    std::string out;
    for (size_t i = 0; i < fa_scenario_notice_count(s); ++i) {
        out += std::string("notice: ") + fa_scenario_notice(s, i) + "\n";
    }
    return out;
}

struct RunResult
{
    int code = exit_ok;
    std::string out;
    std::string err;
};

RunResult run_one(const std::string& path, const fs::path& dir, const Overrides& o)
{
    RunResult r;
    try {
        ScenarioHandle s = load(path, o);
        const std::string name = fa_scenario_name(s.get());
        r.out += "== " + name + " (" + path + ")\n" + notices(s.get());
        spdlog::info("running {}", name);

        fa_trace* raw = nullptr;
        check(fa_run(s.get(), &raw), path);
        TraceHandle trace(raw);
        spdlog::debug("{}: {} samples", name, fa_trace_sample_count(trace.get()));

        const fs::path csv = dir / (name + ".csv");
        check(fa_trace_write_csv(trace.get(), csv.string().c_str()), path);
        char* text = nullptr;
        check(fa_trace_summary(trace.get(), &text), path);
        const std::string summary = take(text);

        const fs::path summary_path = dir / (name + ".summary.txt");
        std::FILE* f = std::fopen(summary_path.string().c_str(), "wb");
        if (f == nullptr || std::fwrite(summary.data(), 1, summary.size(), f) != summary.size()) {
            if (f) {
                std::fclose(f);
            }
            throw Failure{FA_ERR_IO, "cannot write " + summary_path.string()};
        }
        std::fclose(f);
        r.out += summary + "trace: " + csv.string() + "\n";
    } catch (const Failure& e) {
        r.code = exit_code(e.status);
        r.err = "error: " + e.message + "\n";
    }
    return r;
}

int cmd_run(const std::vector<std::string>& files, const fs::path& dir, const Overrides& o, unsigned jobs)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        std::cerr << "error: cannot create " << dir.string() << ": " << ec.message() << "\n";
        return exit_io;
    }
    std::vector<RunResult> results(files.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < files.size(); i = next++) {
            results[i] = run_one(files[i], dir, o);
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(files.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (std::thread& t : pool) {
        t.join();
    }

    int code = exit_ok;
    for (const RunResult& r : results) {
        std::cout << r.out;
        std::cerr << r.err;
        if (code == exit_ok) {
            code = r.code;
        }
    }
    return code;
}

int cmd_predict(const std::vector<std::string>& files, const Overrides& o)
{
    int code = exit_ok;
    for (const std::string& path : files) {
        try {
            ScenarioHandle s = load(path, o);
            std::cout << notices(s.get());
            fa_prediction* raw = nullptr;
            check(fa_predict(s.get(), &raw), path);
            PredictionHandle p(raw);
            char* text = nullptr;
            check(fa_prediction_text(p.get(), &text), path);
            std::cout << take(text);
        } catch (const Failure& e) {
            std::cerr << "error: " << e.message << "\n";
            code = code == exit_ok ? exit_code(e.status) : code;
        }
    }
    return code;
}

int cmd_audit(const std::vector<std::string>& files)
{
    int code = exit_ok;
    for (const std::string& path : files) {
        try {
            fa_trace* raw = nullptr;
            check(fa_trace_load_csv(path.c_str(), &raw), path);
            TraceHandle trace(raw);
            fa_audit_report* report_raw = nullptr;
            check(fa_audit(trace.get(), &report_raw), path);
            AuditHandle report(report_raw);
            char* text = nullptr;
            check(fa_audit_text(report.get(), &text), path);
            std::cout << "== " << path << "\n" << take(text);
            if (!fa_audit_passed(report.get()) && code == exit_ok) {
                code = exit_audit;
            }
        } catch (const Failure& e) {
            std::cerr << "error: " << e.message << "\n";
            code = code == exit_ok ? exit_code(e.status) : code;
        }
    }
    return code;
}

int cmd_plot(const std::vector<std::string>& files, const fs::path& dir)
{
    int code = exit_ok;
    for (const std::string& path : files) {
        try {
            fa_trace* raw = nullptr;
            check(fa_trace_load_csv(path.c_str(), &raw), path);
            TraceHandle trace(raw);
            const fs::path target = files.size() > 1 ? dir / fs::path(path).stem() : dir;
            check(fa_trace_plot(trace.get(), target.string().c_str()), path);
            std::cout << "plots: " << target.string() << "\n";
        } catch (const Failure& e) {
            std::cerr << "error: " << e.message << "\n";
            code = code == exit_ok ? exit_code(e.status) : code;
        }
    }
    return code;
}

void configure_logging()
{
    auto logger = spdlog::stderr_color_mt("flockadapt");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("FLOCKADAPT_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to off
        if (level != spdlog::level::off || std::string(env) == "off") {
            spdlog::set_level(level);
        } else {
            spdlog::warn("ignoring unknown FLOCKADAPT_LOG level '{}'", env);
        }
    }
}

} // namespace

int main(int argc, char** argv)
{
    configure_logging();

    CLI::App app{"Formation phase-shift simulation with desired-pattern adaptation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", fa_version());

    std::vector<std::string> files;
    fs::path out = ".";
    Overrides o;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

    auto add_overrides = [&](CLI::App* cmd) {
        cmd->add_option("--dt", o.dt, "Override the integration step, s")->check(CLI::PositiveNumber);
        cmd->add_option("--duration", o.duration, "Override the simulated duration, s")->check(CLI::PositiveNumber);
        cmd->add_option("--seed", o.seed, "Override the random seed");
    };

    CLI::App* run = app.add_subcommand("run", "Simulate scenarios, writing trace CSV and summary per scenario");
    run->add_option("files", files, "Scenario files")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--out", out, "Output directory");
    run->add_option("-j,--jobs", jobs, "Parallel scenario runs")->check(CLI::PositiveNumber);
    add_overrides(run);

    CLI::App* predict = app.add_subcommand("predict", "Print the steady state after the scenario's losses");
    predict->add_option("files", files, "Scenario files")->required()->check(CLI::ExistingFile);
    add_overrides(predict);

    CLI::App* audit = app.add_subcommand("audit", "Re-check invariants on trace CSV files");
    audit->add_option("files", files, "Trace CSV files")->required()->check(CLI::ExistingFile);

    CLI::App* plot = app.add_subcommand("plot", "Render SVG charts from a trace CSV");
    plot->add_option("files", files, "Trace CSV files")->required()->check(CLI::ExistingFile);
    plot->add_option("-o,--out", out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    }

    if (run->parsed()) {
        return cmd_run(files, out, o, jobs);
    }
    if (predict->parsed()) {
        return cmd_predict(files, o);
    }
    if (audit->parsed()) {
        return cmd_audit(files);
    }
    return cmd_plot(files, out);
}
