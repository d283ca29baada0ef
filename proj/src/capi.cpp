#include <flockadapt/flockadapt.h>

#include <flockadapt/audit.hpp>
#include <flockadapt/engine.hpp>
#include <flockadapt/scenario_io.hpp>
#include <flockadapt/svg_plot.hpp>
#include <flockadapt/trace_csv.hpp>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

struct fa_scenario
{
    flockadapt::Scenario value;
};

struct fa_trace
{
    flockadapt::Trace value;
};

struct fa_prediction
{
    flockadapt::EquilibriumPrediction value;
    std::string text;
};

struct fa_audit_report
{
    flockadapt::AuditReport value;
};

namespace {

thread_local std::string last_error;

fa_status fail(fa_status status, const std::string& message)
{
    last_error = message;
    return status;
}

fa_status status_of(flockadapt::ErrorKind kind)
{
    using flockadapt::ErrorKind;
    switch (kind) {
    case ErrorKind::topology:
        return FA_ERR_TOPOLOGY;
    case ErrorKind::dimension:
        return FA_ERR_DIMENSION;
    case ErrorKind::validation:
        return FA_ERR_VALIDATION;
    case ErrorKind::parse:
        return FA_ERR_PARSE;
    case ErrorKind::numeric:
        return FA_ERR_NUMERIC;
    case ErrorKind::io:
        return FA_ERR_IO;
    }
    return FA_ERR_INTERNAL;
}

template <typename F>
fa_status guarded(F&& body)
{
    try {
        last_error.clear();
        body();
        return FA_OK;
    } catch (const flockadapt::Error& e) {
        return fail(status_of(e.kind()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(FA_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(FA_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(FA_ERR_INTERNAL, "unknown error");
    }
}

char* dup(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Applies `change` to a copy and commits it only if the result validates.
template <typename F>
fa_status override_scenario(fa_scenario* scenario, F&& change)
{
    if (scenario == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null scenario");
    }
    return guarded([&] {
        flockadapt::Scenario copy = scenario->value;
        change(copy);
        copy.validate();
        scenario->value = std::move(copy);
    });
}

} // namespace

extern "C" {

const char* fa_version(void)
{
    return "1.0.0";
}

const char* fa_last_error(void)
{
    return last_error.c_str();
}

const char* fa_status_name(fa_status status)
{
    switch (status) {
    case FA_OK:
        return "ok";
    case FA_ERR_IO:
        return "io error";
    case FA_ERR_VALIDATION:
        return "validation error";
    case FA_ERR_NUMERIC:
        return "numeric error";
    case FA_ERR_PARSE:
        return "parse error";
    case FA_ERR_TOPOLOGY:
        return "topology error";
    case FA_ERR_DIMENSION:
        return "dimension error";
    case FA_ERR_ARGUMENT:
        return "invalid argument";
    case FA_ERR_INTERNAL:
        return "internal error";
    }
    return "unknown status";
}

void fa_string_free(char* text)
{
    std::free(text);
}

fa_status fa_scenario_load(const char* path, fa_scenario** out)
{
    if (path == nullptr || out == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_scenario_load");
    }
    *out = nullptr;
    return guarded([&] { *out = new fa_scenario{flockadapt::load_scenario(path)}; });
}

fa_status fa_scenario_parse(const char* text, const char* source_name, fa_scenario** out)
{
    if (text == nullptr || out == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_scenario_parse");
    }
    *out = nullptr;
    return guarded([&] {
        *out = new fa_scenario{flockadapt::load_scenario_text(text, source_name ? source_name : "scenario")};
    });
}

fa_status fa_scenario_canonical(fa_scenario** out)
{
    if (out == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_scenario_canonical");
    }
    *out = nullptr;
    return guarded([&] { *out = new fa_scenario{flockadapt::canonical_scenario()}; });
}

void fa_scenario_free(fa_scenario* scenario)
{
    delete scenario;
}

fa_status fa_scenario_set_dt(fa_scenario* scenario, double dt_s)
{
    return override_scenario(scenario, [&](flockadapt::Scenario& s) { s.dt = dt_s; });
}

fa_status fa_scenario_set_duration(fa_scenario* scenario, double duration_s)
{
    return override_scenario(scenario, [&](flockadapt::Scenario& s) { s.duration = duration_s; });
}

fa_status fa_scenario_set_seed(fa_scenario* scenario, uint64_t seed)
{
    return override_scenario(scenario, [&](flockadapt::Scenario& s) { s.seed = seed; });
}

const char* fa_scenario_name(const fa_scenario* scenario)
{
    return scenario ? scenario->value.name.c_str() : "";
}

size_t fa_scenario_agent_count(const fa_scenario* scenario)
{
    return scenario ? scenario->value.agents.size() : 0;
}

size_t fa_scenario_notice_count(const fa_scenario* scenario)
{
    return scenario ? scenario->value.notices.size() : 0;
}

const char* fa_scenario_notice(const fa_scenario* scenario, size_t index)
{
    if (scenario == nullptr || index >= scenario->value.notices.size()) {
        return nullptr;
    }
    return scenario->value.notices[index].c_str();
}

fa_status fa_scenario_write(const fa_scenario* scenario, char** text)
{
    if (scenario == nullptr || text == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_scenario_write");
    }
    return guarded([&] { *text = dup(flockadapt::write_scenario(scenario->value)); });
}

fa_status fa_run(const fa_scenario* scenario, fa_trace** out)
{
    if (scenario == nullptr || out == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_run");
    }
    *out = nullptr;
    return guarded([&] { *out = new fa_trace{flockadapt::run_scenario(scenario->value)}; });
}

void fa_trace_free(fa_trace* trace)
{
    delete trace;
}

fa_status fa_trace_load_csv(const char* path, fa_trace** out)
{
    if (path == nullptr || out == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_trace_load_csv");
    }
    *out = nullptr;
    return guarded([&] { *out = new fa_trace{flockadapt::read_trace_csv(path)}; });
}

fa_status fa_trace_write_csv(const fa_trace* trace, const char* path)
{
    if (trace == nullptr || path == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_trace_write_csv");
    }
    return guarded([&] { flockadapt::write_trace_csv(trace->value, std::filesystem::path(path)); });
}

fa_status fa_trace_csv_text(const fa_trace* trace, char** text)
{
    if (trace == nullptr || text == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_trace_csv_text");
    }
    return guarded([&] {
        std::ostringstream os;
        flockadapt::write_trace_csv(trace->value, os);
        *text = dup(os.str());
    });
}

fa_status fa_trace_summary(const fa_trace* trace, char** text)
{
    if (trace == nullptr || text == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_trace_summary");
    }
    return guarded([&] { *text = dup(flockadapt::summarize(trace->value).to_text()); });
}

size_t fa_trace_sample_count(const fa_trace* trace)
{
    return trace ? trace->value.samples.size() : 0;
}

fa_status fa_trace_final_speed(const fa_trace* trace, int64_t agent_id, double* speed)
{
    if (trace == nullptr || speed == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_trace_final_speed");
    }
    const auto col = trace->value.agent_column(static_cast<flockadapt::AgentId>(agent_id));
    if (!col || trace->value.samples.empty() || std::isnan(trace->value.final_sample().speed[*col])) {
        return fail(FA_ERR_ARGUMENT, "agent " + std::to_string(agent_id) + " is not present at the final sample");
    }
    *speed = trace->value.final_sample().speed[*col];
    return FA_OK;
}

fa_status fa_trace_plot(const fa_trace* trace, const char* directory)
{
    if (trace == nullptr || directory == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_trace_plot");
    }
    return guarded([&] { flockadapt::write_trace_plots(trace->value, directory); });
}

fa_status fa_predict(const fa_scenario* scenario, fa_prediction** out)
{
    if (scenario == nullptr || out == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_predict");
    }
    *out = nullptr;
    return guarded([&] {
        const flockadapt::FinalFormation f = flockadapt::final_formation(scenario->value);
        flockadapt::EquilibriumPrediction p = flockadapt::predict_post_loss_equilibrium(f.topology, f.copies, f.params);
        std::string text = flockadapt::format_prediction(scenario->value, f, p);
        *out = new fa_prediction{std::move(p), std::move(text)};
    });
}

void fa_prediction_free(fa_prediction* prediction)
{
    delete prediction;
}

fa_status fa_prediction_text(const fa_prediction* prediction, char** text)
{
    if (prediction == nullptr || text == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_prediction_text");
    }
    return guarded([&] { *text = dup(prediction->text); });
}

fa_status fa_prediction_delta(const fa_prediction* prediction, double* delta, int* has_delta)
{
    if (prediction == nullptr || delta == nullptr || has_delta == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_prediction_delta");
    }
    *has_delta = prediction->value.delta.has_value() ? 1 : 0;
    *delta = prediction->value.delta.value_or(0.0);
    return FA_OK;
}

fa_status fa_prediction_speed_offset(const fa_prediction* prediction, double* offset)
{
    if (prediction == nullptr || offset == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_prediction_speed_offset");
    }
    *offset = prediction->value.speed_offset;
    return FA_OK;
}

fa_status fa_audit(const fa_trace* trace, fa_audit_report** out)
{
    if (trace == nullptr || out == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_audit");
    }
    *out = nullptr;
    return guarded([&] { *out = new fa_audit_report{flockadapt::audit_trace(trace->value)}; });
}

void fa_audit_free(fa_audit_report* report)
{
    delete report;
}

int fa_audit_passed(const fa_audit_report* report)
{
    return report != nullptr && report->value.passed() ? 1 : 0;
}

fa_status fa_audit_text(const fa_audit_report* report, char** text)
{
    if (report == nullptr || text == nullptr) {
        return fail(FA_ERR_ARGUMENT, "null argument to fa_audit_text");
    }
    return guarded([&] { *text = dup(report->value.to_text()); });
}

} // extern "C"
