#include <flockadapt/audit.hpp>
#include <flockadapt/trace_csv.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace flockadapt {

namespace {

constexpr std::size_t max_examples = 5;

double res(double v)
{
    return csv_resolution(v);
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

class Auditor
{
public:
    Auditor(const Trace& trace, const AuditTolerances& tol)
        : trace_(trace)
        , tol_(tol)
    {
    }

    AuditReport run()
    {
        AuditReport report;
        report.invariants.push_back(timestamps());
        report.invariants.push_back(pattern_identity());
        report.invariants.push_back(rate_identity());
        report.invariants.push_back(formation_vectors());
        report.invariants.push_back(objective_rederived());
        report.invariants.push_back(potential_rederived());
        report.invariants.push_back(bounds());
        report.invariants.push_back(lyapunov_e());
        report.invariants.push_back(lyapunov_v());
        return report;
    }

private:

    static void record(InvariantResult& r, bool ok, const std::string& what)
    {
        ++r.checked;
        if (!ok) {
            ++r.violations;
            if (r.examples.size() < max_examples) {
                r.examples.push_back(what);
            }
        }
    }

    std::vector<std::size_t> present_edges(const TraceSample& s) const
    {
        std::vector<std::size_t> out;
        for (std::size_t k = 0; k < trace_.edges.size(); ++k) {
            if (!std::isnan(s.shift[k])) {
                out.push_back(k);
            }
        }
        return out;
    }

    bool same_segment(const TraceSample& a, const TraceSample& b) const
    {
        return present_edges(a) == present_edges(b);
    }

    std::size_t col(AgentId id) const { return *trace_.agent_column(id); }
    std::size_t tail_col(std::size_t k) const { return col(trace_.edges[k].tail); }
    std::size_t head_col(std::size_t k) const { return col(trace_.edges[k].head); }
    const AgentParams& params(std::size_t agent_col) const { return trace_.scenario.params[agent_col]; }

    double pattern_rate(const TraceSample& s, std::size_t k) const { return s.rate[head_col(k)] - s.rate[tail_col(k)]; }

    std::string at(const TraceSample& s) const { return "t = " + fmt(s.time) + ": "; }

    InvariantResult timestamps() const
    {
        InvariantResult r{"timestamps", "samples start at 0 and advance by the record period", 0, 0, {}};
        const double period = trace_.scenario.record_period;
        if (trace_.samples.empty()) {
            record(r, false, "trace has no samples");
            return r;
        }
        record(r, std::abs(trace_.samples.front().time) <= tol_.absolute,
               "first sample at " + fmt(trace_.samples.front().time));
        for (std::size_t j = 1; j < trace_.samples.size(); ++j) {
            const double a = trace_.samples[j - 1].time;
            const double b = trace_.samples[j].time;
            const double slack = res(a) + res(b) + 1e-9 * period;
            record(r, std::abs(b - a - period) <= slack, "spacing " + fmt(b - a) + " after t = " + fmt(a));
        }
        return r;
    }

    InvariantResult pattern_identity() const
    {
        InvariantResult r{"pattern-identity", "shift columns equal head phase minus tail phase", 0, 0, {}};
        for (const TraceSample& s : trace_.samples) {
            for (std::size_t k : present_edges(s)) {
                const double qt = s.phase[tail_col(k)];
                const double qh = s.phase[head_col(k)];
                const double err = std::abs(s.shift[k] - (qh - qt));
                const double slack = res(s.shift[k]) + res(qt) + res(qh) +
                                     tol_.absolute * std::max({1.0, std::abs(qt), std::abs(qh)});
                record(r, err <= slack, at(s) + "edge " + trace_.edges[k].label() + " off by " + fmt(err));
            }
        }
        return r;
    }

    // Trapezoid on the recorded rates. The quadrature error is h^3/12 times the
    // third derivative of the shift, estimated here from second differences of
    // the recorded pattern rates around the interval (with a 6x margin). The
    // half rate change term covers intervals where the rate is monotone.
    double rate_curvature(std::size_t j, std::size_t k) const
    {
        double worst = 0.0;
        for (std::size_t m : {j - 1, j}) {
            if (m == 0 || m + 1 >= trace_.samples.size()) {
                continue;
            }
            const TraceSample& a = trace_.samples[m - 1];
            const TraceSample& b = trace_.samples[m];
            const TraceSample& c = trace_.samples[m + 1];
            if (!same_segment(a, b) || !same_segment(b, c)) {
                continue;
            }
            worst = std::max(worst, std::abs(pattern_rate(a, k) - 2.0 * pattern_rate(b, k) + pattern_rate(c, k)));
        }
        return worst;
    }

    InvariantResult rate_identity() const
    {
        InvariantResult r{"rate-identity", "shift increments match the integrated difference of agent rates", 0, 0,
                          {}};
        for (std::size_t j = 1; j < trace_.samples.size(); ++j) {
            const TraceSample& a = trace_.samples[j - 1];
            const TraceSample& b = trace_.samples[j];
            if (!same_segment(a, b)) {
                continue;
            }
            const double h = b.time - a.time;
            for (std::size_t k : present_edges(a)) {
                const double ra = pattern_rate(a, k);
                const double rb = pattern_rate(b, k);
                const double err = std::abs((b.shift[k] - a.shift[k]) - h * 0.5 * (ra + rb));
                const double rate_res = res(a.rate[tail_col(k)]) + res(a.rate[head_col(k)]) +
                                        res(b.rate[tail_col(k)]) + res(b.rate[head_col(k)]);
                const double slack = 0.5 * h * std::abs(rb - ra) + 0.5 * h * rate_curvature(j, k) +
                                     res(a.shift[k]) + res(b.shift[k]) + h * rate_res +
                                     tol_.absolute * std::max(1.0, std::abs(b.shift[k]));
                record(r, err <= slack, at(b) + "edge " + trace_.edges[k].label() + " increment off by " + fmt(err));
            }
        }
        return r;
    }

    InvariantResult formation_vectors() const
    {
        InvariantResult r{"formation-vector", "x equals minus the incidence transpose applied to the shifts", 0, 0, {}};
        for (const TraceSample& s : trace_.samples) {
            std::vector<double> x(trace_.agents.size(), 0.0);
            std::vector<double> slack(trace_.agents.size(), 0.0);
            for (std::size_t k : present_edges(s)) {
                x[tail_col(k)] += s.shift[k];
                x[head_col(k)] -= s.shift[k];
                slack[tail_col(k)] += res(s.shift[k]);
                slack[head_col(k)] += res(s.shift[k]);
            }
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (std::isnan(s.phase[i])) {
                    continue;
                }
                const double err = std::abs(s.x[i] - x[i]);
                const double bound = slack[i] + res(s.x[i]) + tol_.absolute * std::max(1.0, std::abs(x[i]));
                record(r, err <= bound,
                       at(s) + "agent " + std::to_string(trace_.agents[i]) + " x off by " + fmt(err));
            }
        }
        return r;
    }

    InvariantResult objective_rederived() const
    {
        InvariantResult r{"E-rederived", "recorded E matches the value rebuilt from shifts and copies", 0, 0, {}};
        for (const TraceSample& s : trace_.samples) {
            double e = 0.0;
            double propagated = 0.0;
            for (std::size_t k : present_edges(s)) {
                for (double c : {s.desired_tail[k], s.desired_head[k]}) {
                    const double d = wrap_angle(s.shift[k] - c);
                    const double dr = res(s.shift[k]) + res(c);
                    e += 0.25 * d * d;
                    propagated += 0.5 * std::abs(d) * dr + 0.25 * dr * dr;
                }
            }
            const double err = std::abs(s.e - e);
            const double bound =
                std::max(tol_.relative * std::abs(e), propagated + res(s.e)) + tol_.absolute * 1e-3;
            record(r, err <= bound, at(s) + "E = " + fmt(s.e) + ", rebuilt " + fmt(e));
        }
        return r;
    }

    InvariantResult potential_rederived() const
    {
        InvariantResult r{"V-rederived", "recorded V matches the value rebuilt from shifts and copies", 0, 0, {}};
        for (const TraceSample& s : trace_.samples) {
            std::vector<double> residual(trace_.agents.size(), 0.0);
            std::vector<double> dr(trace_.agents.size(), 0.0);
            for (std::size_t k : present_edges(s)) {
                residual[tail_col(k)] += wrap_angle(s.shift[k] - s.desired_tail[k]);
                residual[head_col(k)] -= wrap_angle(s.shift[k] - s.desired_head[k]);
                dr[tail_col(k)] += res(s.shift[k]) + res(s.desired_tail[k]);
                dr[head_col(k)] += res(s.shift[k]) + res(s.desired_head[k]);
            }
            double v = 0.0;
            double propagated = 0.0;
            for (std::size_t i = 0; i < residual.size(); ++i) {
                if (std::isnan(s.phase[i])) {
                    continue;
                }
                const AgentParams& a = params(i);
                v += CouplingFunction{CouplingKind::arctan, a}.antiderivative(residual[i]);
                propagated += (std::abs(coupling_fplus(residual[i], a)) + a.v_f / a.rho * a.k_theta * dr[i]) * dr[i];
            }
            const double err = std::abs(s.v - v);
            const double bound =
                std::max(tol_.relative * std::abs(v), propagated + res(s.v)) + tol_.absolute * 1e-3;
            record(r, err <= bound, at(s) + "V = " + fmt(s.v) + ", rebuilt " + fmt(v));
        }
        return r;
    }

    InvariantResult bounds() const
    {
        const bool vehicle = trace_.scenario.model == ModelKind::vehicle;
        InvariantResult r{"bounds",
                          vehicle ? "vehicle speeds stay within the commanded speed limits"
                                  : "rates stay within omega +- v_f/rho and speeds within v_nominal +- v_f",
                          0,
                          0,
                          {}};
        const GuidanceParams& g = trace_.scenario.guidance;
        for (const TraceSample& s : trace_.samples) {
            for (std::size_t i = 0; i < trace_.agents.size(); ++i) {
                if (std::isnan(s.phase[i])) {
                    continue;
                }
                const AgentParams& a = params(i);
                const std::string who = at(s) + "agent " + std::to_string(trace_.agents[i]);
                if (vehicle) {
                    const double slack = res(s.speed[i]) + tol_.absolute;
                    record(r, s.speed[i] >= g.v_min - slack && s.speed[i] <= g.v_max + slack,
                           who + " speed " + fmt(s.speed[i]));
                    continue;
                }
                const double rate_slack = res(s.rate[i]) + tol_.absolute;
                record(r, std::abs(s.rate[i] - a.omega) <= a.v_f / a.rho + rate_slack,
                       who + " rate " + fmt(s.rate[i]));
                const double speed_slack = res(s.speed[i]) + tol_.absolute * a.v_nominal;
                record(r, std::abs(s.speed[i] - a.v_nominal) <= a.v_f + speed_slack,
                       who + " speed " + fmt(s.speed[i]));
            }
        }
        return r;
    }

    InvariantResult lyapunov_e() const
    {
        InvariantResult r{"lyapunov-E", "E is non-increasing while adaptation runs", 0, 0, {}};
        for (std::size_t j = 1; j < trace_.samples.size(); ++j) {
            const TraceSample& a = trace_.samples[j - 1];
            const TraceSample& b = trace_.samples[j];
            if (!a.adaptation_active || !same_segment(a, b)) {
                continue;
            }
            const double rise = b.e - a.e;
            record(r, rise <= tol_.monotone + res(a.e) + res(b.e), at(b) + "E rose by " + fmt(rise));
        }
        return r;
    }

    InvariantResult lyapunov_v() const
    {
        InvariantResult r{"lyapunov-V", "V is non-increasing without adaptation (phase model, uniform parameters)", 0,
                          0, {}};
        if (trace_.scenario.model != ModelKind::phase || !uniform(trace_.scenario.params)) {
            return r;
        }
        for (std::size_t j = 1; j < trace_.samples.size(); ++j) {
            const TraceSample& a = trace_.samples[j - 1];
            const TraceSample& b = trace_.samples[j];
            if (a.adaptation_active || b.adaptation_active || !same_segment(a, b)) {
                continue;
            }
            const double rise = b.v - a.v;
            record(r, rise <= tol_.monotone + res(a.v) + res(b.v), at(b) + "V rose by " + fmt(rise));
        }
        return r;
    }

    const Trace& trace_;
    AuditTolerances tol_;
};

} // namespace

bool AuditReport::passed() const
{
    return std::all_of(invariants.begin(), invariants.end(), [](const InvariantResult& r) { return r.passed(); });
}

std::vector<std::string> AuditReport::failed_names() const
{
    std::vector<std::string> out;
    for (const InvariantResult& r : invariants) {
        if (!r.passed()) {
            out.push_back(r.name);
        }
    }
    return out;
}

std::string AuditReport::to_text() const
{
    std::ostringstream os;
    for (const InvariantResult& r : invariants) {
        os << (r.passed() ? "ok    " : "FAIL  ") << r.name << " (" << r.checked << " checks";
        if (!r.passed()) {
            os << ", " << r.violations << " violated";
        }
        os << "): " << r.description << "\n";
        for (const std::string& e : r.examples) {
            os << "        " << e << "\n";
        }
    }
    os << (passed() ? "audit passed" : "audit failed") << "\n";
    return os.str();
}

AuditReport audit_trace(const Trace& trace, const AuditTolerances& tol)
{
    if (trace.scenario.params.size() != trace.agents.size()) {
        throw DimensionError("audit: scenario parameters do not match the trace agents");
    }
    return Auditor(trace, tol).run();
}

} // namespace flockadapt
