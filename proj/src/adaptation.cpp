#include <flockadapt/adaptation.hpp>

#include <cmath>
#include <string>

namespace flockadapt {

SigmoidKind parse_sigmoid_kind(std::string_view name)
{
    if (name == "arctan") {
        return SigmoidKind::arctan;
    }
    if (name == "tanh") {
        return SigmoidKind::tanh;
    }
    throw ValidationError("unknown sigmoid kind '" + std::string(name) + "' (expected arctan or tanh)");
}

std::string_view to_string(SigmoidKind kind)
{
    switch (kind) {
    case SigmoidKind::arctan:
        return "arctan";
    case SigmoidKind::tanh:
        return "tanh";
    }
    throw ValidationError("unknown sigmoid kind");
}

void AdaptationParams::validate() const
{
    if (!(tau_p > 0.0 && tau_p < 1.0)) {
        throw ValidationError("tau_p must lie in (0,1)");
    }
    if (!(a_s > 0.0 && std::isfinite(a_s))) {
        throw ValidationError("a_s must be positive");
    }
    if (start_time && !(std::isfinite(*start_time) && *start_time >= 0.0)) {
        throw ValidationError("adaptation start_time_s must be finite and non-negative");
    }
    (void)to_string(sigmoid);
}

double sigmoid_eval(SigmoidKind kind, double z)
{
    switch (kind) {
    case SigmoidKind::arctan:
        return std::atan(z);
    case SigmoidKind::tanh:
        return std::tanh(z);
    }
    throw ValidationError("unknown sigmoid kind");
}

double sigmoid_bound(SigmoidKind kind)
{
    switch (kind) {
    case SigmoidKind::arctan:
        return std::numbers::pi / 2.0;
    case SigmoidKind::tanh:
        return 1.0;
    }
    throw ValidationError("unknown sigmoid kind");
}

DesiredCopies desired_rates(const InteractionTopology& topology, const PatternVector& p, const DesiredCopies& d,
                            const AdaptationParams& params)
{
    if (d.n_edges() != topology.n_edges() || static_cast<std::size_t>(p.size()) != topology.n_edges()) {
        throw DimensionError("desired_rates: shapes do not match topology");
    }
    DesiredCopies rates(topology.n_edges());
    for (std::size_t k = 0; k < topology.n_edges(); ++k) {
        const double pk = p(static_cast<Eigen::Index>(k));
        for (End end : {End::tail, End::head}) {
            const double err = wrap_angle(pk - d.at(k, end));
            rates.set(k, end, params.a_s * sigmoid_eval(params.sigmoid, params.tau_p * err));
        }
    }
    return rates;
}

DesiredCopies desired_rates(const InteractionTopology& topology, const PatternVector& p, const DesiredCopies& d,
                            const AdaptationParams& params, double t, double resolved_start)
{
    if (!params.active_at(t, resolved_start)) {
        return DesiredCopies::consistent(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(topology.n_edges())));
    }
    return desired_rates(topology, p, d, params);
}

double lyapunov_rate(const InteractionTopology& topology, const PatternVector& p, const DesiredCopies& d,
                     const AdaptationParams& params)
{
    if (d.n_edges() != topology.n_edges() || static_cast<std::size_t>(p.size()) != topology.n_edges()) {
        throw DimensionError("lyapunov_rate: shapes do not match topology");
    }
    double rate = 0.0;
    for (std::size_t k = 0; k < topology.n_edges(); ++k) {
        const double pk = p(static_cast<Eigen::Index>(k));
        for (End end : {End::tail, End::head}) {
            const double err = wrap_angle(pk - d.at(k, end));
            rate -= 0.5 * err * params.a_s * sigmoid_eval(params.sigmoid, params.tau_p * err);
        }
    }
    return rate;
}

} // namespace flockadapt
