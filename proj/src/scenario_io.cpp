#include <flockadapt/config.hpp>
#include <flockadapt/scenario_io.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace flockadapt {

namespace {

using config::Table;
using config::Value;

std::string where(const Value& v)
{
    return "line " + std::to_string(v.line) + ", column " + std::to_string(v.column);
}

// Typed access to one section; remembers which keys were read so leftovers
// can be rejected as unknown.
class Section
{
public:
    Section(std::string name, const Table* table, std::vector<std::string>& notices)
        : name_(std::move(name))
        , table_(table)
        , notices_(notices)
    {
    }

    const Value* find(const std::string& key)
    {
        used_.insert(key);
        if (table_ == nullptr) {
            return nullptr;
        }
        auto it = table_->entries.find(key);
        return it == table_->entries.end() ? nullptr : &it->second;
    }

    double number(const std::string& key, double fallback)
    {
        const Value* v = find(key);
        if (v == nullptr) {
            defaulted(key, format_number(fallback));
            return fallback;
        }
        return as_number(key, *v);
    }

    std::optional<double> optional_number(const std::string& key)
    {
        const Value* v = find(key);
        if (v == nullptr) {
            return std::nullopt;
        }
        return as_number(key, *v);
    }

    std::string string(const std::string& key, const std::string& fallback)
    {
        const Value* v = find(key);
        if (v == nullptr) {
            defaulted(key, "\"" + fallback + "\"");
            return fallback;
        }
        if (!v->is_string()) {
            throw ValidationError(qualified(key) + " must be a string (" + where(*v) + ")");
        }
        return std::get<std::string>(v->data);
    }

    bool boolean(const std::string& key, bool fallback)
    {
        const Value* v = find(key);
        if (v == nullptr) {
            defaulted(key, fallback ? "true" : "false");
            return fallback;
        }
        if (!v->is_bool()) {
            throw ValidationError(qualified(key) + " must be true or false (" + where(*v) + ")");
        }
        return std::get<bool>(v->data);
    }

    std::vector<double> numbers(const std::string& key, const Value& v)
    {
        if (!v.is_array()) {
            throw ValidationError(qualified(key) + " must be an array (" + where(v) + ")");
        }
        std::vector<double> out;
        for (const Value& item : std::get<config::Array>(v.data)) {
            out.push_back(as_number(key, item));
        }
        return out;
    }

    /// A scalar broadcast to n entries, or an array of exactly n entries.
    std::vector<double> per_agent(const std::string& key, double fallback, std::size_t n)
    {
        const Value* v = find(key);
        if (v == nullptr) {
            defaulted(key, format_number(fallback));
            return std::vector<double>(n, fallback);
        }
        if (v->is_array()) {
            std::vector<double> out = numbers(key, *v);
            if (out.size() != n) {
                throw ValidationError(qualified(key) + " must have one entry per agent (" + where(*v) + ")");
            }
            return out;
        }
        return std::vector<double>(n, as_number(key, *v));
    }

    std::string qualified(const std::string& key) const { return name_ + "." + key; }

    void reject_unknown() const
    {
        if (table_ == nullptr) {
            return;
        }
        for (const auto& [key, value] : table_->entries) {
            if (used_.count(key) == 0) {
                throw ValidationError("unknown key " + qualified(key) + " (" + where(value) + ")");
            }
        }
    }

    void defaulted(const std::string& key, const std::string& value)
    {
        notices_.push_back(qualified(key) + " not set; using default " + value);
    }

private:
    double as_number(const std::string& key, const Value& v) const
    {
        if (!v.is_number()) {
            throw ValidationError(qualified(key) + " must be a number (" + where(v) + ")");
        }
        const double d = std::get<double>(v.data);
        if (!std::isfinite(d)) {
            throw ValidationError(qualified(key) + " must be finite (" + where(v) + ")");
        }
        return d;
    }

    std::string name_;
    const Table* table_;
    std::vector<std::string>& notices_;
    std::set<std::string> used_;
};

const Table* table_or_null(const config::Document& doc, const std::string& name)
{
    auto it = doc.tables.find(name);
    return it == doc.tables.end() ? nullptr : &it->second;
}

InitialPhaseMode parse_initial_mode(const std::string& name)
{
    if (name == "pattern_perturbed") {
        return InitialPhaseMode::pattern_perturbed;
    }
    if (name == "equispaced_perturbed") {
        return InitialPhaseMode::equispaced_perturbed;
    }
    if (name == "explicit") {
        return InitialPhaseMode::explicit_list;
    }
    throw ValidationError("scenario.initial_phases must be pattern_perturbed, equispaced_perturbed or explicit");
}

std::string quoted(const std::string& text)
{
    std::string out = "\"";
    for (char c : text) {
        switch (c) {
        case '"':
            out += "\\\"";
            break;
        case '\\':
            out += "\\\\";
            break;
        case '\n':
            out += "\\n";
            break;
        case '\t':
            out += "\\t";
            break;
        default:
            out.push_back(c);
        }
    }
    return out + "\"";
}

std::string array_text(const std::vector<double>& values)
{
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += (i ? ", " : "") + format_number(values[i]);
    }
    return out + "]";
}

template <class Get>
std::string per_agent_text(const std::vector<AgentParams>& params, Get get)
{
    std::vector<double> values;
    for (const AgentParams& p : params) {
        values.push_back(get(p));
    }
    bool same = true;
    for (double v : values) {
        same = same && v == values.front();
    }
    return same && !values.empty() ? format_number(values.front()) : array_text(values);
}

} // namespace

std::string format_number(double value)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        throw NumericError("cannot format number");
    }
    return {buf, ptr};
}

Scenario load_scenario_text(std::string_view text, const std::string& source_name)
{
    const config::Document doc = config::parse(text);

    for (const auto& [name, table] : doc.tables) {
        if (name != "scenario" && name != "formation" && name != "model" && name != "adaptation") {
            throw ValidationError("unknown section [" + name + "] at line " + std::to_string(table.line));
        }
    }
    for (const auto& [name, tables] : doc.array_tables) {
        if (name != "events") {
            throw ValidationError("unknown section [[" + name + "]] at line " + std::to_string(tables.front().line));
        }
    }
    if (table_or_null(doc, "formation") == nullptr) {
        throw ValidationError("missing [formation] section");
    }

    Scenario s;
    s.notices.clear();
    auto& notices = s.notices;

    Section sc("scenario", table_or_null(doc, "scenario"), notices);
    s.name = sc.string("name", source_name);
    s.duration = sc.number("duration_s", s.duration);
    s.dt = sc.number("dt_s", s.dt);
    {
        const Value* seed = sc.find("seed");
        if (seed == nullptr) {
            sc.defaulted("seed", std::to_string(s.seed));
        } else if (!seed->is_number() || !seed->integer || std::get<double>(seed->data) < 0.0 ||
                   std::get<double>(seed->data) > static_cast<double>(max_seed)) {
            throw ValidationError("scenario.seed must be an integer in [0, 2^53] (" + where(*seed) + ")");
        } else {
            s.seed = static_cast<std::uint64_t>(std::get<double>(seed->data));
        }
    }
    s.record_period = sc.number("record_period_s", s.record_period);
    s.initial_mode = parse_initial_mode(sc.string("initial_phases", std::string(to_string(s.initial_mode))));
    s.initial_jitter = sc.number("initial_jitter_rad", s.initial_jitter);
    if (const Value* v = sc.find("initial_phases_rad")) {
        s.initial_phases = sc.numbers("initial_phases_rad", *v);
    }
    sc.reject_unknown();

    Section fm("formation", table_or_null(doc, "formation"), notices);
    {
        const Value* agents = fm.find("agents");
        if (agents == nullptr) {
            throw ValidationError("formation.agents is required");
        }
        if (!agents->is_array()) {
            throw ValidationError("formation.agents must be an array of integer ids (" + where(*agents) + ")");
        }
        for (const Value& id : std::get<config::Array>(agents->data)) {
            if (!id.is_number() || !id.integer) {
                throw ValidationError("formation.agents must contain integer ids (" + where(id) + ")");
            }
            s.agents.push_back(static_cast<AgentId>(std::get<double>(id.data)));
        }
        const Value* shifts = fm.find("desired_shifts_rad");
        if (shifts == nullptr) {
            throw ValidationError("formation.desired_shifts_rad is required");
        }
        const std::vector<double> d = fm.numbers("desired_shifts_rad", *shifts);
        if (d.size() + 1 != s.agents.size()) {
            throw ValidationError("formation.desired_shifts_rad must have agents - 1 = " +
                                  std::to_string(s.agents.size() - (s.agents.empty() ? 0 : 1)) + " entries, got " +
                                  std::to_string(d.size()) + " (" + where(*shifts) + ")");
        }
        s.desired_shifts = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
    }
    const std::size_t n = s.agents.size();
    const std::vector<double> rho = fm.per_agent("orbit_radius_m", 100.0, n);
    const std::vector<double> speed = fm.per_agent("nominal_speed_mps", 12.0, n);
    const double v_f = fm.number("v_f_mps", 3.0);
    const double k_theta = fm.number("k_theta", 5.0);
    fm.reject_unknown();
    for (std::size_t i = 0; i < n; ++i) {
        s.params.push_back(AgentParams::uniform_cruise(speed[i], rho[i], v_f, k_theta));
    }

    std::string kind = "phase";
    if (const Table* model = table_or_null(doc, "model")) {
        if (auto it = model->entries.find("kind"); it != model->entries.end() && it->second.is_string()) {
            kind = std::get<std::string>(it->second.data);
        }
    }
    if (kind == "phase") {
        s.model = ModelKind::phase;
    } else if (kind == "vehicle") {
        s.model = ModelKind::vehicle;
    } else {
        throw ValidationError("model.kind must be phase or vehicle");
    }
    // vehicle keys are accepted for either kind; defaults are only announced when they matter
    std::vector<std::string> unused_notices;
    Section md("model", table_or_null(doc, "model"), s.model == ModelKind::vehicle ? notices : unused_notices);
    (void)md.string("kind", "phase");
    s.guidance.k_r = md.number("k_r", s.guidance.k_r);
    s.guidance.k_course = md.number("k_course", s.guidance.k_course);
    s.guidance.heading_tc = md.number("heading_tc_s", s.guidance.heading_tc);
    s.guidance.speed_tc = md.number("speed_tc_s", s.guidance.speed_tc);
    s.guidance.direction = parse_orbit_direction(md.string("orbit_direction", "ccw"));
    s.guidance.v_min = md.number("v_min_mps", s.guidance.v_min);
    s.guidance.v_max = md.number("v_max_mps", s.guidance.v_max);
    s.initial_radius = md.optional_number("initial_radius_m");
    md.reject_unknown();

    Section ad("adaptation", table_or_null(doc, "adaptation"), notices);
    s.adaptation.enabled = ad.boolean("enabled", false);
    const std::size_t adaptation_notices = notices.size();
    s.adaptation.tau_p = ad.number("tau_p", s.adaptation.tau_p);
    s.adaptation.a_s = ad.number("a_s", s.adaptation.a_s);
    s.adaptation.sigmoid = parse_sigmoid_kind(ad.string("sigmoid", "arctan"));
    s.adaptation.start_time = ad.optional_number("start_time_s");
    if (!s.adaptation.start_time) {
        notices.push_back("adaptation.start_time_s not set; adaptation starts at the first loss event");
    }
    ad.reject_unknown();
    if (!s.adaptation.enabled) {
        notices.resize(adaptation_notices);
    }

    if (auto it = doc.array_tables.find("events"); it != doc.array_tables.end()) {
        for (const Table& table : it->second) {
            std::vector<std::string> ignored;
            Section ev("events", &table, ignored);
            const Value* t = ev.find("t_s");
            const Value* agent = ev.find("agent");
            if (t == nullptr || agent == nullptr) {
                throw ValidationError("event at line " + std::to_string(table.line) + " needs t_s and agent");
            }
            const std::string type = ev.string("type", "lose_agent");
            if (type != "lose_agent") {
                throw ValidationError("event at line " + std::to_string(table.line) + ": unknown type '" + type + "'");
            }
            if (!agent->is_number() || !agent->integer) {
                throw ValidationError("events.agent must be an integer id (" + where(*agent) + ")");
            }
            if (!t->is_number()) {
                throw ValidationError("events.t_s must be a number (" + where(*t) + ")");
            }
            ev.reject_unknown();
            s.events.push_back({std::get<double>(t->data), static_cast<AgentId>(std::get<double>(agent->data))});
        }
    }

    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open scenario file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return load_scenario_text(buffer.str(), path.stem().string());
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.column(), path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::string write_scenario(const Scenario& s)
{
    std::ostringstream os;
    os << "[scenario]\n";
    os << "name = " << quoted(s.name) << "\n";
    os << "duration_s = " << format_number(s.duration) << "\n";
    os << "dt_s = " << format_number(s.dt) << "\n";
    os << "seed = " << s.seed << "\n";
    os << "record_period_s = " << format_number(s.record_period) << "\n";
    os << "initial_phases = \"" << to_string(s.initial_mode) << "\"\n";
    os << "initial_jitter_rad = " << format_number(s.initial_jitter) << "\n";
    if (!s.initial_phases.empty()) {
        os << "initial_phases_rad = " << array_text(s.initial_phases) << "\n";
    }

    os << "\n[formation]\n";
    os << "agents = [";
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        os << (i ? ", " : "") << s.agents[i];
    }
    os << "]\n";
    os << "desired_shifts_rad = "
       << array_text(std::vector<double>(s.desired_shifts.begin(), s.desired_shifts.end())) << "\n";
    os << "orbit_radius_m = " << per_agent_text(s.params, [](const AgentParams& p) { return p.rho; }) << "\n";
    os << "nominal_speed_mps = " << per_agent_text(s.params, [](const AgentParams& p) { return p.v_nominal; })
       << "\n";
    os << "v_f_mps = " << format_number(s.params.empty() ? 3.0 : s.params.front().v_f) << "\n";
    os << "k_theta = " << format_number(s.params.empty() ? 5.0 : s.params.front().k_theta) << "\n";

    os << "\n[model]\n";
    os << "kind = \"" << to_string(s.model) << "\"\n";
    if (s.model == ModelKind::vehicle) {
        os << "k_r = " << format_number(s.guidance.k_r) << "\n";
        os << "k_course = " << format_number(s.guidance.k_course) << "\n";
        os << "heading_tc_s = " << format_number(s.guidance.heading_tc) << "\n";
        os << "speed_tc_s = " << format_number(s.guidance.speed_tc) << "\n";
        os << "orbit_direction = \"" << to_string(s.guidance.direction) << "\"\n";
        os << "v_min_mps = " << format_number(s.guidance.v_min) << "\n";
        os << "v_max_mps = " << format_number(s.guidance.v_max) << "\n";
        if (s.initial_radius) {
            os << "initial_radius_m = " << format_number(*s.initial_radius) << "\n";
        }
    }

    os << "\n[adaptation]\n";
    os << "enabled = " << (s.adaptation.enabled ? "true" : "false") << "\n";
    os << "tau_p = " << format_number(s.adaptation.tau_p) << "\n";
    os << "a_s = " << format_number(s.adaptation.a_s) << "\n";
    os << "sigmoid = \"" << to_string(s.adaptation.sigmoid) << "\"\n";
    if (s.adaptation.start_time) {
        os << "start_time_s = " << format_number(*s.adaptation.start_time) << "\n";
    }

    for (const LossEvent& ev : s.events) {
        os << "\n[[events]]\n";
        os << "t_s = " << format_number(ev.time) << "\n";
        os << "type = \"lose_agent\"\n";
        os << "agent = " << ev.lost_agent << "\n";
    }
    return os.str();
}

} // namespace flockadapt
