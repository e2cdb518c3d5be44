#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mfsmp/experiment.hpp"
#include "mfsmp/stochastics.hpp"

namespace mfsmp {

using nlohmann::json;

const char* to_string(ConfigErrorCode code) {
    switch (code) {
        case ConfigErrorCode::parse_error: return "parse_error";
        case ConfigErrorCode::schema_error: return "schema_error";
        case ConfigErrorCode::unknown_experiment: return "unknown_experiment";
        case ConfigErrorCode::model_error: return "model_error";
        case ConfigErrorCode::io_error: return "io_error";
    }
    return "unknown";
}

namespace {

const std::set<std::string> kExperiments = {"verify_smp", "rates", "duality", "cost_gap", "bsde_crosscheck",
                                            "hypotheses"};

[[noreturn]] void schema(const std::string& msg) { throw ConfigError(ConfigErrorCode::schema_error, msg); }

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) schema("unknown config key '" + where + key + "'");
}

const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double number(const json& v, const std::string& what) {
    if (!v.is_number()) schema("'" + what + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) schema("'" + what + "' must be finite");
    return d;
}

long long integer(const json& v, const std::string& what) {
    if (!v.is_number_integer()) schema("'" + what + "' must be an integer");
    return v.get<long long>();
}

bool boolean(const json& v, const std::string& what) {
    if (!v.is_boolean()) schema("'" + what + "' must be true or false");
    return v.get<bool>();
}

std::string string(const json& v, const std::string& what) {
    if (!v.is_string()) schema("'" + what + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& what) {
    if (!v.is_array()) schema("'" + what + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(number(e, what));
    return out;
}

double snap_width(double eps, double dt) { return std::max(1L, std::lround(eps / dt)) * dt; }

}  // namespace

ExperimentConfig parse_config(const json& raw, const ConfigOverrides& ov) {
    if (!raw.is_object()) schema("config must be a JSON object");
    reject_unknown(raw,
                   {"experiment", "model", "grid", "particles", "seeds", "spike", "u_mesh", "tolerance",
                    "output_dir", "control", "adjoint_method", "source_times_x1", "k", "refine"},
                   "");
    ExperimentConfig c;

    const json* exp = find(raw, "experiment");
    if (!exp) schema("missing 'experiment'");
    c.experiment = string(*exp, "experiment");
    if (!kExperiments.count(c.experiment))
        throw ConfigError(ConfigErrorCode::unknown_experiment, "unknown experiment '" + c.experiment + "'");

    const json* model = find(raw, "model");
    if (!model || !model->is_object()) schema("missing 'model' object");
    reject_unknown(*model, {"name", "params", "jumps"}, "model.");
    const json* name = find(*model, "name");
    if (!name) schema("missing 'model.name'");
    c.model_name = string(*name, "model.name");
    if (const json* p = find(*model, "params")) {
        if (!p->is_object()) schema("'model.params' must be an object");
        for (const auto& [key, v] : p->items()) {
            if (key == "s" || key == "T") schema("set the horizon in 'grid', not in 'model.params'");
            c.params[key] = number(v, "model.params." + key);
        }
    }
    if (const json* jumps = find(*model, "jumps")) {
        if (!jumps->is_array()) schema("'model.jumps' must be an array of [mark, weight] pairs");
        std::vector<Atom> atoms;
        for (const auto& a : *jumps) {
            if (!a.is_array() || a.size() != 2) schema("'model.jumps' entries must be [mark, weight] pairs");
            atoms.push_back({number(a[0], "model.jumps mark"), number(a[1], "model.jumps weight")});
        }
        c.jumps = atoms;
    }

    if (const json* grid = find(raw, "grid")) {
        if (!grid->is_object()) schema("'grid' must be an object");
        reject_unknown(*grid, {"s", "T", "steps"}, "grid.");
        if (const json* v = find(*grid, "s")) c.s = number(*v, "grid.s");
        if (const json* v = find(*grid, "T")) c.T = number(*v, "grid.T");
        if (const json* v = find(*grid, "steps")) c.steps = static_cast<int>(integer(*v, "grid.steps"));
    }
    if (const json* v = find(raw, "particles")) c.particles = static_cast<int>(integer(*v, "particles"));
    if (const json* v = find(raw, "seeds")) {
        if (!v->is_array() || v->empty()) schema("'seeds' must be a non-empty array");
        c.seeds.clear();
        for (const auto& e : *v) {
            const long long s = integer(e, "seeds");
            if (s < 0) schema("'seeds' must be non-negative");
            c.seeds.push_back(static_cast<std::uint64_t>(s));
        }
    }
    if (ov.seed) c.seeds = {*ov.seed};
    if (ov.particles) c.particles = *ov.particles;
    if (ov.steps) c.steps = *ov.steps;
    if (c.particles < 1) schema("'particles' must be at least 1");
    if (c.steps < 1) schema("'grid.steps' must be at least 1");
    if (!(c.s < c.T)) schema("grid requires s < T");

    auto params = c.params;
    params["s"] = c.s;
    params["T"] = c.T;
    try {
        c.model = build_model(c.model_name, params, c.jumps);
    } catch (const ModelError& e) {
        throw ConfigError(ConfigErrorCode::model_error, e.what());
    }
    const ControlSet& A = c.model.controls;
    const double dt = (c.T - c.s) / c.steps;

    c.t0 = c.s + 0.25 * (c.T - c.s);
    c.u_spike = A.hi;
    for (int p = 3; p <= 7; ++p) c.eps_ladder.push_back(std::ldexp(c.T - c.s, -p));
    if (const json* sp = find(raw, "spike")) {
        if (!sp->is_object()) schema("'spike' must be an object");
        reject_unknown(*sp, {"t0", "eps_ladder", "u_spike"}, "spike.");
        if (const json* v = find(*sp, "t0")) c.t0 = number(*v, "spike.t0");
        if (const json* v = find(*sp, "eps_ladder")) c.eps_ladder = numbers(*v, "spike.eps_ladder");
        if (const json* v = find(*sp, "u_spike")) c.u_spike = number(*v, "spike.u_spike");
    }
    if (c.eps_ladder.empty()) schema("'spike.eps_ladder' must not be empty");
    c.t0 = c.s + std::lround((c.t0 - c.s) / dt) * dt;
    for (double& e : c.eps_ladder) {
        if (!(e > 0.0)) schema("'spike.eps_ladder' values must be positive");
        e = snap_width(e, dt);
    }
    if (!A.contains(c.u_spike)) schema("control out of bounds: spike.u_spike");
    if (c.experiment == "rates" || c.experiment == "duality") {
        if (c.t0 < c.s || !(c.t0 < c.T)) schema("'spike.t0' must lie in [s, T)");
        for (double e : c.eps_ladder)
            if (c.t0 + e > c.T + 1e-12 * (c.T - c.s)) schema("spike window leaves the horizon");
    }
    if (c.experiment == "rates") {
        if (c.eps_ladder.size() < 4) schema("'rates' needs at least four ladder points");
        if (c.seeds.size() < 3) schema("'rates' needs at least three seeds");
    }

    if (const json* v = find(raw, "u_mesh")) c.u_mesh = static_cast<int>(integer(*v, "u_mesh"));
    if (c.u_mesh < 2) schema("'u_mesh' must be at least 2");
    if (const json* v = find(raw, "tolerance")) {
        c.tolerance = number(*v, "tolerance");
        if (*c.tolerance < 0.0) schema("'tolerance' must be non-negative");
    }
    if (const json* v = find(raw, "output_dir")) c.output_dir = string(*v, "output_dir");
    if (ov.output_dir) c.output_dir = *ov.output_dir;

    c.control.kind = (c.experiment == "verify_smp" || c.experiment == "cost_gap") ? "optimum" : "constant";
    if (const json* ctl = find(raw, "control")) {
        if (!ctl->is_object()) schema("'control' must be an object");
        reject_unknown(*ctl, {"kind", "value", "values", "iterations"}, "control.");
        if (const json* v = find(*ctl, "kind")) c.control.kind = string(*v, "control.kind");
        if (const json* v = find(*ctl, "value")) c.control.value = number(*v, "control.value");
        if (const json* v = find(*ctl, "values")) c.control.values = numbers(*v, "control.values");
        if (const json* v = find(*ctl, "iterations"))
            c.control.iterations = static_cast<int>(integer(*v, "control.iterations"));
    }
    if (c.control.kind == "constant") {
        if (!A.contains(c.control.value)) schema("control out of bounds: control.value");
    } else if (c.control.kind == "piecewise") {
        if (static_cast<int>(c.control.values.size()) != c.steps)
            schema("'control.values' needs exactly one value per grid step");
        for (double u : c.control.values)
            if (!A.contains(u)) schema("control out of bounds: control.values");
    } else if (c.control.kind == "optimum") {
        if (c.control.iterations < 1) schema("'control.iterations' must be at least 1");
    } else {
        schema("'control.kind' must be constant, piecewise or optimum");
    }

    if (const json* v = find(raw, "adjoint_method")) {
        const std::string m = string(*v, "adjoint_method");
        if (m != "regression" && m != "deterministic") schema("'adjoint_method' must be regression or deterministic");
        c.adjoint_method = parse_adjoint_method(m);
    }
    if (const json* v = find(raw, "source_times_x1")) c.source_times_x1 = boolean(*v, "source_times_x1");
    if (const json* v = find(raw, "k")) c.k = static_cast<int>(integer(*v, "k"));
    if (c.k < 1) schema("'k' must be at least 1");
    if (const json* v = find(raw, "refine")) c.refine = boolean(*v, "refine");
    return c;
}

json ExperimentConfig::echo() const {
    json j;
    j["experiment"] = experiment;
    json m;
    m["name"] = model_name;
    m["params"] = json::object();
    for (const auto& [k, v] : params) m["params"][k] = v;
    json atoms = json::array();
    for (const auto& a : model.jumps.atoms()) atoms.push_back({a.mark, a.weight});
    m["jumps"] = atoms;
    m["initial_state"] = model.initial_state;
    m["control_set"] = {model.controls.lo, model.controls.hi};
    j["model"] = m;
    j["grid"] = {{"s", s}, {"T", T}, {"steps", steps}};
    j["particles"] = particles;
    j["seeds"] = seeds;
    j["spike"] = {{"t0", t0}, {"eps_ladder", eps_ladder}, {"u_spike", u_spike}};
    j["u_mesh"] = u_mesh;
    j["tolerance"] = tolerance ? json(*tolerance) : json(nullptr);
    j["output_dir"] = output_dir;
    json ctl = {{"kind", control.kind}};
    if (control.kind == "constant") ctl["value"] = control.value;
    if (control.kind == "piecewise") ctl["values"] = control.values;
    if (control.kind == "optimum") ctl["iterations"] = control.iterations;
    j["control"] = ctl;
    j["adjoint_method"] = to_string(adjoint_method);
    j["source_times_x1"] = source_times_x1;
    j["k"] = k;
    j["refine"] = refine;
    return j;
}

ExperimentConfig parse_config_text(const std::string& text, const ConfigOverrides& ov) {
    json raw;
    try {
        raw = json::parse(text);
    } catch (const json::parse_error& e) {
        // Translate the byte offset into a line/column pair.
        std::size_t line = 1, col = 1;
        const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < upto; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << "JSON parse error at line " << line << ", column " << col << ": " << e.what();
        throw ConfigError(ConfigErrorCode::parse_error, msg.str());
    }
    return parse_config(raw, ov);
}

ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& ov) {
    std::ifstream in(path);
    if (!in) throw ConfigError(ConfigErrorCode::io_error, "cannot read config file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), ov);
}

}  // namespace mfsmp
