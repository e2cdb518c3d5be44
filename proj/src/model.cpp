#include "mfsmp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace mfsmp {

JumpMeasure::JumpMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    for (const auto& a : atoms_) {
        if (!(a.weight > 0.0) || !std::isfinite(a.weight) || !std::isfinite(a.mark))
            throw ModelError("jump atom weights must be finite and strictly positive");
        total_mass_ += a.weight;
    }
    if (!std::isfinite(total_mass_)) throw ModelError("jump measure total mass is not finite");
}

double JumpMeasure::integrate(const std::function<double(double)>& phi) const {
    double acc = 0.0;
    for (const auto& a : atoms_) acc += a.weight * phi(a.mark);
    return acc;
}

std::vector<double> ControlSet::mesh(int points) const {
    if (points < 1) throw ModelError("control mesh needs at least one point");
    if (points == 1) return {0.5 * (lo + hi)};
    std::vector<double> out(points);
    for (int k = 0; k < points; ++k) out[k] = lo + (hi - lo) * k / (points - 1);
    out.back() = hi;
    return out;
}

namespace {

class ZeroCoefficients final : public Coefficients {
public:
    Jet drift(double, double, double, double) const override { return {}; }
    Jet diffusion(double, double, double, double) const override { return {}; }
    JumpJet jump(double, double, double, double) const override { return {}; }
    Jet running_cost(double, double, double, double) const override { return {}; }
    Jet terminal_cost(double, double) const override { return {}; }
    bool affine() const override { return true; }
};

class DriftOnlyCoefficients final : public Coefficients {
public:
    explicit DriftOnlyCoefficients(double v) : v_(v) {}
    Jet drift(double, double, double, double) const override { return {v_}; }
    Jet diffusion(double, double, double, double) const override { return {}; }
    JumpJet jump(double, double, double, double) const override { return {}; }
    Jet running_cost(double, double, double, double) const override { return {}; }
    Jet terminal_cost(double, double) const override { return {}; }
    bool affine() const override { return true; }

private:
    double v_;
};

struct QuadraticCosts {
    double q, q_bar, r, m, m_bar;

    Jet running(double x, double y, double u) const {
        return {0.5 * (q * x * x + q_bar * y * y + r * u * u), q * x, q_bar * y, q, 0.0, q_bar};
    }
    Jet terminal(double x, double y) const {
        return {0.5 * (m * x * x + m_bar * y * y), m * x, m_bar * y, m, 0.0, m_bar};
    }
};

// f = a x + a_bar y + b u, sigma = c x + c_bar y + d u, g = mark (e x + kappa u).
class LinearQuadraticCoefficients final : public Coefficients {
public:
    explicit LinearQuadraticCoefficients(const std::map<std::string, double>& p)
        : a_(p.at("a")), a_bar_(p.at("a_bar")), b_(p.at("b")), c_(p.at("c")), c_bar_(p.at("c_bar")),
          d_(p.at("d")), e_(p.at("e")), kappa_(p.at("kappa")),
          costs_{p.at("q"), p.at("q_bar"), p.at("r"), p.at("m"), p.at("m_bar")} {}

    Jet drift(double, double x, double y, double u) const override {
        return {a_ * x + a_bar_ * y + b_ * u, a_, a_bar_};
    }
    Jet diffusion(double, double x, double y, double u) const override {
        return {c_ * x + c_bar_ * y + d_ * u, c_, c_bar_};
    }
    JumpJet jump(double, double x, double u, double mark) const override {
        return {mark * (e_ * x + kappa_ * u), mark * e_, 0.0};
    }
    Jet running_cost(double, double x, double y, double u) const override { return costs_.running(x, y, u); }
    Jet terminal_cost(double x, double y) const override { return costs_.terminal(x, y); }
    bool affine() const override { return true; }

private:
    double a_, a_bar_, b_, c_, c_bar_, d_, e_, kappa_;
    QuadraticCosts costs_;
};

// Smooth non-affine family: f = a x + a_bar sin y + b u cos x,
// sigma = s0 + c sin x + c_bar y + d u cos x, g = mark (e sin x + kappa u cos x).
class SineCoefficients final : public Coefficients {
public:
    explicit SineCoefficients(const std::map<std::string, double>& p)
        : a_(p.at("a")), a_bar_(p.at("a_bar")), b_(p.at("b")), s0_(p.at("s0")), c_(p.at("c")),
          c_bar_(p.at("c_bar")), d_(p.at("d")), e_(p.at("e")), kappa_(p.at("kappa")),
          costs_{p.at("q"), p.at("q_bar"), p.at("r"), p.at("m"), p.at("m_bar")} {}

    Jet drift(double, double x, double y, double u) const override {
        const double sx = std::sin(x), cx = std::cos(x), sy = std::sin(y), cy = std::cos(y);
        return {a_ * x + a_bar_ * sy + b_ * u * cx, a_ - b_ * u * sx, a_bar_ * cy, -b_ * u * cx, 0.0,
                -a_bar_ * sy};
    }
    Jet diffusion(double, double x, double y, double u) const override {
        const double sx = std::sin(x), cx = std::cos(x);
        return {s0_ + c_ * sx + c_bar_ * y + d_ * u * cx, c_ * cx - d_ * u * sx, c_bar_, -c_ * sx - d_ * u * cx,
                0.0, 0.0};
    }
    JumpJet jump(double, double x, double u, double mark) const override {
        const double sx = std::sin(x), cx = std::cos(x);
        return {mark * (e_ * sx + kappa_ * u * cx), mark * (e_ * cx - kappa_ * u * sx),
                mark * (-e_ * sx - kappa_ * u * cx)};
    }
    Jet running_cost(double, double x, double y, double u) const override { return costs_.running(x, y, u); }
    Jet terminal_cost(double x, double y) const override { return costs_.terminal(x, y); }

private:
    double a_, a_bar_, b_, s0_, c_, c_bar_, d_, e_, kappa_;
    QuadraticCosts costs_;
};

struct FamilyInfo {
    std::vector<std::string> required;
    double default_zeta;
    bool default_jumps;
};

const std::map<std::string, FamilyInfo>& families() {
    static const std::map<std::string, FamilyInfo> table = {
        {"zero", {{}, 0.0, false}},
        {"drift_only", {{"v"}, 0.0, false}},
        {"lq_meanfield_jump",
         {{"a", "a_bar", "b", "c", "c_bar", "d", "e", "kappa", "q", "q_bar", "r", "m", "m_bar"}, 1.0, true}},
        {"sine_meanfield_jump",
         {{"a", "a_bar", "b", "s0", "c", "c_bar", "d", "e", "kappa", "q", "q_bar", "r", "m", "m_bar"}, 0.5, true}},
    };
    return table;
}

const std::vector<std::string> kCommonKeys = {"zeta", "u_min", "u_max", "s", "T"};

}  // namespace

std::vector<std::string> builtin_models() {
    std::vector<std::string> out;
    for (const auto& [name, _] : families()) out.push_back(name);
    return out;
}

ModelSpec build_model(const std::string& name, const std::map<std::string, double>& params,
                      const std::optional<std::vector<Atom>>& atoms) {
    const auto it = families().find(name);
    if (it == families().end()) throw ModelError("unknown model '" + name + "'");
    const FamilyInfo& info = it->second;

    std::set<std::string> allowed(info.required.begin(), info.required.end());
    allowed.insert(kCommonKeys.begin(), kCommonKeys.end());
    for (const auto& [key, value] : params) {
        if (!allowed.count(key)) throw ModelError("unknown parameter '" + key + "' for model '" + name + "'");
        if (!std::isfinite(value)) throw ModelError("parameter '" + key + "' is not finite");
    }
    for (const auto& key : info.required)
        if (!params.count(key)) throw ModelError("missing parameter '" + key + "' for model '" + name + "'");

    auto get = [&](const std::string& key, double fallback) {
        const auto p = params.find(key);
        return p == params.end() ? fallback : p->second;
    };

    ModelSpec spec;
    spec.name = name;
    spec.params = params;
    spec.s = get("s", 0.0);
    spec.T = get("T", 1.0);
    if (!(spec.s < spec.T)) throw ModelError("horizon requires s < T");
    spec.initial_state = get("zeta", info.default_zeta);
    spec.controls = {get("u_min", -1.0), get("u_max", 1.0)};
    if (!(spec.controls.lo < spec.controls.hi)) throw ModelError("empty control interval");

    if (atoms) {
        spec.jumps = JumpMeasure(*atoms);
    } else if (info.default_jumps) {
        spec.jumps = JumpMeasure({{-1.0, 1.0}, {1.0, 1.0}});
    }

    if (name == "zero") {
        spec.coefficients = std::make_shared<ZeroCoefficients>();
    } else if (name == "drift_only") {
        spec.coefficients = std::make_shared<DriftOnlyCoefficients>(params.at("v"));
    } else if (name == "lq_meanfield_jump") {
        spec.coefficients = std::make_shared<LinearQuadraticCoefficients>(params);
    } else {
        spec.coefficients = std::make_shared<SineCoefficients>(params);
    }
    return spec;
}

ModelSpec with_coefficients(const ModelSpec& base, std::shared_ptr<const Coefficients> coefficients,
                            std::string name) {
    ModelSpec out = base;
    out.coefficients = std::move(coefficients);
    out.name = std::move(name);
    return out;
}

ControlProcess ControlProcess::constant(double u) {
    ControlProcess c;
    c.kind_ = Kind::constant;
    c.constant_ = u;
    return c;
}

ControlProcess ControlProcess::piecewise(std::vector<double> values) {
    if (values.empty()) throw ModelError("piecewise control needs at least one value");
    ControlProcess c;
    c.kind_ = Kind::piecewise;
    c.values_ = std::move(values);
    return c;
}

ControlProcess ControlProcess::feedback(Feedback fn) {
    if (!fn) throw ModelError("feedback control needs a callable");
    ControlProcess c;
    c.kind_ = Kind::feedback;
    c.feedback_ = std::move(fn);
    return c;
}

double ControlProcess::value(int step, double t, double x, double y, const ControlSet& set) const {
    if (step >= override_begin_ && step < override_end_) return set.clamp(override_value_);
    switch (kind_) {
        case Kind::constant: return set.clamp(constant_);
        case Kind::piecewise: return set.clamp(values_.at(static_cast<std::size_t>(step)));
        case Kind::feedback: return set.clamp(feedback_(t, x, y));
    }
    return set.clamp(constant_);
}

double ControlProcess::value(int step, const ControlSet& set) const {
    if (!open_loop() && !(step >= override_begin_ && step < override_end_))
        throw ModelError("feedback control has no state-independent value");
    return value(step, 0.0, 0.0, 0.0, set);
}

std::vector<double> ControlProcess::values(int steps, const ControlSet& set) const {
    check_steps(steps);
    std::vector<double> out(steps);
    for (int i = 0; i < steps; ++i) out[i] = value(i, set);
    return out;
}

void ControlProcess::check_steps(int steps) const {
    if (kind_ == Kind::piecewise && static_cast<int>(values_.size()) != steps)
        throw ModelError("piecewise control has " + std::to_string(values_.size()) + " values for " +
                         std::to_string(steps) + " grid intervals");
}

ControlProcess ControlProcess::with_override(int begin, int end, double u) const {
    if (override_end_ > override_begin_) throw ModelError("control already carries an override window");
    ControlProcess c = *this;
    c.override_begin_ = begin;
    c.override_end_ = end;
    c.override_value_ = u;
    return c;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double fd_step(double at) { return 1e-5 * std::max(1.0, std::abs(at)); }

template <class F>
double central(F&& fn, double at) {
    const double h = fd_step(at);
    return (fn(at + h) - fn(at - h)) / (2.0 * h);
}

struct MismatchTracker {
    std::map<std::string, DerivativeCheck> checks;

    void record(const std::string& symbol, double numeric, double analytic) {
        auto& c = checks[symbol];
        c.symbol = symbol;
        if (!std::isfinite(analytic) || !std::isfinite(numeric)) {
            c.verifiable = false;
            c.mismatch = kNaN;
            return;
        }
        if (!c.verifiable) return;
        const double rel = std::abs(numeric - analytic) / std::max(1.0, std::abs(analytic));
        c.mismatch = std::max(c.mismatch, rel);
    }
};

// Checks a (t, x, y, u) coefficient: first derivatives against the value,
// second derivatives against the declared first derivatives.
template <class F>
void probe_jet(MismatchTracker& tr, const std::string& name, F&& fn, double t, double x, double y, double u) {
    const Jet at = fn(t, x, y, u);
    tr.record(name + "_x", central([&](double z) { return fn(t, z, y, u).v; }, x), at.x);
    tr.record(name + "_y", central([&](double z) { return fn(t, x, z, u).v; }, y), at.y);
    tr.record(name + "_xx", central([&](double z) { return fn(t, z, y, u).x; }, x), at.xx);
    tr.record(name + "_xy", central([&](double z) { return fn(t, x, z, u).x; }, y), at.xy);
    tr.record(name + "_yy", central([&](double z) { return fn(t, x, z, u).y; }, y), at.yy);
}

}  // namespace

HypothesisReport probe_hypotheses(const ModelSpec& model, const ProbeBox& box, int n_samples,
                                  unsigned long long seed) {
    if (n_samples < 2) throw ModelError("probe needs at least two samples");
    if (!(box.x_lo < box.x_hi) || !(box.y_lo < box.y_hi) || !(box.u_lo <= box.u_hi))
        throw ModelError("probe box is degenerate");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ut(model.s, model.T), ux(box.x_lo, box.x_hi),
        uy(box.y_lo, box.y_hi), uu(box.u_lo, box.u_hi);

    MismatchTracker tr;
    HypothesisReport rep;
    rep.samples = n_samples;
    const auto& coef = *model.coefficients;

    for (int n = 0; n < n_samples; ++n) {
        const double t = ut(rng), x = ux(rng), y = uy(rng), u = uu(rng), x2 = ux(rng);

        probe_jet(tr, "f", [&](double a, double b, double c, double d) { return coef.drift(a, b, c, d); }, t, x, y, u);
        probe_jet(tr, "sigma", [&](double a, double b, double c, double d) { return coef.diffusion(a, b, c, d); },
                  t, x, y, u);
        probe_jet(tr, "ell", [&](double a, double b, double c, double d) { return coef.running_cost(a, b, c, d); },
                  t, x, y, u);
        probe_jet(tr, "h", [&](double, double b, double c, double) { return coef.terminal_cost(b, c); }, t, x, y, u);

        double lip_g = 0.0, lip_gx = 0.0, growth = 0.0;
        const double dx = std::abs(x - x2);
        for (const auto& atom : model.jumps.atoms()) {
            const JumpJet j1 = coef.jump(t, x, u, atom.mark);
            const JumpJet j2 = coef.jump(t, x2, u, atom.mark);
            tr.record("g_x", central([&](double z) { return coef.jump(t, z, u, atom.mark).v; }, x), j1.x);
            tr.record("g_xx", central([&](double z) { return coef.jump(t, z, u, atom.mark).x; }, x), j1.xx);
            if (dx > 0.0) {
                lip_g = std::max(lip_g, std::abs(j1.v - j2.v) / dx);
                lip_gx = std::max(lip_gx, std::abs(j1.x - j2.x) / dx);
            }
            growth = std::max(growth, std::abs(j1.v) / (1.0 + std::abs(x)));
        }
        rep.lipschitz_g = std::max(rep.lipschitz_g, lip_g);
        rep.lipschitz_gx = std::max(rep.lipschitz_gx, lip_gx);
        rep.growth_g = std::max(rep.growth_g, growth);
    }
    if (model.jumps.empty()) {
        tr.checks["g_x"] = {"g_x", 0.0, true};
        tr.checks["g_xx"] = {"g_xx", 0.0, true};
    }

    rep.pass = true;
    for (auto& [_, c] : tr.checks) {
        rep.derivatives.push_back(c);
        if (!c.verifiable) {
            rep.pass = false;
            continue;
        }
        rep.max_mismatch = std::max(rep.max_mismatch, c.mismatch);
        if (!(c.mismatch < 1e-4)) rep.pass = false;
    }
    return rep;
}

}  // namespace mfsmp
