#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mfsmp/model.hpp"

namespace mfsmp::testing {

// Coefficients assembled from callbacks; anything left unset is identically zero.
struct CustomCoefficients : Coefficients {
    std::function<Jet(double, double, double, double)> f, s, l;
    std::function<JumpJet(double, double, double, double)> g;
    std::function<Jet(double, double)> h;
    bool is_affine = false;

    Jet drift(double t, double x, double y, double u) const override { return f ? f(t, x, y, u) : Jet{}; }
    Jet diffusion(double t, double x, double y, double u) const override { return s ? s(t, x, y, u) : Jet{}; }
    JumpJet jump(double t, double x, double u, double mark) const override {
        return g ? g(t, x, u, mark) : JumpJet{};
    }
    Jet running_cost(double t, double x, double y, double u) const override { return l ? l(t, x, y, u) : Jet{}; }
    Jet terminal_cost(double x, double y) const override { return h ? h(x, y) : Jet{}; }
    bool affine() const override { return is_affine; }
};

inline ModelSpec custom_model(const CustomCoefficients& c, double s = 0.0, double T = 1.0, double zeta = 0.0,
                              std::vector<Atom> atoms = {}) {
    ModelSpec base = build_model("zero", {{"s", s}, {"T", T}, {"zeta", zeta}});
    ModelSpec m = with_coefficients(base, std::make_shared<CustomCoefficients>(c), "custom");
    m.jumps = JumpMeasure(std::move(atoms));
    return m;
}

inline std::map<std::string, double> lq_params() {
    return {{"a", -1.0}, {"a_bar", 0.5}, {"b", 1.0}, {"c", 0.2}, {"c_bar", 0.0}, {"d", 0.1}, {"e", 0.3},
            {"kappa", 0.0}, {"q", 1.0}, {"q_bar", 0.5}, {"r", 0.5}, {"m", 1.0}, {"m_bar", 0.0}};
}

inline ModelSpec lq_model() { return build_model("lq_meanfield_jump", lq_params()); }

inline std::map<std::string, double> sine_params() {
    return {{"a", -1.0}, {"a_bar", 0.5}, {"b", 1.0}, {"s0", 0.2}, {"c", 0.2}, {"c_bar", 0.1}, {"d", 0.3},
            {"e", 0.3}, {"kappa", 0.2}, {"q", 1.0}, {"q_bar", 0.5}, {"r", 0.5}, {"m", 1.0}, {"m_bar", 0.2}};
}

inline ModelSpec sine_model() { return build_model("sine_meanfield_jump", sine_params()); }

}  // namespace mfsmp::testing
