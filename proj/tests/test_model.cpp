#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfsmp/model.hpp"
#include "support.hpp"

using namespace mfsmp;
using testing::lq_model;
using testing::lq_params;

TEST_CASE("zero model evaluates to zero everywhere") {
    const ModelSpec m = build_model("zero", {});
    for (double x : {-2.0, 0.0, 1.5}) {
        const Jet f = m.f(0.3, x, 0.7, 0.2), s = m.sigma(0.3, x, 0.7, 0.2), l = m.ell(0.3, x, 0.7, 0.2);
        const Jet h = m.h(x, 0.7);
        for (const Jet& j : {f, s, l, h}) {
            CHECK(j.v == 0.0);
            CHECK(j.x == 0.0);
            CHECK(j.y == 0.0);
            CHECK(j.xx == 0.0);
        }
    }
    CHECK(m.jumps.empty());
}

TEST_CASE("drift_only has constant drift and no other terms") {
    const ModelSpec m = build_model("drift_only", {{"v", 1.0}});
    for (double x : {-1.0, 0.0, 3.0}) {
        const Jet f = m.f(0.0, x, 2.0, 0.5);
        CHECK(f.v == 1.0);
        CHECK(f.x == 0.0);
        CHECK(f.y == 0.0);
        CHECK(m.sigma(0.0, x, 2.0, 0.5).v == 0.0);
        CHECK(m.ell(0.0, x, 2.0, 0.5).v == 0.0);
    }
}

TEST_CASE("lq family derivatives match the parameter set") {
    const ModelSpec m = lq_model();
    for (double x : {-2.0, -0.3, 1.7}) {
        CHECK(m.f(0.1, x, 0.4, 0.2).x == -1.0);
        CHECK(m.f(0.1, x, 0.4, 0.2).y == 0.5);
        CHECK(m.sigma(0.1, x, 0.4, 0.2).xx == 0.0);
        CHECK(m.h(x, 0.4).xx == 1.0);
        CHECK(m.ell(0.1, x, 0.4, 0.2).xx == 1.0);
    }
    CHECK(m.coefficients->affine());
    CHECK(m.jumps.size() == 2);
    CHECK(m.initial_state == 1.0);
}

TEST_CASE("build_model rejects bad input") {
    CHECK_THROWS_AS(build_model("no_such_family", {}), ModelError);
    auto p = lq_params();
    p["typo"] = 1.0;
    CHECK_THROWS_WITH_AS(build_model("lq_meanfield_jump", p), doctest::Contains("unknown parameter"), ModelError);
    p = lq_params();
    p.erase("q");
    CHECK_THROWS_WITH_AS(build_model("lq_meanfield_jump", p), doctest::Contains("missing parameter"), ModelError);
    CHECK_THROWS_AS(build_model("zero", {{"u_min", 1.0}, {"u_max", 1.0}}), ModelError);
    CHECK_THROWS_AS(build_model("zero", {{"s", 1.0}, {"T", 0.5}}), ModelError);
    CHECK_THROWS_AS(JumpMeasure({{1.0, -0.5}}), ModelError);
    CHECK_THROWS_AS(JumpMeasure({{1.0, std::nan("")}}), ModelError);
}

TEST_CASE("jump measure integrates over atoms") {
    const JumpMeasure mu({{1.0, 2.0}, {-1.0, 0.5}});
    CHECK(mu.total_mass() == doctest::Approx(2.5));
    CHECK(mu.integrate([](double th) { return th * th * th; }) == doctest::Approx(1.5));
}

TEST_CASE("control set mesh includes both endpoints") {
    const ControlSet A{-1.0, 1.0};
    const auto mesh = A.mesh(41);
    REQUIRE(mesh.size() == 41);
    CHECK(mesh.front() == -1.0);
    CHECK(mesh.back() == 1.0);
    CHECK(mesh[20] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(A.clamp(3.0) == 1.0);
    CHECK(A.clamp(-3.0) == -1.0);
}

TEST_CASE("control processes clamp and override") {
    const ControlSet A{-1.0, 1.0};
    const auto c = ControlProcess::constant(2.0);
    CHECK(c.value(3, A) == 1.0);
    const auto p = ControlProcess::piecewise({0.1, 0.2, 0.3});
    CHECK(p.values(3, A) == std::vector<double>{0.1, 0.2, 0.3});
    CHECK_THROWS(p.check_steps(4));
    const auto o = p.with_override(1, 2, -0.5);
    CHECK(o.values(3, A) == std::vector<double>{0.1, -0.5, 0.3});
    const auto fb = ControlProcess::feedback([](double, double x, double) { return -x; });
    CHECK_FALSE(fb.open_loop());
    CHECK(fb.value(0, 0.0, 0.4, 0.0, A) == -0.4);
    CHECK(fb.value(0, 0.0, -5.0, 0.0, A) == 1.0);
    CHECK_THROWS(fb.value(0, A));
}

TEST_CASE("zero model probe finds nothing") {
    const HypothesisReport r = probe_hypotheses(build_model("zero", {}), {}, 200, 7);
    CHECK(r.pass);
    CHECK(r.max_mismatch == 0.0);
    CHECK(r.lipschitz_g == 0.0);
}

TEST_CASE("lq probe: exact Lipschitz constant of a linear jump coefficient") {
    const HypothesisReport r = probe_hypotheses(lq_model(), {}, 500, 11);
    CHECK(r.pass);
    // g = mark * (e x + kappa u); marks are +-1 and e = 0.3
    CHECK(std::abs(r.lipschitz_g - 0.3) < 1e-9);
    CHECK(r.lipschitz_gx == 0.0);
}

TEST_CASE("sine family hand-coded derivatives agree with finite differences") {
    const HypothesisReport r = probe_hypotheses(testing::sine_model(), {}, 500, 3);
    CHECK(r.pass);
    CHECK(r.max_mismatch < 1e-6);
}

TEST_CASE("a corrupted drift derivative is detected") {
    struct Corrupt : Coefficients {
        std::shared_ptr<const Coefficients> inner;
        Jet drift(double t, double x, double y, double u) const override {
            Jet j = inner->drift(t, x, y, u);
            j.x += 0.1;
            return j;
        }
        Jet diffusion(double t, double x, double y, double u) const override { return inner->diffusion(t, x, y, u); }
        JumpJet jump(double t, double x, double u, double k) const override { return inner->jump(t, x, u, k); }
        Jet running_cost(double t, double x, double y, double u) const override {
            return inner->running_cost(t, x, y, u);
        }
        Jet terminal_cost(double x, double y) const override { return inner->terminal_cost(x, y); }
    };
    const ModelSpec base = lq_model();
    auto bad = std::make_shared<Corrupt>();
    bad->inner = base.coefficients;
    const HypothesisReport r = probe_hypotheses(with_coefficients(base, bad, "corrupt"), {}, 100, 5);
    CHECK_FALSE(r.pass);
    double fx = -1.0;
    for (const auto& d : r.derivatives)
        if (d.symbol == "f_x") fx = d.mismatch;
    CHECK(fx == doctest::Approx(0.1).epsilon(1e-3));
}

TEST_CASE("NaN derivatives are unverifiable and fail the probe") {
    testing::CustomCoefficients c;
    c.f = [](double, double, double, double) { return Jet{0.0, std::nan(""), 0.0, 0.0, 0.0, 0.0}; };
    const HypothesisReport r = probe_hypotheses(testing::custom_model(c), {}, 20, 1);
    CHECK_FALSE(r.pass);
    bool seen = false;
    for (const auto& d : r.derivatives)
        if (d.symbol == "f_x") seen = !d.verifiable;
    CHECK(seen);
}
