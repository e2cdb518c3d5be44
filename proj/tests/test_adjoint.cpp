#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfsmp/adjoint.hpp"
#include "support.hpp"

using namespace mfsmp;
using testing::custom_model;
using testing::CustomCoefficients;
using testing::lq_model;

namespace {

ParticleEnsemble run(const ModelSpec& m, int n, int steps, std::uint64_t seed, double u = 0.0) {
    return simulate_particles(m, ControlProcess::constant(u), TimeGrid(m.s, m.T, steps), n, RngStreams(seed));
}

double sup_mean_gap(const BackwardSolution& a, const BackwardSolution& b) {
    double worst = 0.0;
    for (int i = 0; i <= a.grid.steps(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.particles; ++j) s += std::abs(a.at(j, i) - b.at(j, i));
        worst = std::max(worst, s / a.particles);
    }
    return worst;
}

}  // namespace

TEST_CASE("zero model: every adjoint component vanishes") {
    const ModelSpec m = build_model("zero", {}, std::vector<Atom>{{1.0, 1.0}});
    const ParticleEnsemble e = run(m, 100, 20, 1);
    for (auto method : {AdjointMethod::regression, AdjointMethod::deterministic}) {
        const AdjointTriple a1 = solve_first_adjoint(m, e, {method, true});
        const SecondOrderAdjoint a2 = solve_second_adjoint(m, e, a1, {method, true});
        for (int i = 0; i <= 20; ++i)
            for (int j = 0; j < 100; ++j) {
                CHECK(a1.Psi(j, i) == 0.0);
                CHECK(a2.Q(j, i) == 0.0);
            }
        for (int i = 0; i < 20; ++i) {
            CHECK(a1.K(i, 0.0) == 0.0);
            CHECK(a1.gamma(i, 0, 0.0) == 0.0);
            CHECK(a2.R(i, 0.0) == 0.0);
            CHECK(a2.Gamma(i, 0, 0.0) == 0.0);
        }
        const AdjointBoundReport b = check_adjoint_moments(a1, a2, e, m.jumps);
        CHECK(b.first.total == 0.0);
        CHECK(b.second.total == 0.0);
    }
}

TEST_CASE("unit running-cost gradient gives a linear ramp") {
    CustomCoefficients c;
    c.l = [](double, double x, double, double) { return Jet{x, 1.0, 0, 0, 0, 0}; };
    c.is_affine = true;
    const ModelSpec m = custom_model(c, 0.0, 1.0, 0.0);
    const ParticleEnsemble e = run(m, 50, 40, 2);
    for (auto method : {AdjointMethod::regression, AdjointMethod::deterministic}) {
        const AdjointTriple a = solve_first_adjoint(m, e, {method, true});
        for (int i = 0; i <= 40; ++i) CHECK(a.Psi(7, i) == doctest::Approx(e.grid.node(i) - 1.0).epsilon(1e-12));
        for (int i = 0; i < 40; ++i) CHECK(std::abs(a.K(i, 0.0)) < 1e-12);
        const AdjointMomentReport r = check_adjoint_moments(a, e, m.jumps);
        CHECK(r.sup_value_sq == doctest::Approx(1.0));
        CHECK(r.brownian_sq < 1e-24);
        CHECK(r.jump_sq == 0.0);
    }
}

TEST_CASE("constant terminal curvature gives a constant second adjoint") {
    CustomCoefficients c;
    c.h = [](double x, double) { return Jet{x * x, 2.0 * x, 0, 2.0, 0, 0}; };
    c.is_affine = true;
    const ModelSpec m = custom_model(c);
    const ParticleEnsemble e = run(m, 50, 25, 3);
    for (auto method : {AdjointMethod::regression, AdjointMethod::deterministic}) {
        const AdjointTriple a1 = solve_first_adjoint(m, e, {method, true});
        const SecondOrderAdjoint a2 = solve_second_adjoint(m, e, a1, {method, true});
        for (int i = 0; i <= 25; ++i) CHECK(a2.Q(3, i) == -2.0);
        for (int i = 0; i < 25; ++i) CHECK(a2.R(i, 0.0) == 0.0);
    }
}

TEST_CASE("hamiltonian by direct substitution") {
    CustomCoefficients c;
    c.f = [](double, double, double, double) { return Jet{3.0, 0, 0, 0, 0, 0}; };
    c.s = [](double, double, double, double) { return Jet{0.5, 0, 0, 0, 0, 0}; };
    c.g = [](double, double, double, double) { return JumpJet{1.0, 0, 0}; };
    c.l = [](double, double, double, double) { return Jet{1.0, 0, 0, 0, 0, 0}; };
    const ModelSpec m = custom_model(c, 0.0, 1.0, 0.0, {{1.0, 0.4}});
    HamiltonianInputs in;
    in.psi = 2.0;
    in.k = 1.0;
    in.gamma = {1.0};
    CHECK(hamiltonian(in, m) == doctest::Approx(5.9).epsilon(1e-15));
    CHECK(hamiltonian(HamiltonianInputs{0, 0, 0, 0, 0, 0, {0.0}}, custom_model({}, 0.0, 1.0, 0.0, {{1.0, 0.4}})) ==
          0.0);
}

TEST_CASE("hamiltonian derivatives collapse as expected") {
    const ModelSpec m = lq_model();
    const std::vector<double> gam = {0.3, -0.2};
    SUBCASE("same control gives zero difference") {
        const auto d = hamiltonian_derivatives(m, 0.2, 0.7, 0.1, 0.4, 0.4, 1.3, -0.6, gam);
        CHECK(d.delta_h == 0.0);
    }
    SUBCASE("zero adjoints leave only the cost") {
        const std::vector<double> zero = {0.0, 0.0};
        const auto d = hamiltonian_derivatives(m, 0.2, 0.7, 0.1, 0.4, -0.3, 0.0, 0.0, zero);
        CHECK(d.delta_h == doctest::Approx(-(m.ell(0.2, 0.7, 0.1, -0.3).v - m.ell(0.2, 0.7, 0.1, 0.4).v)));
        CHECK(d.h_x == doctest::Approx(-m.ell(0.2, 0.7, 0.1, 0.4).x));
        CHECK(d.h_xx == doctest::Approx(-1.0));
    }
    SUBCASE("lq curvature is minus q") {
        const auto d = hamiltonian_derivatives(m, 0.2, 0.7, 0.1, 0.4, -0.3, 1.3, -0.6, gam);
        CHECK(d.h_xx == doctest::Approx(-1.0));
    }
}

TEST_CASE("lq control derivative of the hamiltonian") {
    auto p = testing::lq_params();
    p["kappa"] = 0.2;
    const ModelSpec m = build_model("lq_meanfield_jump", p);
    HamiltonianInputs in{0.3, 0.8, -0.2, 0.25, 1.1, -0.7, {0.4, -0.9}};
    const double h = 1e-6;
    HamiltonianInputs up = in, dn = in;
    up.u += h;
    dn.u -= h;
    const double fd = (hamiltonian(up, m) - hamiltonian(dn, m)) / (2 * h);
    // psi b + K d + sum_k w_k gamma_k mark_k kappa - r u
    double analytic = in.psi * 1.0 + in.k * 0.1 - 0.5 * in.u;
    for (std::size_t k = 0; k < 2; ++k) analytic += m.jumps.atoms()[k].weight * in.gamma[k] * m.jumps.atoms()[k].mark * 0.2;
    CHECK(std::abs(fd - analytic) < 1e-6);
}

TEST_CASE("regression solver matches the exact affine solver on lq") {
    const ModelSpec m = lq_model();
    const AdjointOptions reg{AdjointMethod::regression, true}, det{AdjointMethod::deterministic, true};
    std::vector<double> psi_err, q_err, totals;
    for (int n : {10000, 40000}) {
        const ParticleEnsemble e = run(m, n, 100, 42);
        REQUIRE(deterministic_backend_applies(m, e));
        const AdjointTriple r1 = solve_first_adjoint(m, e, reg), d1 = solve_first_adjoint(m, e, det);
        const SecondOrderAdjoint r2 = solve_second_adjoint(m, e, r1, reg), d2 = solve_second_adjoint(m, e, d1, det);
        psi_err.push_back(sup_mean_gap(r1, d1));
        q_err.push_back(sup_mean_gap(r2, d2));
        const AdjointBoundReport b = check_adjoint_moments(r1, r2, e, m.jumps);
        totals.push_back(b.first.total);
    }
    MESSAGE("psi error " << psi_err[0] << " -> " << psi_err[1] << ", q error " << q_err[0] << " -> " << q_err[1]);
    CHECK(psi_err[0] < 5e-2);
    CHECK(psi_err[1] < psi_err[0]);
    CHECK(q_err[0] < 5e-2);
    CHECK(std::abs(totals[1] - totals[0]) <= 0.2 * totals[0]);
}

TEST_CASE("adjoint moment totals are stable in the particle count for q = 4") {
    auto p = testing::lq_params();
    p["q"] = 4.0;
    const ModelSpec m = build_model("lq_meanfield_jump", p);
    std::vector<double> totals;
    for (int n : {1000, 10000}) {
        const ParticleEnsemble e = run(m, n, 100, 5);
        const AdjointTriple a1 = solve_first_adjoint(m, e);
        const SecondOrderAdjoint a2 = solve_second_adjoint(m, e, a1);
        const AdjointBoundReport b = check_adjoint_moments(a1, a2, e, m.jumps);
        totals.push_back(b.first.total + b.second.total);
    }
    CHECK(std::abs(totals[1] - totals[0]) <= 0.2 * totals[1]);
}

TEST_CASE("without mean-field coupling the adjoint equals the classical one") {
    auto p = testing::lq_params();
    p["a_bar"] = p["c_bar"] = p["q_bar"] = p["m_bar"] = 0.0;
    const ModelSpec m = build_model("lq_meanfield_jump", p);
    const ParticleEnsemble e = run(m, 3000, 50, 8, 0.3);
    for (auto method : {AdjointMethod::regression, AdjointMethod::deterministic}) {
        const AdjointTriple mf = solve_first_adjoint(m, e, {method, true});
        const AdjointTriple cl = solve_first_adjoint(m, e, {method, false});
        CHECK(mf.value == cl.value);
        const SecondOrderAdjoint mf2 = solve_second_adjoint(m, e, mf, {method, true});
        const SecondOrderAdjoint cl2 = solve_second_adjoint(m, e, cl, {method, false});
        CHECK(mf2.value == cl2.value);
        for (int i = 0; i < 50; ++i)
            for (double x : {-0.5, 0.2, 1.4}) {
                CHECK(mf.K(i, x) == cl.K(i, x));
                CHECK(mf.gamma(i, 1, x) == cl.gamma(i, 1, x));
            }
    }
    // With coupling switched on the two differ.
    const ModelSpec coupled = lq_model();
    const ParticleEnsemble ec = run(coupled, 3000, 50, 8, 0.3);
    CHECK(solve_first_adjoint(coupled, ec, {AdjointMethod::regression, true}).value !=
          solve_first_adjoint(coupled, ec, {AdjointMethod::regression, false}).value);
}

TEST_CASE("without jumps in the coefficients the jump integrands vanish") {
    auto p = testing::lq_params();
    p["e"] = p["kappa"] = 0.0;
    const ModelSpec m = build_model("lq_meanfield_jump", p);
    const ParticleEnsemble e = run(m, 2000, 40, 9, 0.4);
    CHECK_FALSE(e.jumps_active);
    for (auto method : {AdjointMethod::regression, AdjointMethod::deterministic}) {
        const AdjointTriple a1 = solve_first_adjoint(m, e, {method, true});
        const SecondOrderAdjoint a2 = solve_second_adjoint(m, e, a1, {method, true});
        for (int i = 0; i < 40; ++i)
            for (int k = 0; k < 2; ++k)
                for (double x : {-1.0, 0.0, 2.0}) {
                    CHECK(a1.gamma(i, k, x) == 0.0);
                    CHECK(a2.Gamma(i, k, x) == 0.0);
                }
    }
}

TEST_CASE("deterministic backend refuses models it cannot solve exactly") {
    const ModelSpec m = testing::sine_model();
    const ParticleEnsemble e = run(m, 100, 10, 1);
    CHECK_FALSE(deterministic_backend_applies(m, e));
    CHECK_THROWS_AS(solve_first_adjoint(m, e, {AdjointMethod::deterministic, true}), AdjointError);
    const ModelSpec lq = lq_model();
    const auto fb = ControlProcess::feedback([](double, double x, double) { return -x; });
    const ParticleEnsemble ef = simulate_particles(lq, fb, TimeGrid(0.0, 1.0, 10), 100, RngStreams(1));
    CHECK_FALSE(deterministic_backend_applies(lq, ef));
    CHECK(parse_adjoint_method("deterministic") == AdjointMethod::deterministic);
    CHECK_THROWS(parse_adjoint_method("magic"));
}
