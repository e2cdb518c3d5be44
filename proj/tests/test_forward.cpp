#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfsmp/forward.hpp"
#include "mfsmp/parallel.hpp"
#include "support.hpp"

using namespace mfsmp;
using testing::lq_model;

TEST_CASE("zero model keeps every particle at the initial state") {
    const ModelSpec m = build_model("zero", {{"zeta", 1.0}});
    const TimeGrid g(0.0, 1.0, 20);
    const ParticleEnsemble e = simulate_particles(m, ControlProcess::constant(0.3), g, 50, RngStreams(1));
    for (double v : e.x) CHECK(v == 1.0);
    for (double v : e.mean) CHECK(v == 1.0);
    CHECK_FALSE(e.jumps_active);
    CHECK(evaluate_cost(m, e).value == 0.0);
    CHECK(check_state_moments(e, 2.0) == 1.0);
}

TEST_CASE("constant drift is integrated exactly") {
    const ModelSpec m = build_model("drift_only", {{"v", 1.0}});
    const TimeGrid g(0.0, 1.0, 64);
    const ParticleEnsemble e = simulate_particles(m, ControlProcess::constant(0.0), g, 10, RngStreams(2));
    for (int j = 0; j < 10; ++j) CHECK(e.state(j, 64) == 1.0);
    CHECK(check_state_moments(e, 2.0) == 1.0);
}

TEST_CASE("grid horizon must match the model") {
    const ModelSpec m = build_model("zero", {});
    CHECK_THROWS_AS(simulate_particles(m, ControlProcess::constant(0.0), TimeGrid(0.0, 2.0, 4), 3, RngStreams(1)),
                    ModelError);
}

TEST_CASE("running cost of one over a horizon of two") {
    testing::CustomCoefficients c;
    c.l = [](double, double, double, double) { return Jet{1.0, 0, 0, 0, 0, 0}; };
    const ModelSpec m = testing::custom_model(c, 0.0, 2.0);
    const ParticleEnsemble e = simulate_particles(m, ControlProcess::constant(0.0), TimeGrid(0.0, 2.0, 40), 5,
                                                  RngStreams(3));
    const CostEstimate j = evaluate_cost(m, e);
    CHECK(j.value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(j.std_error == 0.0);
}

TEST_CASE("overflow is reported instead of propagated") {
    testing::CustomCoefficients c;
    c.f = [](double, double x, double, double) { return Jet{500.0 * x, 500.0, 0, 0, 0, 0}; };
    const ModelSpec m = testing::custom_model(c, 0.0, 1.0, 1.0);
    CHECK_THROWS_AS(simulate_particles(m, ControlProcess::constant(0.0), TimeGrid(0.0, 1.0, 10), 3, RngStreams(1)),
                    SimulationError);
}

TEST_CASE("lq mean converges linearly in dt against a fine grid") {
    const ModelSpec m = lq_model();
    const TimeGrid fine(0.0, 1.0, 3200);
    const auto noise = std::make_shared<const NoiseBlock>(sample_noise(RngStreams(17), fine, m.jumps, 10000));
    // u = 0 keeps the mean away from its fixed point, so the Euler bias is visible.
    const auto ctl = ControlProcess::constant(0.0);
    std::vector<double> ref;
    {
        const ParticleEnsemble e = simulate_particles(m, ctl, noise);
        ref = e.mean;
    }
    auto error_at = [&](int factor) {
        const auto coarse = std::make_shared<const NoiseBlock>(noise->coarsen(factor));
        const ParticleEnsemble e = simulate_particles(m, ctl, coarse);
        double worst = 0.0;
        for (int i = 0; i <= e.grid.steps(); ++i) worst = std::max(worst, std::abs(e.mean[i] - ref[i * factor]));
        return worst;
    };
    const double e200 = error_at(16), e400 = error_at(8);
    MESSAGE("mean error M=200: " << e200 << ", M=400: " << e400);
    CHECK(e200 / e400 >= 1.6);
    CHECK(e200 / e400 <= 2.4);
}

TEST_CASE("cost difference between two controls matches a fine-grid estimate") {
    const ModelSpec m = lq_model();
    const TimeGrid fine(0.0, 1.0, 1600);
    const auto noise = std::make_shared<const NoiseBlock>(sample_noise(RngStreams(23), fine, m.jumps, 10000));
    const auto coarse = std::make_shared<const NoiseBlock>(noise->coarsen(16));
    auto diff = [&](const std::shared_ptr<const NoiseBlock>& nb) {
        const auto c0 = particle_costs(m, simulate_particles(m, ControlProcess::constant(0.0), nb));
        const auto c1 = particle_costs(m, simulate_particles(m, ControlProcess::constant(0.5), nb));
        std::vector<double> d(c0.size());
        for (std::size_t j = 0; j < d.size(); ++j) d[j] = c1[j] - c0[j];
        const auto [mean, sd] = mean_and_sd(d);
        return std::pair{mean, sd / std::sqrt(static_cast<double>(d.size()))};
    };
    const auto [dc, sc] = diff(coarse);
    const auto [df, sf] = diff(noise);
    MESSAGE("coarse " << dc << " +- " << sc << ", fine " << df << " +- " << sf);
    CHECK(std::abs(dc - df) <= 3.0 * std::hypot(sc, sf));
}

TEST_CASE("feedback controls are recorded per particle") {
    const ModelSpec m = lq_model();
    const auto fb = ControlProcess::feedback([](double, double x, double) { return -x; });
    const ParticleEnsemble e = simulate_particles(m, fb, TimeGrid(0.0, 1.0, 10), 20, RngStreams(4));
    CHECK(e.control.per_particle);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 20; ++j) CHECK(e.u(j, i) == m.controls.clamp(-e.state(j, i)));
}

TEST_CASE("ensembles do not depend on the worker count") {
    const ModelSpec m = lq_model();
    const TimeGrid g(0.0, 1.0, 50);
    set_worker_count(1);
    const ParticleEnsemble a = simulate_particles(m, ControlProcess::constant(0.2), g, 2000, RngStreams(6));
    set_worker_count(3);
    const ParticleEnsemble b = simulate_particles(m, ControlProcess::constant(0.2), g, 2000, RngStreams(6));
    set_worker_count(1);
    CHECK(a.x == b.x);
    CHECK(a.mean == b.mean);
    CHECK(evaluate_cost(m, a).value == evaluate_cost(m, b).value);
}
