#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfsmp/parallel.hpp"
#include "mfsmp/stochastics.hpp"

using namespace mfsmp;

TEST_CASE("philox4x32-10 known-answer vectors") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("time grid pins the last node to T") {
    const TimeGrid g(0.1, 0.7, 3);
    CHECK(g.node(3) == 0.7);
    CHECK(g.node(0) == 0.1);
    CHECK(g.dt() == doctest::Approx(0.2));
    CHECK_THROWS(TimeGrid(1.0, 1.0, 5));
    CHECK_THROWS(TimeGrid(0.0, 1.0, 0));
}

TEST_CASE("uniforms stay strictly inside (0, 1) and streams are independent of call order") {
    const ParticleStream a(42, 7);
    for (std::uint32_t i = 0; i < 1000; ++i) {
        const auto u = a.uniforms(Purpose::probe, i, 3);
        CHECK(u[0] > 0.0);
        CHECK(u[0] < 1.0);
        CHECK(u[1] > 0.0);
        CHECK(u[1] < 1.0);
    }
    CHECK(a.normal(Purpose::brownian, 5, 0) == ParticleStream(42, 7).normal(Purpose::brownian, 5, 0));
    CHECK(a.normal(Purpose::brownian, 5, 0) != ParticleStream(42, 8).normal(Purpose::brownian, 5, 0));
    CHECK(a.normal(Purpose::brownian, 5, 0) != ParticleStream(43, 7).normal(Purpose::brownian, 5, 0));
}

TEST_CASE("one-step increments are standard normal") {
    const TimeGrid g(0.0, 1.0, 1);
    const RngStreams rs(2024);
    const int n = 100000;
    std::vector<double> draws(n);
    for (int j = 0; j < n; ++j) draws[j] = sample_brownian_increments(rs.stream(j), g)[0];
    const auto [m, sd] = mean_and_sd(draws);
    CHECK(std::abs(m) < 4.0 / std::sqrt(n));
    CHECK(std::abs(sd - 1.0) < 0.01);
}

TEST_CASE("increment variance matches dt within a chi-square band") {
    const TimeGrid g(0.0, 1.0, 100);
    const RngStreams rs(9);
    std::vector<double> draws;
    for (int j = 0; j < 1000; ++j) {
        const auto inc = sample_brownian_increments(rs.stream(j), g);
        draws.insert(draws.end(), inc.begin(), inc.end());
    }
    const auto [m, sd] = mean_and_sd(draws);
    const double n = static_cast<double>(draws.size());
    // var(sample variance) = 2 dt^2 / (n - 1)
    CHECK(std::abs(sd * sd - 0.01) < 3.0 * 0.01 * std::sqrt(2.0 / (n - 1)));
    CHECK(sample_brownian_increments(rs.stream(3), g) == sample_brownian_increments(rs.stream(3), g));
}

TEST_CASE("empty measure never jumps") {
    const TimeGrid g(0.0, 1.0, 50);
    const JumpTrain t = sample_jump_measure(RngStreams(1).stream(0), g, JumpMeasure{});
    CHECK(t.total_events() == 0);
    CHECK(t.atoms == 0);
}

TEST_CASE("poisson counts: one atom of weight 2 over a horizon of 3") {
    const TimeGrid g(0.0, 3.0, 30);
    const JumpMeasure mu({{1.0, 2.0}});
    const RngStreams rs(77);
    const int n = 10000;
    std::vector<double> totals(n);
    for (int j = 0; j < n; ++j) totals[j] = sample_jump_measure(rs.stream(j), g, mu).total_events();
    const auto [m, sd] = mean_and_sd(totals);
    CHECK(std::abs(m - 6.0) < 3.0 * std::sqrt(6.0 / n));
    CHECK(sd * sd == doctest::Approx(6.0).epsilon(0.05));
}

TEST_CASE("mark frequencies for two equal atoms") {
    const TimeGrid g(0.0, 1.0, 10);
    const JumpMeasure mu({{-1.0, 1.0}, {1.0, 1.0}});
    const RngStreams rs(5);
    double plus = 0.0, total = 0.0;
    for (int j = 0; j < 10000; ++j) {
        const JumpTrain t = sample_jump_measure(rs.stream(j), g, mu);
        for (int i = 0; i < g.steps(); ++i) {
            plus += t.count(i, 1);
            total += t.events(i);
        }
    }
    const double freq = plus / total;
    CHECK(std::abs(freq - 0.5) < 3.0 * std::sqrt(0.25 / total));
}

TEST_CASE("too large an intensity per step is rejected") {
    const TimeGrid g(0.0, 1.0, 1);
    CHECK_THROWS(sample_jump_measure(RngStreams(1).stream(0), g, JumpMeasure({{1.0, 600.0}})));
}

TEST_CASE("compensated integrals") {
    const TimeGrid g(0.0, 1.0, 20);
    const JumpMeasure mu({{1.0, 2.0}});
    const RngStreams rs(31);
    SUBCASE("zero integrand gives the zero path") {
        const auto path = compensated_integral(sample_jump_measure(rs.stream(0), g, mu), g, mu,
                                               [](double, double) { return 0.0; });
        for (double v : path) CHECK(v == 0.0);
    }
    SUBCASE("unit integrand ends at count minus compensator") {
        const int n = 10000;
        std::vector<double> ends(n);
        for (int j = 0; j < n; ++j) {
            const JumpTrain t = sample_jump_measure(rs.stream(j), g, mu);
            const auto path = compensated_integral(t, g, mu, [](double, double) { return 1.0; });
            REQUIRE(path.size() == 21);
            CHECK(path.back() == doctest::Approx(t.total_events() - 2.0));
            ends[j] = path.back();
        }
        const auto [m, sd] = mean_and_sd(ends);
        CHECK(std::abs(m) < 3.0 * sd / std::sqrt(n));
    }
}

TEST_CASE("noise coarsening sums increments and counts") {
    const TimeGrid fine(0.0, 1.0, 8);
    const JumpMeasure mu({{1.0, 3.0}});
    const NoiseBlock nb = sample_noise(RngStreams(4), fine, mu, 10);
    const NoiseBlock cb = nb.coarsen(4);
    REQUIRE(cb.grid.steps() == 2);
    for (int j = 0; j < 10; ++j)
        for (int i = 0; i < 2; ++i) {
            double w = 0.0;
            int c = 0;
            for (int r = 0; r < 4; ++r) {
                w += nb.increment(4 * i + r, j);
                c += nb.count(4 * i + r, j, 0);
            }
            CHECK(cb.increment(i, j) == doctest::Approx(w));
            CHECK(cb.count(i, j, 0) == c);
        }
    CHECK_THROWS(nb.coarsen(3));
}

TEST_CASE("moment ratio for the compensated integral") {
    const TimeGrid g(0.0, 1.0, 50);
    SUBCASE("zero integrand is degenerate") {
        const BdgReport r = check_bdg_moment(JumpMeasure({{1.0, 1.0}}), g, [](double, double) { return 0.0; },
                                             1000, 1);
        CHECK(r.degenerate);
        CHECK(r.lhs == 0.0);
        CHECK(r.rhs == 0.0);
    }
    SUBCASE("unit integrand, one atom of weight 1") {
        const BdgReport r = check_bdg_moment(JumpMeasure({{1.0, 1.0}}), g, [](double, double) { return 1.0; },
                                             10000, 2);
        CHECK(r.rhs == doctest::Approx(1.0));
        CHECK(r.ratio <= 4.2);
        CHECK(std::abs(r.terminal_mean) < 4.0 * r.terminal_mean_stderr);
        // isometry: E (terminal)^2 = rhs
        CHECK(std::abs(r.terminal_second_moment - r.rhs) < 4.0 * r.terminal_second_moment_stderr);
    }
    SUBCASE("integrand mark times time") {
        const BdgReport r = check_bdg_moment(JumpMeasure({{-1.0, 1.0}, {1.0, 1.0}}), g,
                                             [](double t, double th) { return th * t; }, 10000, 3);
        CHECK(r.ratio <= 4.2);
        CHECK(r.asserted);
    }
    CHECK_THROWS(check_bdg_moment(JumpMeasure{}, g, [](double, double) { return 1.0; }, 10, 1));
}

TEST_CASE("noise block is independent of the worker count") {
    const TimeGrid g(0.0, 1.0, 16);
    const JumpMeasure mu({{-1.0, 1.0}, {1.0, 1.0}});
    set_worker_count(1);
    const NoiseBlock a = sample_noise(RngStreams(8), g, mu, 1000);
    set_worker_count(4);
    const NoiseBlock b = sample_noise(RngStreams(8), g, mu, 1000);
    set_worker_count(1);
    CHECK(a.dw == b.dw);
    CHECK(a.counts == b.counts);
}
