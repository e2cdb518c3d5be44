#include "mfsmp/forward.hpp"

#include <cmath>
#include <string>

#include "mfsmp/parallel.hpp"

namespace mfsmp {

void check_grid_matches(const ModelSpec& model, const TimeGrid& grid) {
    if (grid.s() != model.s || grid.T() != model.T)
        throw ModelError("grid horizon does not match the model horizon");
}

ParticleEnsemble simulate_particles(const ModelSpec& model, const ControlProcess& control, const TimeGrid& grid,
                                    int particles, const RngStreams& streams) {
    check_grid_matches(model, grid);
    return simulate_particles(
        model, control, std::make_shared<const NoiseBlock>(sample_noise(streams, grid, model.jumps, particles)));
}

ParticleEnsemble simulate_particles(const ModelSpec& model, const ControlProcess& control,
                                    std::shared_ptr<const NoiseBlock> noise) {
    const TimeGrid& grid = noise->grid;
    check_grid_matches(model, grid);
    control.check_steps(grid.steps());
    if (noise->atoms != static_cast<int>(model.jumps.size()))
        throw ModelError("noise block atom count does not match the jump measure");

    const int N = noise->particles, M = grid.steps(), A = noise->atoms;
    const double dt = grid.dt();
    const auto& atoms = model.jumps.atoms();

    ParticleEnsemble ens;
    ens.grid = grid;
    ens.particles = N;
    ens.noise = noise;
    ens.x.assign(static_cast<std::size_t>(M + 1) * N, model.initial_state);
    ens.mean.assign(M + 1, 0.0);
    ens.control.per_particle = !control.open_loop();
    ens.control.particles = N;
    ens.control.values.assign(ens.control.per_particle ? static_cast<std::size_t>(M) * N : M, 0.0);
    if (!ens.control.per_particle)
        for (int i = 0; i < M; ++i) ens.control.values[i] = control.value(i, model.controls);

    std::vector<char> active(N, 0);
    std::vector<int> failed(N, -1);
    ens.mean[0] = ordered_mean({ens.node(0), static_cast<std::size_t>(N)});

    for (int i = 0; i < M; ++i) {
        const double t = grid.node(i), m = ens.mean[i];
        const double* xi = ens.node(i);
        double* xn = ens.x.data() + static_cast<std::size_t>(i + 1) * N;
        parallel_for(N, [&](int begin, int end) {
            for (int j = begin; j < end; ++j) {
                const double x = xi[j];
                double u;
                if (ens.control.per_particle) {
                    u = control.value(i, t, x, m, model.controls);
                    ens.control.values[static_cast<std::size_t>(i) * N + j] = u;
                } else {
                    u = ens.control.values[i];
                }
                double next = x + model.f(t, x, m, u).v * dt + model.sigma(t, x, m, u).v * noise->increment(i, j);
                for (int k = 0; k < A; ++k) {
                    const double gv = model.g(t, x, u, atoms[k].mark).v;
                    if (gv != 0.0) active[j] = 1;
                    next += gv * noise->compensated(i, j, k, atoms[k].weight);
                }
                if (!std::isfinite(next) || std::abs(next) > kOverflowGuard) {
                    if (failed[j] < 0) failed[j] = i;
                }
                xn[j] = next;
            }
        });
        for (int j = 0; j < N; ++j)
            if (failed[j] >= 0)
                throw SimulationError("state overflow at step " + std::to_string(failed[j]) + " (particle " +
                                      std::to_string(j) + ")");
        ens.mean[i + 1] = ordered_mean({xn, static_cast<std::size_t>(N)});
    }
    for (char a : active)
        if (a) ens.jumps_active = true;
    return ens;
}

std::vector<double> particle_costs(const ModelSpec& model, const ParticleEnsemble& ens) {
    check_grid_matches(model, ens.grid);
    const int N = ens.particles, M = ens.grid.steps();
    const double dt = ens.grid.dt();
    std::vector<double> cost(N, 0.0);
    parallel_for(N, [&](int begin, int end) {
        for (int j = begin; j < end; ++j) {
            double c = 0.0;
            for (int i = 0; i < M; ++i)
                c += model.ell(ens.grid.node(i), ens.state(j, i), ens.mean[i], ens.u(j, i)).v * dt;
            cost[j] = c + model.h(ens.state(j, M), ens.mean[M]).v;
        }
    });
    return cost;
}

CostEstimate evaluate_cost(const ModelSpec& model, const ParticleEnsemble& ens) {
    const auto cost = particle_costs(model, ens);
    const auto [m, sd] = mean_and_sd(cost);
    return {m, sd / std::sqrt(static_cast<double>(cost.size()))};
}

double check_state_moments(const ParticleEnsemble& ens, double q) {
    const int N = ens.particles, M = ens.grid.steps();
    std::vector<double> sup(N, 0.0);
    for (int i = 0; i <= M; ++i) {
        const double* xi = ens.node(i);
        for (int j = 0; j < N; ++j) sup[j] = std::max(sup[j], std::pow(std::abs(xi[j]), q));
    }
    return ordered_mean(sup);
}

}  // namespace mfsmp
