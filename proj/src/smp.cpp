#include "mfsmp/smp.hpp"

#include <cmath>
#include <limits>

#include "mfsmp/parallel.hpp"

namespace mfsmp {

double smp_functional(const ModelSpec& model, const SmpNode& n, double u) {
    const auto& atoms = model.jumps.atoms();
    const double us = n.u_star;
    const double ds = model.sigma(n.t, n.x, n.y, u).v - model.sigma(n.t, n.x, n.y, us).v;
    double value = n.psi * (model.f(n.t, n.x, n.y, u).v - model.f(n.t, n.x, n.y, us).v) + n.k * ds -
                   (model.ell(n.t, n.x, n.y, u).v - model.ell(n.t, n.x, n.y, us).v) + 0.5 * ds * ds * n.q;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        const double dg = model.g(n.t, n.x, u, atoms[k].mark).v - model.g(n.t, n.x, us, atoms[k].mark).v;
        value += atoms[k].weight * (n.gamma[k] * dg + 0.5 * dg * dg * (n.q + n.big_gamma[k]));
    }
    return value;
}

SmpVerdict verify_maximum_principle(const ModelSpec& model, const ControlProcess& candidate, const SmpOptions& opt) {
    const TimeGrid grid(model.s, model.T, opt.steps);
    const ParticleEnsemble ens = simulate_particles(model, candidate, grid, opt.particles, RngStreams(opt.seed));
    const AdjointOptions aopt{opt.method, true};
    const AdjointTriple adj1 = solve_first_adjoint(model, ens, aopt);
    const SecondOrderAdjoint adj2 = solve_second_adjoint(model, ens, adj1, aopt);

    SmpVerdict v;
    v.options = opt;
    v.mesh = model.controls.mesh(opt.mesh_points);
    v.steps = grid.steps();
    v.cost = evaluate_cost(model, ens).value;
    v.scale = std::max(1.0, std::abs(v.cost));
    v.tolerance = opt.tolerance >= 0.0 ? opt.tolerance : 0.02 * v.scale;

    const int N = ens.particles, M = grid.steps(), L = static_cast<int>(v.mesh.size());
    const int A = adj1.atoms;
    v.mean_values.assign(static_cast<std::size_t>(M) * L, 0.0);
    std::vector<double> buf(static_cast<std::size_t>(L) * N);
    std::vector<double> gam(static_cast<std::size_t>(N) * A), big(static_cast<std::size_t>(N) * A);
    v.worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < M; ++i) {
        const double t = grid.node(i), m = ens.mean[i];
        parallel_for(N, [&](int begin, int end) {
            for (int j = begin; j < end; ++j) {
                const double x = ens.state(j, i);
                for (int k = 0; k < A; ++k) {
                    gam[static_cast<std::size_t>(j) * A + k] = adj1.gamma(i, k, x);
                    big[static_cast<std::size_t>(j) * A + k] = adj2.Gamma(i, k, x);
                }
                SmpNode node{t, x, m, ens.u(j, i), adj1.Psi(j, i), adj1.K(i, x), adj2.Q(j, i),
                             {gam.data() + static_cast<std::size_t>(j) * A, static_cast<std::size_t>(A)},
                             {big.data() + static_cast<std::size_t>(j) * A, static_cast<std::size_t>(A)}};
                for (int l = 0; l < L; ++l)
                    buf[static_cast<std::size_t>(l) * N + j] = smp_functional(model, node, v.mesh[l]);
            }
        });
        for (int l = 0; l < L; ++l) {
            const double mean = ordered_mean({buf.data() + static_cast<std::size_t>(l) * N, static_cast<std::size_t>(N)});
            v.mean_values[static_cast<std::size_t>(i) * L + l] = mean;
            if (mean > v.worst) {
                v.worst = mean;
                v.worst_step = i;
                v.worst_u = v.mesh[l];
            }
        }
    }
    v.pass = v.worst <= v.tolerance;
    return v;
}

GapReport cost_gap(const ModelSpec& model, const SpikeSpec& spike, const ControlProcess& u_star, int particles,
                   int steps, const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw ModelError("cost gap needs at least one seed");
    const TimeGrid grid(model.s, model.T, steps);
    GapReport rep;
    rep.window = snap_spike(spike, grid);
    const ControlProcess perturbed = spike_control(u_star, spike, grid, model.controls);
    std::vector<double> pooled;
    for (auto seed : seeds) {
        const auto noise =
            std::make_shared<const NoiseBlock>(sample_noise(RngStreams(seed), grid, model.jumps, particles));
        const auto c0 = particle_costs(model, simulate_particles(model, u_star, noise));
        const auto c1 = particle_costs(model, simulate_particles(model, perturbed, noise));
        std::vector<double> d(particles);
        for (int j = 0; j < particles; ++j) d[j] = c1[j] - c0[j];
        rep.seed_gaps.push_back(ordered_mean(d));
        pooled.insert(pooled.end(), d.begin(), d.end());
    }
    const auto [m, sd] = mean_and_sd(pooled);
    rep.gap = m;
    rep.std_error = sd / std::sqrt(static_cast<double>(pooled.size()));
    rep.pass = rep.gap >= -3.0 * rep.std_error;
    return rep;
}

namespace {

double fd_u(double u) { return 1e-6 * std::max(1.0, std::abs(u)); }

}  // namespace

double DiscreteProblem::cost(const std::vector<double>& u) const {
    return evaluate_cost(*model, simulate_particles(*model, ControlProcess::piecewise(u), noise)).value;
}

double DiscreteProblem::cost_and_gradient(const std::vector<double>& u, std::vector<double>& grad) const {
    const ModelSpec& mdl = *model;
    const NoiseBlock& nb = *noise;
    const int N = nb.particles, M = nb.grid.steps();
    const double dt = nb.grid.dt();
    const auto& atoms = mdl.jumps.atoms();
    const ParticleEnsemble fw = simulate_particles(mdl, ControlProcess::piecewise(u), noise);
    const double J = evaluate_cost(mdl, fw).value;
    grad.assign(M, 0.0);

    // lambda_i^j = N * dJ/dx_i^j
    std::vector<double> lam(N), nxt(N), coupling(N), du(N);
    {
        const double* xm = fw.x.data() + static_cast<std::size_t>(M) * N;
        std::vector<double> hy(N);
        for (int j = 0; j < N; ++j) hy[j] = mdl.h(xm[j], fw.mean[M]).y;
        const double ehy = ordered_mean(hy);
        for (int j = 0; j < N; ++j) lam[j] = mdl.h(xm[j], fw.mean[M]).x + ehy;
    }
    for (int i = M - 1; i >= 0; --i) {
        nxt.swap(lam);
        const double t = nb.grid.node(i), m = fw.mean[i], ui = u[i], h = fd_u(ui);
        const double* xi = fw.x.data() + static_cast<std::size_t>(i) * N;
        parallel_for(N, [&](int begin, int end) {
            for (int j = begin; j < end; ++j) {
                const double x = xi[j], dw = nb.increment(i, j), l1 = nxt[j];
                const Jet f = mdl.f(t, x, m, ui), s = mdl.sigma(t, x, m, ui), l = mdl.ell(t, x, m, ui);
                const double f_u = (mdl.f(t, x, m, ui + h).v - mdl.f(t, x, m, ui - h).v) / (2 * h);
                const double s_u = (mdl.sigma(t, x, m, ui + h).v - mdl.sigma(t, x, m, ui - h).v) / (2 * h);
                const double l_u = (mdl.ell(t, x, m, ui + h).v - mdl.ell(t, x, m, ui - h).v) / (2 * h);
                double growth = 1.0 + f.x * dt + s.x * dw, sens = f_u * dt + s_u * dw;
                for (std::size_t k = 0; k < atoms.size(); ++k) {
                    const double comp = nb.compensated(i, j, static_cast<int>(k), atoms[k].weight);
                    growth += mdl.g(t, x, ui, atoms[k].mark).x * comp;
                    sens += (mdl.g(t, x, ui + h, atoms[k].mark).v - mdl.g(t, x, ui - h, atoms[k].mark).v) / (2 * h) *
                            comp;
                }
                lam[j] = l1 * growth + l.x * dt;
                coupling[j] = l1 * (f.y * dt + s.y * dw) + l.y * dt;
                du[j] = l1 * sens + l_u * dt;
            }
        });
        const double c = ordered_mean(coupling);
        for (int j = 0; j < N; ++j) lam[j] += c;
        grad[i] = ordered_mean(du) / dt;
    }
    return J;
}

OptimumResult find_optimum_oracle(const ModelSpec& model, const OracleOptions& opt) {
    const TimeGrid grid(model.s, model.T, opt.steps);
    DiscreteProblem prob{&model,
                         std::make_shared<const NoiseBlock>(sample_noise(RngStreams(opt.seed), grid, model.jumps,
                                                                         opt.particles))};
    const int M = grid.steps();
    const double dt = grid.dt();
    const ControlSet& A = model.controls;

    std::vector<double> u(M, A.clamp(opt.initial)), g, trial(M), g_trial;
    double J = prob.cost_and_gradient(u, g);
    OptimumResult res;
    res.trace.push_back(J);
    double alpha = 1.0;
    int non_improving = 0;

    for (int it = 0; it < opt.iterations; ++it) {
        res.iterations = it + 1;
        double J_trial = J;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            double decrease = 0.0, moved = 0.0;
            for (int i = 0; i < M; ++i) {
                trial[i] = A.clamp(u[i] - alpha * g[i]);
                decrease += g[i] * (u[i] - trial[i]) * dt;
                moved = std::max(moved, std::abs(trial[i] - u[i]));
            }
            if (moved == 0.0) break;
            J_trial = prob.cost(trial);
            if (J_trial <= J - 1e-4 * decrease) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            res.trace.push_back(J);
            if (++non_improving >= 10) {
                res.stalled = true;
                break;
            }
            alpha = 1.0;
            continue;
        }
        J_trial = prob.cost_and_gradient(trial, g_trial);
        double ss = 0.0, sy = 0.0;
        for (int i = 0; i < M; ++i) {
            const double s = trial[i] - u[i], y = g_trial[i] - g[i];
            ss += s * s;
            sy += s * y;
        }
        alpha = sy > 0.0 ? std::clamp(ss / sy, 1e-8, 1e8) : std::min(2.0 * alpha, 1e8);
        non_improving = J_trial < J ? 0 : non_improving + 1;
        u.swap(trial);
        g.swap(g_trial);
        J = J_trial;
        res.trace.push_back(J);
        if (non_improving >= 10) {
            res.stalled = true;
            break;
        }
    }
    res.values = u;
    res.cost = J;
    res.control = ControlProcess::piecewise(u);
    return res;
}

}  // namespace mfsmp
