#include "mfsmp/variation.hpp"

#include <cmath>
#include <limits>

#include "mfsmp/parallel.hpp"

namespace mfsmp {

SpikeWindow snap_spike(const SpikeSpec& spike, const TimeGrid& grid) {
    if (!(spike.eps > 0.0)) throw ModelError("spike width must be positive");
    const double dt = grid.dt();
    SpikeWindow w;
    w.begin = static_cast<int>(std::lround((spike.t0 - grid.s()) / dt));
    const int len = std::max(1, static_cast<int>(std::lround(spike.eps / dt)));
    w.end = w.begin + len;
    if (w.begin < 0 || w.end > grid.steps()) throw ModelError("spike window leaves the time horizon");
    w.t0 = grid.node(w.begin);
    w.eps = len * dt;
    return w;
}

ControlProcess spike_control(const ControlProcess& u_star, const SpikeSpec& spike, const TimeGrid& grid,
                             const ControlSet& controls) {
    if (!controls.contains(spike.u_spike)) throw ModelError("control out of bounds");
    const SpikeWindow w = snap_spike(spike, grid);
    if (!u_star.open_loop()) return u_star.with_override(w.begin, w.end, spike.u_spike);
    auto values = u_star.values(grid.steps(), controls);
    for (int i = w.begin; i < w.end; ++i) values[i] = spike.u_spike;
    return ControlProcess::piecewise(std::move(values));
}

namespace {

void guard(double v, int step) {
    if (!std::isfinite(v) || std::abs(v) > kOverflowGuard)
        throw SimulationError("variation overflow at step " + std::to_string(step));
}

// Coefficient jets along the reference path at (j, i), at the reference control
// and at the spike value.
struct LocalCoefficients {
    Jet f, s, fa, sa;
    std::vector<JumpJet> g, ga;
};

LocalCoefficients local(const ModelSpec& model, const ParticleEnsemble& star, int j, int i, bool in_window,
                        double u_spike) {
    const double t = star.grid.node(i), x = star.state(j, i), m = star.mean[i], u = star.u(j, i);
    LocalCoefficients c;
    c.f = model.f(t, x, m, u);
    c.s = model.sigma(t, x, m, u);
    const double ua = in_window ? model.controls.clamp(u_spike) : u;
    c.fa = in_window ? model.f(t, x, m, ua) : c.f;
    c.sa = in_window ? model.sigma(t, x, m, ua) : c.s;
    for (const auto& atom : model.jumps.atoms()) {
        c.g.push_back(model.g(t, x, u, atom.mark));
        c.ga.push_back(in_window ? model.g(t, x, ua, atom.mark) : c.g.back());
    }
    return c;
}

}  // namespace

std::vector<double> simulate_first_variation(const ModelSpec& model, const ParticleEnsemble& star,
                                             const SpikeWindow& window, double u_spike) {
    const int N = star.particles, M = star.grid.steps();
    const double dt = star.grid.dt();
    const auto& atoms = model.jumps.atoms();
    const NoiseBlock& noise = *star.noise;
    std::vector<double> x1(static_cast<std::size_t>(M + 1) * N, 0.0);
    for (int i = 0; i < M; ++i) {
        const double* cur = x1.data() + static_cast<std::size_t>(i) * N;
        double* nxt = x1.data() + static_cast<std::size_t>(i + 1) * N;
        const double m1 = ordered_mean({cur, static_cast<std::size_t>(N)});
        const bool in = window.contains(i);
        parallel_for(N, [&](int begin, int end) {
            for (int j = begin; j < end; ++j) {
                const LocalCoefficients c = local(model, star, j, i, in, u_spike);
                const double v = cur[j];
                double next = v + (c.f.x * v + c.f.y * m1 + (c.fa.v - c.f.v)) * dt +
                              (c.s.x * v + c.s.y * m1 + (c.sa.v - c.s.v)) * noise.increment(i, j);
                for (std::size_t k = 0; k < atoms.size(); ++k)
                    next += (c.g[k].x * v + (c.ga[k].v - c.g[k].v)) *
                            noise.compensated(i, j, static_cast<int>(k), atoms[k].weight);
                nxt[j] = next;
            }
        });
        for (int j = 0; j < N; ++j) guard(nxt[j], i);
    }
    return x1;
}

std::vector<double> simulate_second_variation(const ModelSpec& model, const ParticleEnsemble& star,
                                              const std::vector<double>& x1, const SpikeWindow& window,
                                              double u_spike, bool source_times_x1) {
    const int N = star.particles, M = star.grid.steps();
    const double dt = star.grid.dt();
    const auto& atoms = model.jumps.atoms();
    const NoiseBlock& noise = *star.noise;
    std::vector<double> x2(static_cast<std::size_t>(M + 1) * N, 0.0);
    for (int i = 0; i < M; ++i) {
        const std::size_t off = static_cast<std::size_t>(i) * N;
        const double* cur = x2.data() + off;
        double* nxt = x2.data() + off + N;
        const double m2 = ordered_mean({cur, static_cast<std::size_t>(N)});
        const bool in = window.contains(i);
        parallel_for(N, [&](int begin, int end) {
            for (int j = begin; j < end; ++j) {
                const LocalCoefficients c = local(model, star, j, i, in, u_spike);
                const double v = cur[j], y1 = x1[off + j];
                const double src = source_times_x1 ? y1 : 1.0;
                const double q = 0.5 * y1 * y1;
                double next = v + (c.f.x * v + c.f.y * m2 + c.f.xx * q + (c.fa.x - c.f.x) * src) * dt +
                              (c.s.x * v + c.s.y * m2 + c.s.xx * q + (c.sa.x - c.s.x) * src) * noise.increment(i, j);
                for (std::size_t k = 0; k < atoms.size(); ++k)
                    next += (c.g[k].x * v + c.g[k].xx * q + (c.ga[k].x - c.g[k].x) * src) *
                            noise.compensated(i, j, static_cast<int>(k), atoms[k].weight);
                nxt[j] = next;
            }
        });
        for (int j = 0; j < N; ++j) guard(nxt[j], i);
    }
    return x2;
}

VariationBundle simulate_variation_bundle(const ModelSpec& model, const ParticleEnsemble& star,
                                          const ControlProcess& u_star, const SpikeSpec& spike,
                                          bool source_times_x1) {
    VariationBundle b;
    b.star = &star;
    b.window = snap_spike(spike, star.grid);
    b.u_spike = spike.u_spike;
    b.source_times_x1 = source_times_x1;
    b.perturbed = simulate_particles(model, spike_control(u_star, spike, star.grid, model.controls), star.noise);
    b.x1 = simulate_first_variation(model, star, b.window, spike.u_spike);
    b.x2 = simulate_second_variation(model, star, b.x1, b.window, spike.u_spike, source_times_x1);
    return b;
}

double loglog_slope(const std::vector<double>& eps, const std::vector<double>& values) {
    const std::size_t n = eps.size();
    double sx = 0, sy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sx += std::log(eps[k]);
        sy += std::log(values[k]);
    }
    const double mx = sx / n, my = sy / n;
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double dx = std::log(eps[k]) - mx;
        sxy += dx * (std::log(values[k]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

namespace {

struct RateQuantity {
    const char* name;
    const char* bound;
    double exponent_per_k;  // exponent = exponent_per_k * k, or fixed when k-independent
    bool k_scaled;
    double threshold_ratio;
    bool strict;
};

const RateQuantity kQuantities[] = {
    {"E sup|x1|^2k", "<= C eps^k", 1.0, true, 0.8, false},
    {"sup|E x1|^2", "<= eps rho(eps)", 1.0, false, 1.0, true},
    {"E sup|x2|^2k", "<= C eps^2k", 2.0, true, 0.85, false},
    {"E sup|x_eps - x_star|^2k", "<= C eps^k", 1.0, true, 0.8, false},
    {"E sup|x_eps - x_star - x1|^2k", "<= C eps^2k", 2.0, true, 0.8, false},
    {"E sup|x_eps - x_star - x1 - x2|^2k", "<= C eps^2k rho(eps)", 2.0, true, 0.8, false},
};
constexpr int kRateRows = 6;

}  // namespace

RateReport estimate_rates(const ModelSpec& model, const ControlProcess& u_star, const std::vector<double>& eps_ladder,
                          const RateOptions& opt) {
    if (eps_ladder.size() < 4) throw ModelError("rate ladder needs at least four points");
    if (opt.seeds.size() < 3) throw ModelError("rate estimation needs at least three seeds");
    if (opt.k < 1) throw ModelError("moment order k must be at least 1");
    const TimeGrid grid(model.s, model.T, opt.steps);
    const int N = opt.particles, M = grid.steps();
    const double p = 2.0 * opt.k;

    RateReport rep;
    rep.options = opt;
    for (double e : eps_ladder) rep.eps.push_back(snap_spike({opt.t0, e, opt.u_spike}, grid).eps);
    const std::size_t L = rep.eps.size(), S = opt.seeds.size();

    // values[row][seed][ladder]
    std::vector<std::vector<std::vector<double>>> values(kRateRows, std::vector<std::vector<double>>(S));
    std::vector<double> floors(S);
    for (std::size_t sd = 0; sd < S; ++sd) {
        const ParticleEnsemble star = simulate_particles(model, u_star, grid, N, RngStreams(opt.seeds[sd]));
        std::vector<double> sup_star(N, 0.0);
        for (int i = 0; i <= M; ++i)
            for (int j = 0; j < N; ++j) sup_star[j] = std::max(sup_star[j], std::abs(star.state(j, i)));
        floors[sd] = 1e-9 * std::max(1.0, ordered_mean(sup_star));

        for (std::size_t l = 0; l < L; ++l) {
            const auto b =
                simulate_variation_bundle(model, star, u_star, {opt.t0, rep.eps[l], opt.u_spike}, opt.source_times_x1);
            std::vector<double> s1(N, 0), s3(N, 0), s4(N, 0), s5(N, 0), s6(N, 0);
            double s2 = 0.0;
            for (int i = 0; i <= M; ++i) {
                const std::size_t off = static_cast<std::size_t>(i) * N;
                s2 = std::max(s2, std::abs(ordered_mean({b.x1.data() + off, static_cast<std::size_t>(N)})));
                for (int j = 0; j < N; ++j) {
                    const double y1 = b.x1[off + j], y2 = b.x2[off + j];
                    const double diff = b.perturbed.x[off + j] - star.x[off + j];
                    s1[j] = std::max(s1[j], std::abs(y1));
                    s3[j] = std::max(s3[j], std::abs(y2));
                    s4[j] = std::max(s4[j], std::abs(diff));
                    s5[j] = std::max(s5[j], std::abs(diff - y1));
                    s6[j] = std::max(s6[j], std::abs(b.remainder(j, i)));
                }
            }
            auto moment = [&](std::vector<double>& sup) {
                for (double& v : sup) v = std::pow(v, p);
                return ordered_mean(sup);
            };
            values[0][sd].push_back(moment(s1));
            values[1][sd].push_back(s2 * s2);
            values[2][sd].push_back(moment(s3));
            values[3][sd].push_back(moment(s4));
            values[4][sd].push_back(moment(s5));
            values[5][sd].push_back(moment(s6));
        }
    }

    rep.pass = true;
    for (int r = 0; r < kRateRows; ++r) {
        const RateQuantity& q = kQuantities[r];
        RateRow row;
        row.quantity = q.name;
        row.bound = q.bound;
        row.bound_exponent = q.k_scaled ? q.exponent_per_k * opt.k : q.exponent_per_k;
        row.threshold = q.threshold_ratio * row.bound_exponent;
        row.strict = q.strict;
        row.n_seeds = static_cast<int>(S);
        row.mean_values.assign(L, 0.0);
        std::size_t at_floor = 0;
        for (std::size_t sd = 0; sd < S; ++sd)
            for (std::size_t l = 0; l < L; ++l) {
                const double v = values[r][sd][l];
                row.mean_values[l] += v / S;
                const double root = std::pow(v, 1.0 / (r == 1 ? 2.0 : p));
                if (!(root > floors[sd])) ++at_floor;
            }
        if (at_floor == S * L) {
            row.status = "degenerate";
            row.slope = row.slope_stderr = std::numeric_limits<double>::quiet_NaN();
            row.pass = true;
        } else if (at_floor > 0) {
            row.status = "undefined";
            row.slope = row.slope_stderr = std::numeric_limits<double>::quiet_NaN();
            row.pass = false;
        } else {
            row.status = "fitted";
            for (std::size_t sd = 0; sd < S; ++sd) row.seed_slopes.push_back(loglog_slope(rep.eps, values[r][sd]));
            const auto [m, sdev] = mean_and_sd(row.seed_slopes);
            row.slope = m;
            row.slope_stderr = sdev / std::sqrt(static_cast<double>(S));
            row.pass = q.strict ? row.slope > row.threshold : row.slope >= row.threshold;
        }
        rep.pass = rep.pass && row.pass;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

DualityResidual make_residual(double lhs, double rhs) {
    DualityResidual r;
    r.lhs = lhs;
    r.rhs = rhs;
    r.residual = lhs - rhs;
    r.scale = std::max({std::abs(lhs), std::abs(rhs), 1e-12});
    r.relative = std::abs(r.residual) / r.scale;
    return r;
}

namespace {

void check_bundle(const VariationBundle& b, const BackwardSolution& adj) {
    if (!b.star) throw ModelError("variation bundle has no reference ensemble");
    if (!(adj.grid == b.star->grid) || adj.particles != b.star->particles)
        throw AdjointError("adjoint and variation bundle live on different ensembles");
}

}  // namespace

DualityResidual check_duality(int order, const ModelSpec& model, const VariationBundle& b, const AdjointTriple& adj1) {
    if (order != 1 && order != 2) throw ModelError("duality order must be 1 or 2");
    check_bundle(b, adj1);
    const ParticleEnsemble& star = *b.star;
    const int N = star.particles, M = star.grid.steps();
    const double dt = star.grid.dt();
    const auto& atoms = model.jumps.atoms();
    const std::vector<double>& var = order == 1 ? b.x1 : b.x2;

    std::vector<double> lhs(N);
    for (int j = 0; j < N; ++j) lhs[j] = adj1.Psi(j, M) * var[b.at(j, M)];

    std::vector<double> acc(N, 0.0), ly(N);
    for (int i = 0; i < M; ++i) {
        const double t = star.grid.node(i), m = star.mean[i];
        const bool in = b.window.contains(i);
        for (int j = 0; j < N; ++j) ly[j] = model.ell(t, star.state(j, i), m, star.u(j, i)).y;
        const double ely = ordered_mean(ly);
        parallel_for(N, [&](int begin, int end) {
            for (int j = begin; j < end; ++j) {
                const double x = star.state(j, i), u = star.u(j, i);
                const double psi = adj1.Psi(j, i), kk = adj1.K(i, x);
                double term = var[b.at(j, i)] * (model.ell(t, x, m, u).x + ely);
                if (order == 1) {
                    if (in) {
                        const LocalCoefficients c = local(model, star, j, i, true, b.u_spike);
                        term += psi * (c.fa.v - c.f.v) + kk * (c.sa.v - c.s.v);
                        for (std::size_t k = 0; k < atoms.size(); ++k)
                            term += atoms[k].weight * adj1.gamma(i, static_cast<int>(k), x) * (c.ga[k].v - c.g[k].v);
                    }
                } else {
                    const LocalCoefficients c = local(model, star, j, i, in, b.u_spike);
                    const double y1 = b.x1[b.at(j, i)];
                    const double q = 0.5 * y1 * y1;
                    const double src = in ? (b.source_times_x1 ? y1 : 1.0) : 0.0;
                    term += psi * (c.f.xx * q + (c.fa.x - c.f.x) * src) + kk * (c.s.xx * q + (c.sa.x - c.s.x) * src);
                    for (std::size_t k = 0; k < atoms.size(); ++k)
                        term += atoms[k].weight * adj1.gamma(i, static_cast<int>(k), x) *
                                (c.g[k].xx * q + (c.ga[k].x - c.g[k].x) * src);
                }
                acc[j] += term * dt;
            }
        });
    }
    return make_residual(ordered_mean(lhs), ordered_mean(acc));
}

SecondDualityReport check_second_duality(const ModelSpec& model, const VariationBundle& b, const AdjointTriple& adj1,
                                         const SecondOrderAdjoint& adj2) {
    check_bundle(b, adj1);
    check_bundle(b, adj2);
    const ParticleEnsemble& star = *b.star;
    const int N = star.particles, M = star.grid.steps();
    const double dt = star.grid.dt();
    const auto& atoms = model.jumps.atoms();
    const std::size_t A = atoms.size();

    std::vector<double> lhs(N);
    for (int j = 0; j < N; ++j) {
        const double y1 = b.x1[b.at(j, M)];
        lhs[j] = model.h(star.state(j, M), star.mean[M]).xx * y1 * y1;
    }

    std::vector<double> full(N, 0.0), shown(N, 0.0);
    for (int i = 0; i < M; ++i) {
        const double t = star.grid.node(i), m = star.mean[i];
        const bool in = b.window.contains(i);
        const double ind = in ? 1.0 : 0.0;
        const double m1 = ordered_mean({b.x1.data() + static_cast<std::size_t>(i) * N, static_cast<std::size_t>(N)});
        parallel_for(N, [&](int begin, int end) {
            for (int j = begin; j < end; ++j) {
                const double x = star.state(j, i), l_xx = model.ell(t, x, m, star.u(j, i)).xx;
                const LocalCoefficients c = local(model, star, j, i, in, b.u_spike);
                const double y1 = b.x1[b.at(j, i)];
                const double psi = adj1.Psi(j, i), kk = adj1.K(i, x);
                const double q = adj2.Q(j, i), r = adj2.R(i, x);

                double hxx = c.f.xx * psi + c.s.xx * kk - l_xx;
                for (std::size_t k = 0; k < A; ++k)
                    hxx += atoms[k].weight * c.g[k].xx * adj1.gamma(i, static_cast<int>(k), x);

                const double df = (c.fa.v - c.f.v) * ind, ds = (c.sa.v - c.s.v) * ind;
                const double drift = c.f.x * y1 + c.f.y * m1 + df;
                const double diff = c.s.x * y1 + c.s.y * m1 + ds;

                // Q driver without the jump part, then jump contributions.
                double driver = 2.0 * c.f.x * q + c.s.x * c.s.x * q + 2.0 * c.s.x * r + hxx;
                double integrand = q * (2.0 * y1 * drift + diff * diff) + 2.0 * r * y1 * diff;
                double dg2 = 0.0, gx2 = 0.0, gam_dg2 = 0.0;
                for (std::size_t k = 0; k < A; ++k) {
                    const double w = atoms[k].weight, gx = c.g[k].x;
                    const double big = adj2.Gamma(i, static_cast<int>(k), x);
                    const double dg = (c.ga[k].v - c.g[k].v) * ind;
                    const double jmp = gx * y1 + dg;
                    driver += w * (big + q) * gx * gx + 2.0 * w * big * gx;
                    integrand += w * (q * jmp * jmp + big * (2.0 * y1 * jmp + jmp * jmp));
                    dg2 += w * dg * dg;
                    gx2 += w * gx * gx;
                    gam_dg2 += w * big * dg * dg;
                }
                integrand -= y1 * y1 * driver;
                full[j] += integrand * dt;

                const double displayed = -hxx * y1 * y1 + q * c.s.y * c.s.y * m1 * m1 + q * (ds * ds + dg2) +
                                         gam_dg2 + 2.0 * m1 * y1 * (q * c.f.y + q * c.s.x * c.s.y + r * c.s.y) +
                                         q * gx2 * y1 * y1;
                shown[j] += displayed * dt;
            }
        });
    }
    const double l = ordered_mean(lhs);
    return {make_residual(l, -ordered_mean(full)), make_residual(l, -ordered_mean(shown))};
}

RepresentationReport check_exponential_representation(const ModelSpec& model, const VariationBundle& b) {
    if (!b.star) throw ModelError("variation bundle has no reference ensemble");
    const ParticleEnsemble& star = *b.star;
    const int N = star.particles, M = star.grid.steps();
    const double dt = star.grid.dt();
    const auto& atoms = model.jumps.atoms();
    const NoiseBlock& noise = *star.noise;

    std::vector<double> eta(N, 1.0), acc(N, 0.0);
    RepresentationReport rep;
    double scale = 0.0;
    std::vector<double> dev(N), mag(N);
    for (int i = 0; i < M; ++i) {
        const bool in = b.window.contains(i);
        const double ind = in ? 1.0 : 0.0;
        const double m1 = ordered_mean({b.x1.data() + static_cast<std::size_t>(i) * N, static_cast<std::size_t>(N)});
        parallel_for(N, [&](int begin, int end) {
            for (int j = begin; j < end; ++j) {
                const LocalCoefficients c = local(model, star, j, i, in, b.u_spike);
                const double e = eta[j], dw = noise.increment(i, j);
                const double ds = (c.sa.v - c.s.v) * ind;
                double drift = c.f.y * m1 + (c.fa.v - c.f.v) * ind - c.s.x * c.s.y * m1 - c.s.x * ds;
                double jump_src = 0.0, eta_drift = c.f.x - c.s.x * c.s.x, eta_jump = 0.0;
                for (std::size_t k = 0; k < atoms.size(); ++k) {
                    const double w = atoms[k].weight, gx = c.g[k].x, dg = (c.ga[k].v - c.g[k].v) * ind;
                    const double comp = noise.compensated(i, j, static_cast<int>(k), w);
                    drift -= w * gx * dg;
                    jump_src += dg * comp;
                    eta_drift -= w * gx * gx;
                    eta_jump += gx * comp;
                }
                acc[j] += e * (drift * dt + (c.s.y * m1 + ds) * dw + jump_src);
                eta[j] = e - e * (eta_drift * dt + c.s.x * dw + eta_jump);
            }
        });
        for (int j = 0; j < N; ++j) {
            const double e = eta[j];
            if (!(e > 0.0) || std::abs(std::log(e)) > 50.0)
                throw SimulationError("exponential process left the range exp(+-50) at step " + std::to_string(i));
            rep.eta_min = std::min(rep.eta_min, e);
            rep.eta_max = std::max(rep.eta_max, e);
            const double direct = b.x1[b.at(j, i + 1)];
            dev[j] = std::abs(direct - acc[j] / e);
            mag[j] = std::abs(direct);
        }
        rep.deviation = std::max(rep.deviation, ordered_mean(dev));
        scale = std::max(scale, ordered_mean(mag));
    }
    rep.relative_deviation = scale > 0.0 ? rep.deviation / scale : 0.0;
    return rep;
}

ProductRuleReport check_integration_by_parts(const ParticleEnsemble& a, const ParticleEnsemble& b,
                                             const ModelSpec& model_a, const ModelSpec& model_b) {
    const bool same_noise = a.noise == b.noise || (a.noise->seed == b.noise->seed && a.grid == b.grid &&
                                                   a.particles == b.particles && a.noise->atoms == b.noise->atoms);
    if (!same_noise) throw ModelError("product rule check needs two ensembles driven by the same noise");
    if (model_a.jumps.size() != model_b.jumps.size()) throw ModelError("models use different jump measures");
    const int N = a.particles, M = a.grid.steps();
    const double dt = a.grid.dt();
    const auto& atoms = model_a.jumps.atoms();

    std::vector<double> lhs(N), rhs(N), res(N);
    parallel_for(N, [&](int begin, int end) {
        for (int j = begin; j < end; ++j) {
            double r = a.state(j, 0) * b.state(j, 0);
            for (int i = 0; i < M; ++i) {
                const double t = a.grid.node(i);
                const double xa = a.state(j, i), xb = b.state(j, i);
                const double ua = a.u(j, i), ub = b.u(j, i);
                double bracket = model_a.sigma(t, xa, a.mean[i], ua).v * model_b.sigma(t, xb, b.mean[i], ub).v;
                for (const auto& atom : atoms)
                    bracket += atom.weight * model_a.g(t, xa, ua, atom.mark).v * model_b.g(t, xb, ub, atom.mark).v;
                r += xa * (b.state(j, i + 1) - xb) + xb * (a.state(j, i + 1) - xa) + bracket * dt;
            }
            lhs[j] = a.state(j, M) * b.state(j, M);
            rhs[j] = r;
            res[j] = lhs[j] - r;
        }
    });
    ProductRuleReport rep;
    rep.lhs = ordered_mean(lhs);
    rep.rhs = ordered_mean(rhs);
    const auto [m, sd] = mean_and_sd(res);
    rep.residual = m;
    rep.std_error = sd / std::sqrt(static_cast<double>(N));
    rep.relative = std::abs(m) / std::max({std::abs(rep.lhs), std::abs(rep.rhs), 1e-12});
    return rep;
}

}  // namespace mfsmp
