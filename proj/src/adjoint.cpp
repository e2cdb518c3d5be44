#include "mfsmp/adjoint.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "mfsmp/parallel.hpp"

namespace mfsmp {

AdjointMethod parse_adjoint_method(const std::string& name) {
    if (name == "regression") return AdjointMethod::regression;
    if (name == "deterministic") return AdjointMethod::deterministic;
    throw AdjointError("unknown adjoint method '" + name + "'");
}

std::string to_string(AdjointMethod method) {
    return method == AdjointMethod::regression ? "regression" : "deterministic";
}

bool deterministic_backend_applies(const ModelSpec& model, const ParticleEnsemble& ensemble) {
    return model.coefficients->affine() && !ensemble.control.per_particle;
}

namespace {

constexpr double kMaxCondition = 1e10;

// Cross-sectional least squares on {1, z, z^2} with z the standardized state.
class Design {
public:
    Design(const double* x, int n) : x_(x), n_(n) {
        const auto [mu, sd] = mean_and_sd({x, static_cast<std::size_t>(n)});
        center_ = mu;
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mu))) || n < 3) {
            degree_ = 0;
            return;
        }
        scale_ = sd;
        double pw[5] = {0, 0, 0, 0, 0};
        for (int j = 0; j < n; ++j) {
            const double z = (x[j] - center_) / scale_;
            double p = 1.0;
            for (double& acc : pw) {
                acc += p;
                p *= z;
            }
        }
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) gram_(r, c) = pw[r + c];
        for (int deg = 2; deg >= 1; --deg) {
            const Eigen::MatrixXd sub = gram_.topLeftCorner(deg + 1, deg + 1);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sub, Eigen::EigenvaluesOnly);
            const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
            const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
            if (cond <= kMaxCondition) {
                degree_ = deg;
                condition_ = cond;
                solver_.compute(sub);
                return;
            }
            condition_ = cond;
        }
        degree_ = 0;
    }

    RegressionDiagnostic diagnostic() const { return {degree_, condition_}; }

    template <class Target>
    PolyField fit(Target&& y) const {
        PolyField out;
        out.center = center_;
        out.scale = scale_;
        out.degree = degree_;
        if (degree_ == 0) {
            double acc = 0.0;
            for (int j = 0; j < n_; ++j) acc += y(j);
            out.c[0] = acc / n_;
            return out;
        }
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(degree_ + 1);
        for (int j = 0; j < n_; ++j) {
            const double z = (x_[j] - center_) / scale_, v = y(j);
            rhs[0] += v;
            rhs[1] += z * v;
            if (degree_ == 2) rhs[2] += z * z * v;
        }
        const Eigen::VectorXd coef = solver_.solve(rhs);
        for (int d = 0; d <= degree_; ++d) out.c[d] = coef[d];
        return out;
    }

private:
    const double* x_;
    int n_;
    double center_ = 0.0;
    double scale_ = 1.0;
    int degree_ = 0;
    double condition_ = 1.0;
    Eigen::Matrix3d gram_ = Eigen::Matrix3d::Zero();
    Eigen::LDLT<Eigen::MatrixXd> solver_;
};

PolyField affine_field(double intercept, double slope) {
    PolyField p;
    p.degree = 1;
    p.c = {intercept, slope, 0.0};
    return p;
}

struct StepFields {
    PolyField cond;
    PolyField brownian;
    std::vector<PolyField> jump;
    RegressionDiagnostic diag;
};

// Conditional expectation of the next value and the martingale integrands at step i.
StepFields regression_step(const ParticleEnsemble& ens, const JumpMeasure& measure, int i, const double* next) {
    const int N = ens.particles, A = static_cast<int>(measure.size());
    const double dt = ens.grid.dt();
    const double* xi = ens.node(i);
    const Design design(xi, N);
    StepFields sf;
    sf.diag = design.diagnostic();
    sf.cond = design.fit([&](int j) { return next[j]; });
    std::vector<double> resid(N);
    for (int j = 0; j < N; ++j) resid[j] = next[j] - sf.cond(xi[j]);
    sf.brownian = design.fit([&](int j) { return resid[j] * ens.noise->increment(i, j) / dt; });
    sf.jump.assign(A, PolyField{});
    if (ens.jumps_active) {
        for (int k = 0; k < A; ++k) {
            const double w = measure.atoms()[k].weight;
            sf.jump[k] = design.fit([&](int j) { return resid[j] * ens.noise->compensated(i, j, k, w) / (w * dt); });
        }
    }
    return sf;
}

// Exact fields when the next value is slope * x + intercept and the coefficients are affine.
StepFields affine_step(const ModelSpec& model, const ParticleEnsemble& ens, int i, double slope, double intercept) {
    const double t = ens.grid.node(i), m = ens.mean[i], u = ens.control.values[i], dt = ens.grid.dt();
    const Jet f0 = model.f(t, 0.0, m, u), s0 = model.sigma(t, 0.0, m, u);
    StepFields sf;
    sf.diag = {1, 1.0};
    sf.cond = affine_field(slope * f0.v * dt + intercept, slope * (1.0 + f0.x * dt));
    sf.brownian = affine_field(slope * s0.v, slope * s0.x);
    for (const auto& atom : model.jumps.atoms()) {
        const JumpJet g0 = model.g(t, 0.0, u, atom.mark);
        sf.jump.push_back(affine_field(slope * g0.v, slope * g0.x));
    }
    return sf;
}

void store_fields(BackwardSolution& sol, int i, const StepFields& sf) {
    sol.brownian[i] = sf.brownian;
    for (int k = 0; k < sol.atoms; ++k) sol.jump[static_cast<std::size_t>(i) * sol.atoms + k] = sf.jump[k];
    sol.diagnostics[i] = sf.diag;
}

template <class Solution>
Solution allocate(const ParticleEnsemble& ens, const ModelSpec& model, AdjointMethod method) {
    check_grid_matches(model, ens.grid);
    Solution sol;
    sol.grid = ens.grid;
    sol.particles = ens.particles;
    sol.atoms = static_cast<int>(model.jumps.size());
    sol.method = method;
    const int M = ens.grid.steps();
    sol.value.assign(static_cast<std::size_t>(M + 1) * ens.particles, 0.0);
    sol.brownian.assign(M, PolyField{});
    sol.jump.assign(static_cast<std::size_t>(M) * sol.atoms, PolyField{});
    sol.diagnostics.assign(M, {});
    if (method == AdjointMethod::deterministic) {
        if (!deterministic_backend_applies(model, ens))
            throw AdjointError("deterministic adjoint requires an affine model family and an open-loop control");
        sol.affine.assign(M + 1, {0.0, 0.0});
    }
    return sol;
}

void check_finite(const BackwardSolution& sol, const char* what) {
    for (double v : sol.value)
        if (!std::isfinite(v)) throw AdjointError(std::string(what) + " produced a non-finite value");
}

// Per-particle pieces of the first-order driver at one point.
struct FirstDriver {
    double local = 0.0;  // f_x Ybar + sigma_x K - ell_x + sum w g_x gamma
    double fy_y = 0.0;   // f_y Ybar
    double sy_k = 0.0;   // sigma_y K
    double ly = 0.0;     // ell_y
};

FirstDriver first_driver(const ModelSpec& model, const StepFields& sf, double t, double x, double m, double u) {
    const Jet f = model.f(t, x, m, u), s = model.sigma(t, x, m, u), l = model.ell(t, x, m, u);
    const double yb = sf.cond(x), kk = sf.brownian(x);
    double jump = 0.0;
    const auto& atoms = model.jumps.atoms();
    for (std::size_t k = 0; k < atoms.size(); ++k)
        jump += atoms[k].weight * model.g(t, x, u, atoms[k].mark).x * sf.jump[k](x);
    return {f.x * yb + s.x * kk - l.x + jump, f.y * yb, s.y * kk, l.y};
}

}  // namespace

AdjointTriple solve_first_adjoint(const ModelSpec& model, const ParticleEnsemble& ens, const AdjointOptions& opt) {
    auto sol = allocate<AdjointTriple>(ens, model, opt.method);
    const int N = ens.particles, M = ens.grid.steps();
    const double dt = ens.grid.dt();
    const bool mf = opt.mean_field_terms;

    {
        const double* xm = ens.node(M);
        const double mM = ens.mean[M];
        std::vector<double> hy(N);
        for (int j = 0; j < N; ++j) hy[j] = model.h(xm[j], mM).y;
        const double ehy = mf ? ordered_mean(hy) : 0.0;
        double* out = sol.value.data() + static_cast<std::size_t>(M) * N;
        for (int j = 0; j < N; ++j) out[j] = -(model.h(xm[j], mM).x + ehy);
        if (!sol.affine.empty()) {
            const double h0 = model.h(0.0, mM).x, h1 = model.h(1.0, mM).x;
            sol.affine[M] = {-(h1 - h0), -(h0 + ehy)};
        }
    }

    std::vector<FirstDriver> parts(N);
    std::vector<double> fy(N), sy(N), ly(N);
    for (int i = M - 1; i >= 0; --i) {
        const double t = ens.grid.node(i), m = ens.mean[i];
        const double* xi = ens.node(i);
        const StepFields sf = sol.affine.empty()
                                  ? regression_step(ens, model.jumps, i, sol.node(i + 1))
                                  : affine_step(model, ens, i, sol.affine[i + 1][0], sol.affine[i + 1][1]);
        parallel_for(N, [&](int begin, int end) {
            for (int j = begin; j < end; ++j) {
                parts[j] = first_driver(model, sf, t, xi[j], m, ens.u(j, i));
                fy[j] = parts[j].fy_y;
                sy[j] = parts[j].sy_k;
                ly[j] = parts[j].ly;
            }
        });
        const double coupling = mf ? ordered_mean(fy) + ordered_mean(sy) - ordered_mean(ly) : 0.0;
        double* out = sol.value.data() + static_cast<std::size_t>(i) * N;
        for (int j = 0; j < N; ++j) out[j] = sf.cond(xi[j]) + dt * (parts[j].local + coupling);
        if (!sol.affine.empty()) {
            const double u = ens.control.values[i];
            const double v0 = sf.cond(0.0) + dt * (first_driver(model, sf, t, 0.0, m, u).local + coupling);
            const double v1 = sf.cond(1.0) + dt * (first_driver(model, sf, t, 1.0, m, u).local + coupling);
            sol.affine[i] = {v1 - v0, v0};
        }
        store_fields(sol, i, sf);
    }
    check_finite(sol, "first adjoint");
    return sol;
}

namespace {

double second_driver(const ModelSpec& model, const StepFields& sf, const AdjointTriple& adj1, int i, double t,
                     double x, double m, double u, double psi) {
    const Jet f = model.f(t, x, m, u), s = model.sigma(t, x, m, u), l = model.ell(t, x, m, u);
    const double qb = sf.cond(x), rr = sf.brownian(x);
    double hxx = f.xx * psi + s.xx * adj1.K(i, x) - l.xx;
    double jump = 0.0;
    const auto& atoms = model.jumps.atoms();
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        const JumpJet g = model.g(t, x, u, atoms[k].mark);
        const double w = atoms[k].weight, big_gamma = sf.jump[k](x);
        hxx += w * g.xx * adj1.gamma(i, static_cast<int>(k), x);
        jump += w * (big_gamma + qb) * g.x * g.x + 2.0 * w * big_gamma * g.x;
    }
    return 2.0 * f.x * qb + s.x * s.x * qb + 2.0 * s.x * rr + jump + hxx;
}

}  // namespace

SecondOrderAdjoint solve_second_adjoint(const ModelSpec& model, const ParticleEnsemble& ens,
                                        const AdjointTriple& adj1, const AdjointOptions& opt) {
    auto sol = allocate<SecondOrderAdjoint>(ens, model, opt.method);
    if (!(adj1.grid == ens.grid) || adj1.particles != ens.particles)
        throw AdjointError("first adjoint was solved on a different ensemble");
    if (!sol.affine.empty() && adj1.affine.empty())
        throw AdjointError("deterministic second adjoint needs a deterministic first adjoint");
    const int N = ens.particles, M = ens.grid.steps();
    const double dt = ens.grid.dt();

    {
        const double* xm = ens.node(M);
        const double mM = ens.mean[M];
        double* out = sol.value.data() + static_cast<std::size_t>(M) * N;
        for (int j = 0; j < N; ++j) out[j] = -model.h(xm[j], mM).xx;
        if (!sol.affine.empty()) {
            const double q0 = -model.h(0.0, mM).xx, q1 = -model.h(1.0, mM).xx;
            sol.affine[M] = {q1 - q0, q0};
        }
    }

    for (int i = M - 1; i >= 0; --i) {
        const double t = ens.grid.node(i), m = ens.mean[i];
        const double* xi = ens.node(i);
        const double* psi = adj1.node(i);
        const StepFields sf = sol.affine.empty()
                                  ? regression_step(ens, model.jumps, i, sol.node(i + 1))
                                  : affine_step(model, ens, i, sol.affine[i + 1][0], sol.affine[i + 1][1]);
        double* out = sol.value.data() + static_cast<std::size_t>(i) * N;
        parallel_for(N, [&](int begin, int end) {
            for (int j = begin; j < end; ++j)
                out[j] = sf.cond(xi[j]) + dt * second_driver(model, sf, adj1, i, t, xi[j], m, ens.u(j, i), psi[j]);
        });
        if (!sol.affine.empty()) {
            const double u = ens.control.values[i];
            const auto& a = adj1.affine[i];
            const double v0 = sf.cond(0.0) + dt * second_driver(model, sf, adj1, i, t, 0.0, m, u, a[1]);
            const double v1 = sf.cond(1.0) + dt * second_driver(model, sf, adj1, i, t, 1.0, m, u, a[0] + a[1]);
            sol.affine[i] = {v1 - v0, v0};
        }
        store_fields(sol, i, sf);
    }
    check_finite(sol, "second adjoint");
    return sol;
}

double hamiltonian(const HamiltonianInputs& in, const ModelSpec& model) {
    const auto& atoms = model.jumps.atoms();
    if (in.gamma.size() != atoms.size()) throw AdjointError("hamiltonian needs one gamma value per jump atom");
    double jump = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k)
        jump += atoms[k].weight * in.gamma[k] * model.g(in.t, in.x, in.u, atoms[k].mark).v;
    return in.psi * model.f(in.t, in.x, in.y, in.u).v + in.k * model.sigma(in.t, in.x, in.y, in.u).v + jump -
           model.ell(in.t, in.x, in.y, in.u).v;
}

HamiltonianDerivatives hamiltonian_derivatives(const ModelSpec& model, double t, double x, double y, double u_star,
                                               double u_alt, double psi, double k, std::span<const double> gamma) {
    const auto& atoms = model.jumps.atoms();
    if (gamma.size() != atoms.size()) throw AdjointError("hamiltonian needs one gamma value per jump atom");
    const Jet f = model.f(t, x, y, u_star), s = model.sigma(t, x, y, u_star), l = model.ell(t, x, y, u_star);
    const Jet fa = model.f(t, x, y, u_alt), sa = model.sigma(t, x, y, u_alt), la = model.ell(t, x, y, u_alt);
    HamiltonianDerivatives out;
    out.delta_h = psi * (fa.v - f.v) + k * (sa.v - s.v) - (la.v - l.v);
    out.h_x = f.x * psi + s.x * k - l.x;
    out.h_xx = f.xx * psi + s.xx * k - l.xx;
    for (std::size_t n = 0; n < atoms.size(); ++n) {
        const JumpJet g = model.g(t, x, u_star, atoms[n].mark), ga = model.g(t, x, u_alt, atoms[n].mark);
        const double w = atoms[n].weight;
        out.delta_h += w * (ga.v - g.v) * gamma[n];
        out.h_x += w * g.x * gamma[n];
        out.h_xx += w * g.xx * gamma[n];
    }
    return out;
}

HamiltonianDerivatives hamiltonian_derivatives(const ModelSpec& model, const ParticleEnsemble& ens,
                                               const AdjointTriple& adj1, int j, int i, double u_alt) {
    if (i >= ens.grid.steps()) throw AdjointError("Hamiltonian quantities are defined on steps 0..M-1");
    const double x = ens.state(j, i);
    std::vector<double> gam(adj1.atoms);
    for (int k = 0; k < adj1.atoms; ++k) gam[k] = adj1.gamma(i, k, x);
    return hamiltonian_derivatives(model, ens.grid.node(i), x, ens.mean[i], ens.u(j, i), model.controls.clamp(u_alt),
                                   adj1.Psi(j, i), adj1.K(i, x), gam);
}

AdjointMomentReport check_adjoint_moments(const BackwardSolution& adj, const ParticleEnsemble& ens,
                                          const JumpMeasure& measure) {
    const int N = ens.particles, M = ens.grid.steps();
    const double dt = ens.grid.dt();
    std::vector<double> sup(N, 0.0), zsq(N, 0.0), usq(N, 0.0);
    for (int i = 0; i <= M; ++i) {
        const double* v = adj.node(i);
        const double* xi = ens.node(i);
        for (int j = 0; j < N; ++j) {
            sup[j] = std::max(sup[j], v[j] * v[j]);
            if (i == M) continue;
            const double z = adj.brownian_at(i, xi[j]);
            zsq[j] += z * z * dt;
            for (int k = 0; k < adj.atoms; ++k) {
                const double g = adj.jump_at(i, k, xi[j]);
                usq[j] += measure.atoms()[k].weight * g * g * dt;
            }
        }
    }
    AdjointMomentReport rep;
    rep.sup_value_sq = ordered_mean(sup);
    rep.brownian_sq = ordered_mean(zsq);
    rep.jump_sq = ordered_mean(usq);
    rep.total = rep.sup_value_sq + rep.brownian_sq + rep.jump_sq;
    return rep;
}

AdjointBoundReport check_adjoint_moments(const AdjointTriple& adj1, const SecondOrderAdjoint& adj2,
                                         const ParticleEnsemble& ens, const JumpMeasure& measure) {
    return {check_adjoint_moments(adj1, ens, measure), check_adjoint_moments(adj2, ens, measure)};
}

}  // namespace mfsmp
