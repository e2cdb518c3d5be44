#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "mfsmp/forward.hpp"
#include "mfsmp/model.hpp"

namespace mfsmp {

class AdjointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// c0 + c1 z + c2 z^2 with z = (x - center) / scale; degree -1 is the zero field.
struct PolyField {
    double center = 0.0;
    double scale = 1.0;
    std::array<double, 3> c{};
    int degree = -1;

    double operator()(double x) const {
        if (degree < 0) return 0.0;
        const double z = (x - center) / scale;
        return c[0] + z * (c[1] + z * c[2]);
    }
};

enum class AdjointMethod { regression, deterministic };

AdjointMethod parse_adjoint_method(const std::string& name);
std::string to_string(AdjointMethod method);

struct AdjointOptions {
    AdjointMethod method = AdjointMethod::regression;
    // When false the expectation terms are dropped (classical jump adjoint).
    bool mean_field_terms = true;
};

struct RegressionDiagnostic {
    int degree = 0;
    double condition = 1.0;
};

// Backward solution on the ensemble grid. The value process is stored per particle
// and node; the martingale integrands are Markov fields of the state at node i.
struct BackwardSolution {
    TimeGrid grid;
    int particles = 0;
    int atoms = 0;
    AdjointMethod method = AdjointMethod::regression;
    std::vector<double> value;        // node-major (M+1) x N
    std::vector<PolyField> brownian;  // per step
    std::vector<PolyField> jump;      // per step x atom
    std::vector<RegressionDiagnostic> diagnostics;
    // Deterministic backend only: value(x) = slope * x + intercept per node.
    std::vector<std::array<double, 2>> affine;

    double at(int j, int i) const { return value[static_cast<std::size_t>(i) * particles + j]; }
    const double* node(int i) const { return value.data() + static_cast<std::size_t>(i) * particles; }
    double brownian_at(int i, double x) const { return brownian[i](x); }
    double jump_at(int i, int k, double x) const { return jump[static_cast<std::size_t>(i) * atoms + k](x); }
};

// (Psi, K, gamma)
struct AdjointTriple : BackwardSolution {
    double Psi(int j, int i) const { return at(j, i); }
    double K(int i, double x) const { return brownian_at(i, x); }
    double gamma(int i, int k, double x) const { return jump_at(i, k, x); }
};

// (Q, R, Gamma)
struct SecondOrderAdjoint : BackwardSolution {
    double Q(int j, int i) const { return at(j, i); }
    double R(int i, double x) const { return brownian_at(i, x); }
    double Gamma(int i, int k, double x) const { return jump_at(i, k, x); }
};

AdjointTriple solve_first_adjoint(const ModelSpec& model, const ParticleEnsemble& ensemble,
                                  const AdjointOptions& options = {});
SecondOrderAdjoint solve_second_adjoint(const ModelSpec& model, const ParticleEnsemble& ensemble,
                                        const AdjointTriple& adj1, const AdjointOptions& options = {});

// True when the exact affine backend applies: affine family and open-loop control.
bool deterministic_backend_applies(const ModelSpec& model, const ParticleEnsemble& ensemble);

struct HamiltonianInputs {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double u = 0.0;
    double psi = 0.0;
    double k = 0.0;
    std::vector<double> gamma;  // one per atom
};

// Psi f + K sigma + sum_k w_k gamma_k g_k - ell
double hamiltonian(const HamiltonianInputs& in, const ModelSpec& model);

struct HamiltonianDerivatives {
    double delta_h = 0.0;
    double h_x = 0.0;
    double h_xx = 0.0;
};

// delta_h compares u_alt with u_star; h_x and h_xx are taken at u_star.
HamiltonianDerivatives hamiltonian_derivatives(const ModelSpec& model, double t, double x, double y, double u_star,
                                               double u_alt, double psi, double k, std::span<const double> gamma);
HamiltonianDerivatives hamiltonian_derivatives(const ModelSpec& model, const ParticleEnsemble& ensemble,
                                               const AdjointTriple& adj1, int j, int i, double u_alt);

struct AdjointMomentReport {
    double sup_value_sq = 0.0;
    double brownian_sq = 0.0;
    double jump_sq = 0.0;
    double total = 0.0;
};

// E sup_t |Y|^2 + E int |Z|^2 dt + E int int |U|^2 mu dt for either adjoint.
AdjointMomentReport check_adjoint_moments(const BackwardSolution& adj, const ParticleEnsemble& ensemble,
                                          const JumpMeasure& measure);

struct AdjointBoundReport {
    AdjointMomentReport first;
    AdjointMomentReport second;
};

AdjointBoundReport check_adjoint_moments(const AdjointTriple& adj1, const SecondOrderAdjoint& adj2,
                                         const ParticleEnsemble& ensemble, const JumpMeasure& measure);

}  // namespace mfsmp
