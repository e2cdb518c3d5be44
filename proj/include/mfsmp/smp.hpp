#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mfsmp/adjoint.hpp"
#include "mfsmp/variation.hpp"

namespace mfsmp {

struct SmpNode {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double u_star = 0.0;
    double psi = 0.0;
    double k = 0.0;
    double q = 0.0;
    std::span<const double> gamma;  // per atom
    std::span<const double> big_gamma;
};

// H(u) - H(u*) + (sigma(u) - sigma(u*))^2 Q / 2 + sum_k w_k (g_k(u) - g_k(u*))^2 (Q + Gamma_k) / 2
double smp_functional(const ModelSpec& model, const SmpNode& node, double u);

struct SmpOptions {
    int particles = 10000;
    int steps = 100;
    std::uint64_t seed = 42;
    int mesh_points = 41;
    double tolerance = -1.0;  // negative: 0.02 * max(1, |J|)
    AdjointMethod method = AdjointMethod::regression;
};

struct SmpVerdict {
    std::vector<double> mesh;
    int steps = 0;
    std::vector<double> mean_values;  // steps x mesh, particle-averaged
    double worst = 0.0;
    int worst_step = 0;
    double worst_u = 0.0;
    double tolerance = 0.0;
    double cost = 0.0;
    double scale = 1.0;
    bool pass = false;
    SmpOptions options;

    double value(int step, int mesh_index) const {
        return mean_values[static_cast<std::size_t>(step) * mesh.size() + mesh_index];
    }
};

SmpVerdict verify_maximum_principle(const ModelSpec& model, const ControlProcess& candidate, const SmpOptions& options);

struct GapReport {
    std::vector<double> seed_gaps;
    double gap = 0.0;
    double std_error = 0.0;
    bool pass = false;  // gap >= -3 stderr
    SpikeWindow window;
};

GapReport cost_gap(const ModelSpec& model, const SpikeSpec& spike, const ControlProcess& u_star, int particles,
                   int steps, const std::vector<std::uint64_t>& seeds);

struct OracleOptions {
    int particles = 10000;
    int steps = 100;
    std::uint64_t seed = 42;
    int iterations = 200;
    double initial = 0.0;
};

struct OptimumResult {
    ControlProcess control = ControlProcess::constant(0.0);
    std::vector<double> values;
    double cost = 0.0;
    std::vector<double> trace;
    int iterations = 0;
    bool stalled = false;
};

// Discretized cost J(u_0..u_{M-1}) on fixed noise and its exact gradient.
struct DiscreteProblem {
    const ModelSpec* model = nullptr;
    std::shared_ptr<const NoiseBlock> noise;

    double cost(const std::vector<double>& u) const;
    // Returns J and fills dJ/du_i divided by dt.
    double cost_and_gradient(const std::vector<double>& u, std::vector<double>& grad) const;
};

OptimumResult find_optimum_oracle(const ModelSpec& model, const OracleOptions& options);

}  // namespace mfsmp
