#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfsmp/adjoint.hpp"
#include "mfsmp/forward.hpp"

namespace mfsmp {

struct SpikeSpec {
    double t0 = 0.0;
    double eps = 0.0;
    double u_spike = 0.0;
};

// Steps [begin, end) carry the spike value.
struct SpikeWindow {
    int begin = 0;
    int end = 0;
    double t0 = 0.0;
    double eps = 0.0;

    bool contains(int step) const { return step >= begin && step < end; }
};

// Snaps t0 to the nearest node and eps to a positive multiple of dt.
SpikeWindow snap_spike(const SpikeSpec& spike, const TimeGrid& grid);

ControlProcess spike_control(const ControlProcess& u_star, const SpikeSpec& spike, const TimeGrid& grid,
                             const ControlSet& controls);

// First- and second-order variations along a reference ensemble, plus the
// perturbed ensemble driven by the same noise. The reference ensemble must
// outlive the bundle.
struct VariationBundle {
    const ParticleEnsemble* star = nullptr;
    ParticleEnsemble perturbed;
    std::vector<double> x1;  // node-major
    std::vector<double> x2;
    SpikeWindow window;
    double u_spike = 0.0;
    bool source_times_x1 = true;

    std::size_t at(int j, int i) const { return static_cast<std::size_t>(i) * star->particles + j; }
    double first(int j, int i) const { return x1[at(j, i)]; }
    double second(int j, int i) const { return x2[at(j, i)]; }
    // x_eps - x_star - x1 - x2, recomputed from the stored arrays.
    double remainder(int j, int i) const {
        const std::size_t n = at(j, i);
        return perturbed.x[n] - star->x[n] - x1[n] - x2[n];
    }
};

std::vector<double> simulate_first_variation(const ModelSpec& model, const ParticleEnsemble& star,
                                             const SpikeWindow& window, double u_spike);
std::vector<double> simulate_second_variation(const ModelSpec& model, const ParticleEnsemble& star,
                                              const std::vector<double>& x1, const SpikeWindow& window,
                                              double u_spike, bool source_times_x1 = true);

VariationBundle simulate_variation_bundle(const ModelSpec& model, const ParticleEnsemble& star,
                                          const ControlProcess& u_star, const SpikeSpec& spike,
                                          bool source_times_x1 = true);

struct RateRow {
    std::string quantity;
    std::string bound;          // the estimate being tested, e.g. "<= C eps^k"
    double bound_exponent = 0;  // exponent of eps in the upper bound
    double threshold = 0;       // slope required for acceptance
    bool strict = false;        // slope must exceed the threshold strictly
    double slope = 0;
    double slope_stderr = 0;
    int n_seeds = 0;
    std::string status;  // "fitted", "degenerate" (identically zero), "undefined"
    bool pass = false;
    std::vector<double> mean_values;  // per ladder point, averaged over seeds
    std::vector<double> seed_slopes;
};

struct RateOptions {
    int k = 1;
    int particles = 10000;
    int steps = 512;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    double t0 = 0.0;
    double u_spike = 1.0;
    bool source_times_x1 = true;
};

struct RateReport {
    std::vector<double> eps;
    RateOptions options;
    std::vector<RateRow> rows;
    bool pass = false;
};

RateReport estimate_rates(const ModelSpec& model, const ControlProcess& u_star, const std::vector<double>& eps_ladder,
                          const RateOptions& options);

// Least-squares slope of log(values) against log(eps).
double loglog_slope(const std::vector<double>& eps, const std::vector<double>& values);

struct DualityResidual {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;  // lhs - rhs
    double scale = 1e-12;
    double relative = 0.0;
};

DualityResidual make_residual(double lhs, double rhs);

DualityResidual check_duality(int order, const ModelSpec& model, const VariationBundle& bundle,
                              const AdjointTriple& adj1);

struct SecondDualityReport {
    DualityResidual complete;   // full Ito product identity (asserted)
    DualityResidual displayed;  // reduced right-hand side, for reference
};

SecondDualityReport check_second_duality(const ModelSpec& model, const VariationBundle& bundle,
                                         const AdjointTriple& adj1, const SecondOrderAdjoint& adj2);

struct RepresentationReport {
    double deviation = 0.0;           // sup over nodes of mean |x1 - representation|
    double relative_deviation = 0.0;  // deviation / sup over nodes of mean |x1|
    double eta_min = 1.0;
    double eta_max = 1.0;
};

RepresentationReport check_exponential_representation(const ModelSpec& model, const VariationBundle& bundle);

struct ProductRuleReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
    double std_error = 0.0;
    double relative = 0.0;
};

// Product rule for two jump diffusions driven by the same noise.
ProductRuleReport check_integration_by_parts(const ParticleEnsemble& a, const ParticleEnsemble& b,
                                             const ModelSpec& model_a, const ModelSpec& model_b);

}  // namespace mfsmp
