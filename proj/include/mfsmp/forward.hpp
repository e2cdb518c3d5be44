#pragma once

#include <memory>
#include <vector>

#include "mfsmp/model.hpp"
#include "mfsmp/stochastics.hpp"

namespace mfsmp {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kOverflowGuard = 1e12;

// Control values actually applied: one per step for open-loop controls,
// one per (step, particle) otherwise.
struct ControlTrace {
    bool per_particle = false;
    int particles = 0;
    std::vector<double> values;

    double at(int step, int j) const {
        return per_particle ? values[static_cast<std::size_t>(step) * particles + j] : values[step];
    }
};

struct ParticleEnsemble {
    TimeGrid grid;
    int particles = 0;
    std::vector<double> x;     // node-major: x[i * N + j]
    std::vector<double> mean;  // empirical mean per node
    std::shared_ptr<const NoiseBlock> noise;
    ControlTrace control;
    // False when every jump coefficient evaluated along the paths was exactly zero.
    bool jumps_active = false;

    double state(int j, int i) const { return x[static_cast<std::size_t>(i) * particles + j]; }
    const double* node(int i) const { return x.data() + static_cast<std::size_t>(i) * particles; }
    double u(int j, int i) const { return control.at(i, j); }
};

ParticleEnsemble simulate_particles(const ModelSpec& model, const ControlProcess& control, const TimeGrid& grid,
                                    int particles, const RngStreams& streams);
ParticleEnsemble simulate_particles(const ModelSpec& model, const ControlProcess& control,
                                    std::shared_ptr<const NoiseBlock> noise);

struct CostEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Per-particle h(x_M, m_M) + sum_i ell(t_i, x_i, m_i, u_i) dt.
std::vector<double> particle_costs(const ModelSpec& model, const ParticleEnsemble& ensemble);
CostEstimate evaluate_cost(const ModelSpec& model, const ParticleEnsemble& ensemble);

// (1/N) sum_j sup_i |x_ji|^q
double check_state_moments(const ParticleEnsemble& ensemble, double q);

void check_grid_matches(const ModelSpec& model, const TimeGrid& grid);

}  // namespace mfsmp
