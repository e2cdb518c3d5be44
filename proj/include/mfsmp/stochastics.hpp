#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "mfsmp/model.hpp"

namespace mfsmp {

class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double s, double T, int steps);

    double s() const { return s_; }
    double T() const { return T_; }
    int steps() const { return steps_; }
    double dt() const { return dt_; }
    // Node i; the last node is pinned to T exactly.
    double node(int i) const { return i == steps_ ? T_ : s_ + i * dt_; }

    bool operator==(const TimeGrid& o) const { return s_ == o.s_ && T_ == o.T_ && steps_ == o.steps_; }

private:
    double s_ = 0.0;
    double T_ = 1.0;
    int steps_ = 1;
    double dt_ = 1.0;
};

// Philox4x32-10 counter-based generator.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

enum class Purpose : std::uint32_t { brownian = 1, jump_count = 2, jump_mark = 3, probe = 4 };

// Draws for one particle. Every draw is a pure function of
// (master seed, particle, purpose, step, index).
class ParticleStream {
public:
    ParticleStream(std::uint64_t seed, std::uint64_t particle) : seed_(seed), particle_(particle) {}

    // Two uniforms in (0, 1) with 53-bit resolution.
    std::array<double, 2> uniforms(Purpose purpose, std::uint32_t step, std::uint32_t index) const;
    double uniform(Purpose purpose, std::uint32_t step, std::uint32_t index) const {
        return uniforms(purpose, step, index)[0];
    }
    double normal(Purpose purpose, std::uint32_t step, std::uint32_t index) const;

private:
    std::uint64_t seed_;
    std::uint64_t particle_;
};

class RngStreams {
public:
    explicit RngStreams(std::uint64_t master_seed) : seed_(master_seed) {}
    std::uint64_t master_seed() const { return seed_; }
    ParticleStream stream(std::uint64_t particle) const { return {seed_, particle}; }

private:
    std::uint64_t seed_;
};

// Jump events of one path binned per grid interval: counts[step * atoms + atom].
struct JumpTrain {
    int steps = 0;
    int atoms = 0;
    std::vector<std::uint16_t> counts;

    int count(int step, int atom) const { return counts[static_cast<std::size_t>(step) * atoms + atom]; }
    int events(int step) const;
    int total_events() const;
    // Marks of the events on [t_step, t_step+1), in atom order.
    std::vector<double> marks(int step, const JumpMeasure& measure) const;
};

std::vector<double> sample_brownian_increments(const ParticleStream& stream, const TimeGrid& grid);
JumpTrain sample_jump_measure(const ParticleStream& stream, const TimeGrid& grid, const JumpMeasure& measure);

// Node-major noise for N particles: dw[i * N + j], counts[(i * N + j) * atoms + k].
struct NoiseBlock {
    TimeGrid grid;
    int particles = 0;
    int atoms = 0;
    std::uint64_t seed = 0;
    std::vector<double> dw;
    std::vector<std::uint16_t> counts;

    double increment(int step, int j) const { return dw[static_cast<std::size_t>(step) * particles + j]; }
    int count(int step, int j, int atom) const {
        return counts[(static_cast<std::size_t>(step) * particles + j) * atoms + atom];
    }
    // Compensated count n_k - w_k dt.
    double compensated(int step, int j, int atom, double weight) const {
        return count(step, j, atom) - weight * grid.dt();
    }

    // Same noise on a grid with `factor` times fewer steps (sums of increments and counts).
    NoiseBlock coarsen(int factor) const;
};

NoiseBlock sample_noise(const RngStreams& streams, const TimeGrid& grid, const JumpMeasure& measure, int particles);

using JumpIntegrand = std::function<double(double t, double mark)>;

// Path of the compensated integral on the grid nodes, integrand evaluated at the
// left node of each interval.
std::vector<double> compensated_integral(const JumpTrain& train, const TimeGrid& grid, const JumpMeasure& measure,
                                         const JumpIntegrand& phi);

struct BdgReport {
    double p = 2.0;
    double lhs = 0.0;   // E sup_t |compensated integral|^p
    double rhs = 0.0;   // E int int |phi|^p mu dt  (p = 2: isometry side)
    double ratio = 0.0;
    double ratio_stderr = 0.0;
    double terminal_mean = 0.0;
    double terminal_mean_stderr = 0.0;
    double terminal_second_moment = 0.0;
    double terminal_second_moment_stderr = 0.0;
    bool degenerate = false;
    bool asserted = false;  // only p = 2 carries a hard bound
    int trials = 0;
};

BdgReport check_bdg_moment(const JumpMeasure& measure, const TimeGrid& grid, const JumpIntegrand& phi,
                           int n_trials, std::uint64_t seed, double p = 2.0);

}  // namespace mfsmp
