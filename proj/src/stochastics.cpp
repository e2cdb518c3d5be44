#include "mfsmp/stochastics.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mfsmp/parallel.hpp"

namespace mfsmp {

TimeGrid::TimeGrid(double s, double T, int steps) : s_(s), T_(T), steps_(steps) {
    if (steps < 1) throw ModelError("time grid needs at least one step");
    if (!(s < T) || !std::isfinite(s) || !std::isfinite(T)) throw ModelError("time grid requires finite s < T");
    dt_ = (T - s) / steps;
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

std::array<double, 2> ParticleStream::uniforms(Purpose purpose, std::uint32_t step, std::uint32_t index) const {
    const auto out = philox4x32(
        {step, index, static_cast<std::uint32_t>(particle_),
         static_cast<std::uint32_t>(particle_ >> 32) ^ (static_cast<std::uint32_t>(purpose) << 24)},
        {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    auto to_unit = [&](std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = (static_cast<std::uint64_t>(hi >> 5) << 26) | (lo >> 6);
        return (static_cast<double>(bits) + 0.5) * scale;
    };
    return {to_unit(out[0], out[1]), to_unit(out[2], out[3])};
}

double ParticleStream::normal(Purpose purpose, std::uint32_t step, std::uint32_t index) const {
    const auto u = uniforms(purpose, step, index);
    return std::sqrt(-2.0 * std::log(u[0])) * std::cos(2.0 * std::numbers::pi * u[1]);
}

int JumpTrain::events(int step) const {
    int n = 0;
    for (int k = 0; k < atoms; ++k) n += count(step, k);
    return n;
}

int JumpTrain::total_events() const {
    int n = 0;
    for (auto c : counts) n += c;
    return n;
}

std::vector<double> JumpTrain::marks(int step, const JumpMeasure& measure) const {
    std::vector<double> out;
    for (int k = 0; k < atoms; ++k)
        for (int e = 0; e < count(step, k); ++e) out.push_back(measure.atoms()[k].mark);
    return out;
}

std::vector<double> sample_brownian_increments(const ParticleStream& stream, const TimeGrid& grid) {
    std::vector<double> out(grid.steps());
    const double sd = std::sqrt(grid.dt());
    for (int i = 0; i < grid.steps(); ++i) out[i] = sd * stream.normal(Purpose::brownian, i, 0);
    return out;
}

namespace {

// Poisson(lambda) by inversion, then categorical marks; adds into counts[0..atoms).
void sample_interval(const ParticleStream& stream, int step, const JumpMeasure& measure, double lambda,
                     std::uint16_t* counts) {
    const double u = stream.uniform(Purpose::jump_count, step, 0);
    double p = std::exp(-lambda), cdf = p;
    int n = 0;
    while (u > cdf && p > 0.0) {
        ++n;
        p *= lambda / n;
        cdf += p;
    }
    if (n > std::numeric_limits<std::uint16_t>::max()) throw ModelError("jump count overflow in one interval");
    const auto& atoms = measure.atoms();
    const double total = measure.total_mass();
    for (int e = 0; e < n; ++e) {
        const double v = stream.uniform(Purpose::jump_mark, step, e) * total;
        double acc = 0.0;
        std::size_t k = 0;
        for (; k + 1 < atoms.size(); ++k) {
            acc += atoms[k].weight;
            if (v < acc) break;
        }
        ++counts[k];
    }
}

}  // namespace

JumpTrain sample_jump_measure(const ParticleStream& stream, const TimeGrid& grid, const JumpMeasure& measure) {
    JumpTrain train;
    train.steps = grid.steps();
    train.atoms = static_cast<int>(measure.size());
    train.counts.assign(static_cast<std::size_t>(train.steps) * train.atoms, 0);
    if (measure.empty()) return train;
    const double lambda = measure.total_mass() * grid.dt();
    if (lambda > 500.0) throw ModelError("jump intensity per interval too large for inversion sampling");
    for (int i = 0; i < grid.steps(); ++i)
        sample_interval(stream, i, measure, lambda, &train.counts[static_cast<std::size_t>(i) * train.atoms]);
    return train;
}

NoiseBlock sample_noise(const RngStreams& streams, const TimeGrid& grid, const JumpMeasure& measure, int particles) {
    if (particles < 1) throw ModelError("need at least one particle");
    NoiseBlock nb;
    nb.grid = grid;
    nb.particles = particles;
    nb.atoms = static_cast<int>(measure.size());
    nb.seed = streams.master_seed();
    const std::size_t M = grid.steps(), N = particles;
    nb.dw.assign(M * N, 0.0);
    nb.counts.assign(M * N * nb.atoms, 0);
    const double sd = std::sqrt(grid.dt());
    const double lambda = measure.total_mass() * grid.dt();
    if (lambda > 500.0) throw ModelError("jump intensity per interval too large for inversion sampling");
    parallel_for(particles, [&](int begin, int end) {
        for (int j = begin; j < end; ++j) {
            const ParticleStream st = streams.stream(j);
            for (std::size_t i = 0; i < M; ++i) {
                nb.dw[i * N + j] = sd * st.normal(Purpose::brownian, static_cast<std::uint32_t>(i), 0);
                if (nb.atoms > 0)
                    sample_interval(st, static_cast<int>(i), measure, lambda, &nb.counts[(i * N + j) * nb.atoms]);
            }
        }
    });
    return nb;
}

NoiseBlock NoiseBlock::coarsen(int factor) const {
    if (factor < 1 || grid.steps() % factor != 0) throw ModelError("coarsening factor must divide the step count");
    NoiseBlock out;
    out.grid = TimeGrid(grid.s(), grid.T(), grid.steps() / factor);
    out.particles = particles;
    out.atoms = atoms;
    out.seed = seed;
    const std::size_t Mc = out.grid.steps(), N = particles, A = atoms;
    out.dw.assign(Mc * N, 0.0);
    out.counts.assign(Mc * N * A, 0);
    for (std::size_t ic = 0; ic < Mc; ++ic)
        for (int r = 0; r < factor; ++r) {
            const std::size_t i = ic * factor + r;
            for (std::size_t j = 0; j < N; ++j) {
                out.dw[ic * N + j] += dw[i * N + j];
                for (std::size_t k = 0; k < A; ++k) out.counts[(ic * N + j) * A + k] += counts[(i * N + j) * A + k];
            }
        }
    return out;
}

std::vector<double> compensated_integral(const JumpTrain& train, const TimeGrid& grid, const JumpMeasure& measure,
                                         const JumpIntegrand& phi) {
    std::vector<double> path(grid.steps() + 1, 0.0);
    const auto& atoms = measure.atoms();
    for (int i = 0; i < grid.steps(); ++i) {
        const double t = grid.node(i);
        double inc = 0.0;
        for (int k = 0; k < train.atoms; ++k) {
            const double v = phi(t, atoms[k].mark);
            inc += (train.count(i, k) - atoms[k].weight * grid.dt()) * v;
        }
        path[i + 1] = path[i] + inc;
    }
    return path;
}

BdgReport check_bdg_moment(const JumpMeasure& measure, const TimeGrid& grid, const JumpIntegrand& phi,
                           int n_trials, std::uint64_t seed, double p) {
    if (n_trials < 100) throw ModelError("moment check needs at least 100 trials");
    BdgReport rep;
    rep.p = p;
    rep.trials = n_trials;
    rep.asserted = (p == 2.0);

    double rhs = 0.0;
    for (int i = 0; i < grid.steps(); ++i)
        for (const auto& a : measure.atoms()) rhs += a.weight * std::pow(std::abs(phi(grid.node(i), a.mark)), p);
    rhs *= grid.dt();

    const RngStreams streams(seed);
    std::vector<double> sup(n_trials), term(n_trials);
    for (int n = 0; n < n_trials; ++n) {
        const auto train = sample_jump_measure(streams.stream(n), grid, measure);
        const auto path = compensated_integral(train, grid, measure, phi);
        double s = 0.0;
        for (double v : path) s = std::max(s, std::pow(std::abs(v), p));
        sup[n] = s;
        term[n] = path.back();
    }
    const auto [lhs, lhs_sd] = mean_and_sd(sup);
    const auto [tm, tm_sd] = mean_and_sd(term);
    std::vector<double> term_sq(n_trials);
    for (int n = 0; n < n_trials; ++n) term_sq[n] = term[n] * term[n];
    const auto [t2, t2_sd] = mean_and_sd(term_sq);

    const double root_n = std::sqrt(static_cast<double>(n_trials));
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.terminal_mean = tm;
    rep.terminal_mean_stderr = tm_sd / root_n;
    rep.terminal_second_moment = t2;
    rep.terminal_second_moment_stderr = t2_sd / root_n;
    if (rhs == 0.0) {
        rep.degenerate = true;
        rep.ratio = std::numeric_limits<double>::quiet_NaN();
        rep.ratio_stderr = std::numeric_limits<double>::quiet_NaN();
    } else {
        rep.ratio = lhs / rhs;
        rep.ratio_stderr = lhs_sd / root_n / rhs;
    }
    return rep;
}

}  // namespace mfsmp
