#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfsmp {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Value and partial derivatives of a coefficient in (state x, mean y).
struct Jet {
    double v = 0.0;
    double x = 0.0;
    double y = 0.0;
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;
};

// The jump coefficient does not see the mean, only the state.
struct JumpJet {
    double v = 0.0;
    double x = 0.0;
    double xx = 0.0;
};

struct Atom {
    double mark = 0.0;
    double weight = 0.0;
};

class JumpMeasure {
public:
    JumpMeasure() = default;
    explicit JumpMeasure(std::vector<Atom> atoms);

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }
    double total_mass() const { return total_mass_; }

    // Sum over atoms of weight * phi(mark).
    double integrate(const std::function<double(double)>& phi) const;

private:
    std::vector<Atom> atoms_;
    double total_mass_ = 0.0;
};

struct ControlSet {
    double lo = -1.0;
    double hi = 1.0;

    double clamp(double u) const { return u < lo ? lo : (u > hi ? hi : u); }
    bool contains(double u) const { return u >= lo && u <= hi; }
    std::vector<double> mesh(int points) const;
};

// Coefficient family with hand-coded derivatives. Implementations must be pure.
class Coefficients {
public:
    virtual ~Coefficients() = default;

    virtual Jet drift(double t, double x, double y, double u) const = 0;
    virtual Jet diffusion(double t, double x, double y, double u) const = 0;
    virtual JumpJet jump(double t, double x, double u, double mark) const = 0;
    virtual Jet running_cost(double t, double x, double y, double u) const = 0;
    virtual Jet terminal_cost(double x, double y) const = 0;

    // True when f, sigma, g are affine in (x, y) with x-slopes independent of the
    // state, and the costs are at most quadratic. Such families admit an affine
    // first adjoint under open-loop controls.
    virtual bool affine() const { return false; }
};

struct ModelSpec {
    std::string name;
    std::map<std::string, double> params;
    double s = 0.0;
    double T = 1.0;
    double initial_state = 0.0;
    ControlSet controls;
    JumpMeasure jumps;
    std::shared_ptr<const Coefficients> coefficients;

    Jet f(double t, double x, double y, double u) const { return coefficients->drift(t, x, y, u); }
    Jet sigma(double t, double x, double y, double u) const { return coefficients->diffusion(t, x, y, u); }
    JumpJet g(double t, double x, double u, double mark) const { return coefficients->jump(t, x, u, mark); }
    Jet ell(double t, double x, double y, double u) const { return coefficients->running_cost(t, x, y, u); }
    Jet h(double x, double y) const { return coefficients->terminal_cost(x, y); }
};

std::vector<std::string> builtin_models();

// Builds a builtin family. Unknown parameter keys and missing required keys are
// errors. When `atoms` is empty the family default is used.
ModelSpec build_model(const std::string& name, const std::map<std::string, double>& params,
                      const std::optional<std::vector<Atom>>& atoms = std::nullopt);

// Replace the coefficient bundle while keeping horizon, controls and measure.
ModelSpec with_coefficients(const ModelSpec& base, std::shared_ptr<const Coefficients> coefficients,
                            std::string name);

class ControlProcess {
public:
    enum class Kind { constant, piecewise, feedback };
    using Feedback = std::function<double(double t, double x, double y)>;

    static ControlProcess constant(double u);
    static ControlProcess piecewise(std::vector<double> values);
    static ControlProcess feedback(Feedback fn);

    Kind kind() const { return kind_; }
    bool open_loop() const { return kind_ != Kind::feedback; }

    // Control value on [t_step, t_step+1), clamped into the control set.
    double value(int step, double t, double x, double y, const ControlSet& set) const;
    // Only valid for open-loop controls.
    double value(int step, const ControlSet& set) const;

    // Piecewise values on a grid of `steps` intervals (open-loop only).
    std::vector<double> values(int steps, const ControlSet& set) const;
    void check_steps(int steps) const;

    // Copy that emits `u` on steps [begin, end) and the original elsewhere.
    ControlProcess with_override(int begin, int end, double u) const;

private:
    Kind kind_ = Kind::constant;
    double constant_ = 0.0;
    std::vector<double> values_;
    Feedback feedback_;
    int override_begin_ = 0;
    int override_end_ = 0;
    double override_value_ = 0.0;
};

struct ProbeBox {
    double x_lo = -2.0, x_hi = 2.0;
    double y_lo = -2.0, y_hi = 2.0;
    double u_lo = -1.0, u_hi = 1.0;
};

struct DerivativeCheck {
    std::string symbol;
    double mismatch = 0.0;
    bool verifiable = true;
};

struct HypothesisReport {
    std::vector<DerivativeCheck> derivatives;
    double max_mismatch = 0.0;
    double lipschitz_g = 0.0;
    double lipschitz_gx = 0.0;
    double growth_g = 0.0;
    int samples = 0;
    bool pass = false;
};

HypothesisReport probe_hypotheses(const ModelSpec& model, const ProbeBox& box, int n_samples,
                                  unsigned long long seed);

}  // namespace mfsmp
