#pragma once

#include "filmflow/energy.hpp"
#include "filmflow/grid.hpp"

#include <functional>
#include <stdexcept>
#include <vector>

namespace filmflow {

struct StepOptions {
    double gtol = 1e-7;         // optimality tolerance, relative to the energy scale
    int max_inner = 500;        // accepted descent iterations per time step
    bool fourier_precond = true;
    int elastic_refresh = 1;    // re-solve the displacement every k-th iterate
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double alpha_min = 1e-14;
    double pinch_rel = 1e-6;    // pinch threshold relative to the mean height
    double energy_scale = 0.0;  // 0 -> max(1, |F(h_prev)|)
    double stall_factor = 5.0;  // accept a stalled line search within this factor of gtol
};

struct StepResult {
    Profile h;
    EnergyBreakdown energy;       // free energy of the accepted profile
    double penalty = 0.0;         // (1/2) int |D_Gamma v|^2 on the previous surface
    double objective = 0.0;       // energy.total + penalty / tau
    double grad_residual = 0.0;   // L2 norm of the projected objective gradient
    int iterations = 0;
    double max_slope = 0.0;
    double min_height = 0.0;
    bool slope_active = false;    // slope constraint blocked further descent
    bool pinched = false;         // profile reached the pinch threshold
    double hminus1_velocity = 0.0;
    double eq51 = 0.0;
    int penalty_solves = 0;

    StepResult() : h(Profile::flat(1, 1.0, 4, 1.0)) {}
};

/// Thrown when the inner minimization can make no further progress above the
/// optimality tolerance; carries the best iterate reached.
class OptimizerStall : public std::runtime_error {
public:
    StepResult best;
    OptimizerStall(const std::string& msg, StepResult b)
        : std::runtime_error(msg), best(std::move(b)) {}
};

/// One minimizing-movements step: minimizes
///   F(h) + (1/(2 tau)) int_{Gamma_prev} |D_Gamma v_h|^2
/// over profiles with the volume of h_prev and max slope below lambda0, by
/// projected descent (optionally Fourier preconditioned) with Armijo
/// backtracking from h_prev.
StepResult incremental_step(const Profile& h_prev, const EnergyModel& model,
                            const FlowParams& flow, const StepOptions& opts = {});

struct EvolutionTrace {
    enum class Reason { completed, slope_activation, pinch_off };

    int m = 0, n = 0;
    double b = 0.0, tau = 0.0;
    std::vector<double> times;      // 0, tau, 2 tau, ...
    std::vector<Profile> profiles;  // profiles[0] = h0
    std::vector<StepResult> steps;  // steps[i] produced profiles[i+1]
    EnergyBreakdown initial_breakdown;
    double initial_energy = 0.0;
    double scale = 1.0;
    double dissipation = 0.0;       // sum of penalty / tau over accepted steps
    double max_monotonicity_violation = 0.0;
    Reason reason = Reason::completed;

    /// Piecewise-linear interpolation in time (clamped at the ends).
    Profile at_time(double t) const;
};

using StepCallback = std::function<void(int step, const StepResult&)>;

/// Runs `steps` minimizing-movements steps from h0, stopping early on slope
/// activation or pinch-off.  The callback observes each accepted step.
EvolutionTrace evolve(const Profile& h0, const EnergyModel& model, const FlowParams& flow,
                      int steps, const StepOptions& opts = {}, const StepCallback& cb = {});

} // namespace filmflow
