#include "filmflow/stepper.hpp"

#include "filmflow/geometry.hpp"
#include "filmflow/surface_pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

namespace filmflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

double dot_cell(std::span<const double> a, std::span<const double> b, double cell) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s * cell;
}

// Diagonal-in-Fourier model of the objective Hessian around a gently sloped
// state: penalty ~ 1/(tau k^2), surface ~ s_psi k^2, curvature ~
// eps (p-1) |H|^{p-2} k^4.  Used as a fixed preconditioning metric; Armijo
// backtracking guards the quality of the model.
class FourierPrecond {
public:
    FourierPrecond(int m, int n, double b, double tau, double s_psi, double s_curv)
        : m_(m), n_(n), b_(b) {
        const std::size_t N = (m == 1) ? static_cast<std::size_t>(n)
                                       : static_cast<std::size_t>(n) * n;
        mult_.assign(N, 1.0);
        const double w = 2.0 * kPi / b;
        for (std::size_t idx = 0; idx < N; ++idx) {
            const int ix = static_cast<int>(idx % n);
            const int iy = (m == 2) ? static_cast<int>(idx / n) : 0;
            const double k1 = spectral::signed_index(ix, n);
            const double k2 = (m == 2) ? spectral::signed_index(iy, n) : 0.0;
            const double kap2 = w * w * (k1 * k1 + k2 * k2);
            if (kap2 == 0.0) continue;
            mult_[idx] = 1.0 / (tau * kap2) + s_psi * kap2 + s_curv * kap2 * kap2;
        }
    }

    std::vector<double> apply_inverse(std::span<const double> g) const {
        spectral::Spectrum s = spectral::analyze(g, m_, n_, b_);
        s.c[0] = 0.0;
        for (std::size_t i = 1; i < s.c.size(); ++i) s.c[i] /= mult_[i];
        return spectral::synthesize(s);
    }

private:
    int m_, n_;
    double b_;
    std::vector<double> mult_;
};

struct Eval {
    int status = 1;  // 0 feasible, 1 nonpositive height, 2 slope bound hit
    double obj = std::numeric_limits<double>::infinity();
    EnergyBreakdown en;
    double penalty = 0.0;
    std::vector<double> v;
    double max_slope = 0.0;
    double min_h = 0.0;
    int cg = 0;
};

} // namespace

StepResult incremental_step(const Profile& h_prev, const EnergyModel& model,
                            const FlowParams& flow, const StepOptions& opts) {
    flow.validate();
    const int m = h_prev.m(), n = h_prev.n();
    const double b = h_prev.b();
    const double cell = h_prev.cell_volume();
    const double tau = flow.tau;
    const std::size_t N = h_prev.size();
    const DiffBackend be = model.setup().backend;

    const SurfaceMetrics met0 = metrics(h_prev, be);
    if (!(met0.max_slope < flow.lambda0))
        throw std::invalid_argument(
            "incremental_step: initial profile already violates the slope bound");
    const double target_mean = grid_mean(h_prev.values());
    const double pinch_abs = opts.pinch_rel * target_mean;

    const MetricOperator op(h_prev, be);
    std::vector<double> warm;
    int penalty_solves = 0;

    const int refresh = std::max(1, opts.elastic_refresh);
    std::optional<EnergyModel::FrozenElastic> frozen;
    if (model.has_elastic() && refresh > 1) frozen = model.freeze(h_prev);
    const EnergyModel::FrozenElastic* fptr = frozen ? &*frozen : nullptr;

    auto evaluate = [&](const std::vector<double>& x) {
        Eval e;
        e.min_h = *std::min_element(x.begin(), x.end());
        if (!(e.min_h > 0.0)) {
            e.status = 1;
            return e;
        }
        Profile hc(m, b, n, x);
        const SurfaceMetrics mc = metrics(hc, be);
        e.max_slope = mc.max_slope;
        if (!(mc.max_slope < flow.lambda0)) {
            e.status = 2;
            return e;
        }
        e.en = model.free_energy(hc, fptr);
        PenaltyResult pen = mm_penalty(op, x, h_prev.values(), &warm);
        ++penalty_solves;
        e.penalty = pen.value;
        e.v = std::move(pen.v);
        e.cg = pen.cg_iterations;
        e.obj = e.en.total + e.penalty / tau;
        e.status = 0;
        return e;
    };

    // state at h_prev: zero penalty, exact energy
    std::vector<double> x = h_prev.values();
    Eval cur;
    cur.status = 0;
    cur.en = model.free_energy(h_prev, fptr);
    cur.obj = cur.en.total;
    cur.v.assign(N, 0.0);
    cur.max_slope = met0.max_slope;
    cur.min_h = *std::min_element(x.begin(), x.end());

    const double scale =
        opts.energy_scale > 0.0 ? opts.energy_scale : std::max(1.0, std::abs(cur.obj));
    const double gtol_abs = opts.gtol * scale;

    // preconditioning metric from the base state
    std::optional<FourierPrecond> precond;
    if (opts.fourier_precond) {
        double psival, grad_psi[3], hess_psi[9];
        double xi[3] = {0.0, 0.0, 0.0};
        xi[m] = 1.0;
        const std::size_t d = static_cast<std::size_t>(m) + 1;
        model.setup().psi.eval(std::span<const double>(xi, d), psival,
                               std::span<double>(grad_psi, d),
                               std::span<double>(hess_psi, d * d));
        double s_psi = 0.0;
        for (int a = 0; a < m; ++a) s_psi = std::max(s_psi, hess_psi[a * (m + 1) + a]);
        s_psi = std::max(s_psi, 0.0);
        double hmax = 0.0;
        for (double hv : met0.mean_curvature) hmax = std::max(hmax, std::abs(hv));
        const double p = model.setup().p;
        const double s_curv =
            model.setup().epsilon *
            (p == 2.0 ? 1.0 : (p - 1.0) * std::pow(hmax, p - 2.0));
        precond.emplace(m, n, b, tau, s_psi, s_curv);
    }

    auto assemble_result = [&](bool slope_active, int iterations, double residual) {
        StepResult res;
        res.h = Profile(m, b, n, x);
        res.energy = (fptr && model.has_elastic()) ? model.free_energy(res.h) : cur.en;
        res.penalty = cur.penalty;
        res.objective = res.energy.total + res.penalty / tau;
        res.grad_residual = residual;
        res.iterations = iterations;
        res.max_slope = cur.max_slope;
        res.min_height = cur.min_h;
        res.slope_active = slope_active || cur.max_slope >= 0.999 * flow.lambda0;
        res.pinched = cur.min_h <= pinch_abs;
        std::vector<double> delta(N);
        for (std::size_t i = 0; i < N; ++i) delta[i] = x[i] - h_prev[i];
        const double dm = grid_mean(delta);
        for (double& dv : delta) dv -= dm;
        res.hminus1_velocity = hminus1_norm(delta, m, n, b) / tau;
        res.eq51 = model.eq51_diagnostic(res.h);
        res.penalty_solves = penalty_solves;
        return res;
    };

    int accepted = 0;
    double residual = 0.0;
    for (;; ++accepted) {
        // projected objective gradient at the current iterate
        Profile hc(m, b, n, x);
        std::vector<double> g = model.energy_gradient(hc, fptr);
        for (std::size_t i = 0; i < N; ++i) g[i] -= cur.v[i] / tau;
        const double gm = grid_mean(g);
        for (double& gv : g) gv -= gm;
        residual = grid_l2(g, m, n, b);
        if (residual <= gtol_abs) return assemble_result(false, accepted, residual);
        if (accepted >= opts.max_inner)
            throw OptimizerStall("incremental_step: iteration budget exhausted with residual " +
                                     std::to_string(residual),
                                 assemble_result(false, accepted, residual));

        std::vector<double> dir;
        if (precond) {
            dir = precond->apply_inverse(g);
            for (double& dv : dir) dv = -dv;
        } else {
            dir.resize(N);
            for (std::size_t i = 0; i < N; ++i) dir[i] = -g[i];
        }
        const double slope = dot_cell(g, dir, cell);

        double alpha = 1.0;
        bool saw_slope_reject = false;
        bool accepted_candidate = false;
        std::vector<double> xc(N);
        while (alpha >= opts.alpha_min) {
            for (std::size_t i = 0; i < N; ++i) xc[i] = x[i] + alpha * dir[i];
            const double shift = target_mean - grid_mean(xc);
            for (double& v : xc) v += shift;
            Eval e = evaluate(xc);
            if (e.status == 2) saw_slope_reject = true;
            if (e.status == 0 && e.obj <= cur.obj + opts.armijo_c * alpha * slope) {
                x.swap(xc);
                cur = std::move(e);
                accepted_candidate = true;
                break;
            }
            alpha *= opts.backtrack;
        }
        if (!accepted_candidate) {
            if (saw_slope_reject && cur.max_slope >= 0.9 * flow.lambda0)
                return assemble_result(true, accepted, residual);
            // Backtracking exhausts once the Armijo decrease c |g|_P^2 falls
            // below the rounding noise of the objective; near the tolerance
            // that is convergence, not failure.
            if (residual <= opts.stall_factor * gtol_abs)
                return assemble_result(false, accepted, residual);
            char msg[96];
            std::snprintf(msg, sizeof msg,
                          "incremental_step: line search stalled at residual %.3g", residual);
            throw OptimizerStall(msg, assemble_result(false, accepted, residual));
        }

        if (cur.min_h <= pinch_abs)  // terminal event; stop descending here
            return assemble_result(false, accepted + 1, residual);

        if (fptr && accepted % refresh == refresh - 1) {
            frozen = model.freeze(Profile(m, b, n, x));
            fptr = &*frozen;
            Eval e = evaluate(x);
            if (e.status == 0) cur = std::move(e);
        }
    }
}

Profile EvolutionTrace::at_time(double t) const {
    if (profiles.empty()) throw std::logic_error("EvolutionTrace: empty");
    if (t <= times.front()) return profiles.front();
    if (t >= times.back()) return profiles.back();
    const double s = t / tau;
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(s),
                                                profiles.size() - 2);
    const double theta = s - static_cast<double>(k);
    std::vector<double> vals(profiles[k].size());
    for (std::size_t i = 0; i < vals.size(); ++i)
        vals[i] = (1.0 - theta) * profiles[k][i] + theta * profiles[k + 1][i];
    return Profile(m, b, n, std::move(vals));
}

EvolutionTrace evolve(const Profile& h0, const EnergyModel& model, const FlowParams& flow,
                      int steps, const StepOptions& opts, const StepCallback& cb) {
    flow.validate();
    if (steps < 1) throw std::invalid_argument("evolve: need at least one step");

    EvolutionTrace tr;
    tr.m = h0.m();
    tr.n = h0.n();
    tr.b = h0.b();
    tr.tau = flow.tau;
    tr.profiles.push_back(h0);
    tr.times.push_back(0.0);
    tr.initial_breakdown = model.free_energy(h0);
    tr.initial_energy = tr.initial_breakdown.total;
    tr.scale = std::max(1.0, std::abs(tr.initial_energy));

    StepOptions o = opts;
    o.energy_scale = tr.scale;

    double prev_total = tr.initial_energy;
    for (int i = 1; i <= steps; ++i) {
        StepResult s = incremental_step(tr.profiles.back(), model, flow, o);
        const double viol = s.energy.total + s.penalty / flow.tau - prev_total;
        tr.max_monotonicity_violation = std::max(tr.max_monotonicity_violation, viol);
        tr.dissipation += s.penalty / flow.tau;
        prev_total = s.energy.total;
        tr.profiles.push_back(s.h);
        tr.times.push_back(flow.tau * i);
        const bool slope_stop = s.slope_active;
        const bool pinch_stop = s.pinched;
        tr.steps.push_back(std::move(s));
        if (cb) cb(i, tr.steps.back());
        if (slope_stop) {
            tr.reason = EvolutionTrace::Reason::slope_activation;
            break;
        }
        if (pinch_stop) {
            tr.reason = EvolutionTrace::Reason::pinch_off;
            break;
        }
    }
    return tr;
}

} // namespace filmflow
