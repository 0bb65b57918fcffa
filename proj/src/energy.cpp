#include "filmflow/energy.hpp"

#include "filmflow/surface_pde.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace filmflow {

void FlowParams::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("FlowParams: epsilon must be positive");
    if (!(p >= 2.0) || !std::isfinite(p))
        throw std::invalid_argument("FlowParams: p must be at least 2");
    if (!(lambda0 > 0.0) || !std::isfinite(lambda0))
        throw std::invalid_argument("FlowParams: lambda0 must be positive");
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("FlowParams: tau must be positive");
}

namespace {

inline double odd_power(double H, double p) {
    if (p == 2.0) return H;
    return std::copysign(std::pow(std::abs(H), p - 1.0), H);
}

inline double abs_power(double H, double p) {
    if (p == 2.0) return H * H;
    return std::pow(std::abs(H), p);
}

} // namespace

EnergyModel::EnergyModel(Setup setup) : setup_(std::move(setup)) {
    if (!(setup_.epsilon > 0.0) || !std::isfinite(setup_.epsilon))
        throw std::invalid_argument("EnergyModel: epsilon must be positive");
    if (!(setup_.p >= 2.0) || !std::isfinite(setup_.p))
        throw std::invalid_argument("EnergyModel: p must be at least 2");
    if (setup_.elastic) setup_.elastic->lame.validate();
}

const ElasticField& EnergyModel::solve_elastic(const Profile& h) const {
    const ElasticSpec& es = *setup_.elastic;
    if (h.m() != 1)
        throw std::invalid_argument("EnergyModel: elastic coupling requires m == 1");
    if (!solver_ || solver_->nx() != h.n() || solver_->ny() != es.ny)
        solver_ = std::make_unique<PlaneStrainSolver>(h.n(), es.ny, h.b());
    last_elastic_ = solver_->solve(h, es.lame);
    return *last_elastic_;
}

double EnergyModel::substrate_energy(const Profile& h, const FrozenElastic* frozen) const {
    if (setup_.elastic) {
        if (frozen) return frozen->energy;
        return solve_elastic(h).energy;
    }
    if (!setup_.potential) return 0.0;
    const double cell = h.cell_volume();
    const double dx = h.spacing();
    const int n = h.n(), m = h.m();
    double total = 0.0;
    const int segs = 64; // composite Simpson, even count
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x1 = dx * static_cast<double>(i % n);
        const double x2 = (m == 2) ? dx * static_cast<double>(i / n) : 0.0;
        const double hv = h[i];
        const double dy = hv / segs;
        double s = setup_.potential(x1, x2, 0.0) + setup_.potential(x1, x2, hv);
        for (int k = 1; k < segs; ++k)
            s += (k % 2 ? 4.0 : 2.0) * setup_.potential(x1, x2, dy * k);
        total += s * dy / 3.0;
    }
    return total * cell;
}

std::vector<double> EnergyModel::substrate_term(const Profile& h,
                                                const FrozenElastic* frozen) const {
    const std::size_t N = h.size();
    std::vector<double> out(N, 0.0);
    if (setup_.elastic) {
        const std::vector<double>& tr = frozen ? frozen->trace : solve_elastic(h).trace_w;
        if (tr.size() != N)
            throw std::invalid_argument("EnergyModel: frozen trace size mismatch");
        out.assign(tr.begin(), tr.end());
    } else if (setup_.potential) {
        const double dx = h.spacing();
        const int n = h.n(), m = h.m();
        for (std::size_t i = 0; i < N; ++i) {
            const double x1 = dx * static_cast<double>(i % n);
            const double x2 = (m == 2) ? dx * static_cast<double>(i / n) : 0.0;
            out[i] = setup_.potential(x1, x2, h[i]);
        }
    }
    return out;
}

EnergyBreakdown EnergyModel::free_energy(const Profile& h, const FrozenElastic* frozen) const {
    if (setup_.psi.dim() != h.m() + 1)
        throw std::invalid_argument("EnergyModel: anisotropy dimension must be m + 1");
    const SurfaceMetrics met = metrics(h, setup_.backend);
    const std::size_t N = h.size();
    const int m = h.m();
    const double cell = h.cell_volume();
    double surf = 0.0, curv = 0.0;
    double xi[3];
    for (std::size_t i = 0; i < N; ++i) {
        for (int a = 0; a < m; ++a) xi[a] = -met.gradient[a][i];
        xi[m] = 1.0;
        surf += setup_.psi.value(std::span<const double>(xi, static_cast<std::size_t>(m) + 1));
        curv += abs_power(met.mean_curvature[i], setup_.p) * met.area_element[i];
    }
    EnergyBreakdown out;
    out.surface = surf * cell;
    out.curvature = curv * cell * setup_.epsilon / setup_.p;
    out.elastic = substrate_energy(h, frozen);
    out.total = out.elastic + out.surface + out.curvature;
    return out;
}

EnergyModel::FrozenElastic EnergyModel::freeze(const Profile& h) const {
    if (!setup_.elastic)
        throw std::logic_error("EnergyModel: freeze requires the elastic term");
    const ElasticField& f = solve_elastic(h);
    return FrozenElastic{f.energy, f.trace_w};
}

std::vector<double> EnergyModel::energy_gradient(const Profile& h,
                                                 const FrozenElastic* frozen) const {
    if (setup_.psi.dim() != h.m() + 1)
        throw std::invalid_argument("EnergyModel: anisotropy dimension must be m + 1");
    const SurfaceMetrics met = metrics(h, setup_.backend);
    const std::size_t N = h.size();
    const int m = h.m(), n = h.n();
    const double b = h.b();
    const double eps = setup_.epsilon, p = setup_.p;
    const DiffBackend be = setup_.backend;

    // curvature part, differentiated through the discrete chain
    //   Dh -> J -> flux -> H -> (eps/p) sum |H|^p J
    std::vector<double> u(N);
    for (std::size_t i = 0; i < N; ++i)
        u[i] = eps * odd_power(met.mean_curvature[i], p) * met.area_element[i];
    const double um = grid_mean(u);
    for (double& v : u) v -= um;

    std::vector<std::vector<double>> q(m);
    for (int a = 0; a < m; ++a) q[a] = derivative(u, m, n, b, a, be);

    // w_t multiplies the perturbation gradient D_t(dh)
    std::vector<std::vector<double>> w(m, std::vector<double>(N));
    const std::size_t d = static_cast<std::size_t>(m) + 1;
    double xi[3], grad_psi[3], hess_psi[9], psival;
    for (std::size_t i = 0; i < N; ++i) {
        const double J = met.area_element[i];
        double qg = 0.0;
        for (int a = 0; a < m; ++a) qg += q[a][i] * met.gradient[a][i];
        const double r = (eps / p) * abs_power(met.mean_curvature[i], p);
        for (int a = 0; a < m; ++a) xi[a] = -met.gradient[a][i];
        xi[m] = 1.0;
        setup_.psi.eval(std::span<const double>(xi, d), psival,
                        std::span<double>(grad_psi, d), std::span<double>(hess_psi, d * d));
        for (int t = 0; t < m; ++t) {
            const double gt = met.gradient[t][i];
            w[t][i] = q[t][i] / J - qg * gt / (J * J * J) + r * gt / J - grad_psi[t];
        }
    }

    std::vector<double> grad(N, 0.0);
    for (int t = 0; t < m; ++t) {
        std::vector<double> dw = derivative(w[t], m, n, b, t, be);
        for (std::size_t i = 0; i < N; ++i) grad[i] -= dw[i];
    }

    const std::vector<double> sub = substrate_term(h, frozen);
    for (std::size_t i = 0; i < N; ++i) grad[i] += sub[i];
    return grad;
}

// ---------------------------------------------------------------------------
// weak-form residuals

struct EnergyModel::WeakFields {
    int m = 0, n = 0;
    double b = 0.0, cell = 0.0;
    std::vector<double> F0;                // pairs with phi (empty if zero)
    std::vector<std::vector<double>> F1;   // pairs with D_a phi
    std::vector<std::vector<double>> F2;   // pairs with D_ab phi: xx [, xy, yy]
};

EnergyModel::WeakFields EnergyModel::weak_fields(const Profile& h,
                                                 const std::vector<double>* v,
                                                 double tau) const {
    if (setup_.psi.dim() != h.m() + 1)
        throw std::invalid_argument("EnergyModel: anisotropy dimension must be m + 1");
    const SurfaceMetrics met = metrics(h, setup_.backend);
    const int m = h.m(), n = h.n();
    const std::size_t N = h.size();
    const double b = h.b();
    const double eps = setup_.epsilon, p = setup_.p;
    const DiffBackend be = setup_.backend;

    std::vector<std::vector<double>> d2(m == 1 ? 1 : 3);
    d2[0] = second_derivative(h.values(), m, n, b, 0, 0, be);
    if (m == 2) {
        d2[1] = second_derivative(h.values(), m, n, b, 0, 1, be);
        d2[2] = second_derivative(h.values(), m, n, b, 1, 1, be);
    }

    WeakFields wf;
    wf.m = m;
    wf.n = n;
    wf.b = b;
    wf.cell = h.cell_volume();
    wf.F1.assign(m, std::vector<double>(N, 0.0));
    wf.F2.assign(m == 1 ? 1 : 3, std::vector<double>(N, 0.0));

    const bool has_sub = setup_.elastic || setup_.potential || v;
    if (has_sub) {
        wf.F0 = substrate_term(h, nullptr);
        if (v) {
            if (v->size() != N)
                throw std::invalid_argument("EnergyModel: v size mismatch");
            for (std::size_t i = 0; i < N; ++i) wf.F0[i] -= (*v)[i] / tau;
        }
    }

    const std::size_t dd = static_cast<std::size_t>(m) + 1;
    double xi[3], grad_psi[3], hess_psi[9], psival;
    for (std::size_t i = 0; i < N; ++i) {
        const double J = met.area_element[i];
        const double J2 = J * J;
        const double H = met.mean_curvature[i];
        const double w = eps * odd_power(H, p);
        const double r = (eps / p) * abs_power(H, p);
        const double g[2] = {met.gradient[0][i], m == 2 ? met.gradient[1][i] : 0.0};
        const double hxx = d2[0][i];
        const double hxy = m == 2 ? d2[1][i] : 0.0;
        const double hyy = m == 2 ? d2[2][i] : 0.0;
        const double lap = hxx + (m == 2 ? hyy : 0.0);
        const double d2g[2] = {hxx * g[0] + hxy * g[1], hxy * g[0] + hyy * g[1]};
        const double d2gg = g[0] * d2g[0] + g[1] * d2g[1];
        for (int a = 0; a < m; ++a) xi[a] = -g[a];
        xi[m] = 1.0;
        setup_.psi.eval(std::span<const double>(xi, dd), psival,
                        std::span<double>(grad_psi, dd), std::span<double>(hess_psi, dd * dd));
        for (int a = 0; a < m; ++a) {
            wf.F1[a][i] = -grad_psi[a] + r * g[a] / J + w * lap * g[a] / J2 +
                          2.0 * w * d2g[a] / J2 - 3.0 * w * d2gg * g[a] / (J2 * J2);
        }
        wf.F2[0][i] = w * (-1.0 + g[0] * g[0] / J2);
        if (m == 2) {
            wf.F2[1][i] = w * g[0] * g[1] / J2;
            wf.F2[2][i] = w * (-1.0 + g[1] * g[1] / J2);
        }
    }
    return wf;
}

namespace {

// sup over the trig bank of |R(phi)| / ||phi||_{H^1}; the two phases at each
// wavevector are combined in quadrature, making the value translation
// invariant.  Test derivatives are analytic (the bank is band limited).
double residual_sup(const EnergyModel::WeakFields& wf, int kmax) {
    const int n = wf.n, m = wf.m;
    const double b = wf.b;
    const double two_pi = 2.0 * 3.14159265358979323846;
    const int keff = std::min(kmax, n / 2 - 1);
    if (keff < 1) throw std::invalid_argument("residual bank needs n >= 4");

    spectral::Spectrum S0;
    const bool has0 = !wf.F0.empty();
    if (has0) S0 = spectral::analyze(wf.F0, m, n, b);
    std::vector<spectral::Spectrum> S1, S2;
    for (const auto& f : wf.F1) S1.push_back(spectral::analyze(f, m, n, b));
    for (const auto& f : wf.F2) S2.push_back(spectral::analyze(f, m, n, b));

    const double vol = std::pow(b, m);
    double sup = 0.0;
    auto eval = [&](int k1, int k2) {
        const std::size_t ix = static_cast<std::size_t>((k1 + n) % n);
        const std::size_t idx =
            (m == 1) ? ix : static_cast<std::size_t>((k2 + n) % n) * n + ix;
        const double kh1 = two_pi * k1 / b;
        const double kh2 = two_pi * k2 / b;
        std::complex<double> T = has0 ? S0.c[idx] : std::complex<double>(0.0);
        T -= std::complex<double>(0.0, 1.0) * (kh1 * S1[0].c[idx]);
        if (m == 2) T -= std::complex<double>(0.0, 1.0) * (kh2 * S1[1].c[idx]);
        if (m == 1) {
            T -= kh1 * kh1 * S2[0].c[idx];
        } else {
            T -= kh1 * kh1 * S2[0].c[idx] + 2.0 * kh1 * kh2 * S2[1].c[idx] +
                 kh2 * kh2 * S2[2].c[idx];
        }
        const double kap2 = kh1 * kh1 + kh2 * kh2;
        const double h1 = std::sqrt((1.0 + kap2) * vol / 2.0);
        sup = std::max(sup, vol * std::abs(T) / h1);
    };
    if (m == 1) {
        for (int k = 1; k <= keff; ++k) eval(k, 0);
    } else {
        for (int k2 = 1; k2 <= keff; ++k2) eval(0, k2);
        for (int k1 = 1; k1 <= keff; ++k1)
            for (int k2 = -keff; k2 <= keff; ++k2) eval(k1, k2);
    }
    return sup;
}

} // namespace

double EnergyModel::criticality_residual(const Profile& h, int kmax) const {
    return residual_sup(weak_fields(h, nullptr, 0.0), kmax);
}

double EnergyModel::weak_residual(const Profile& h_prev, const Profile& h, double tau,
                                  int kmax) const {
    if (h_prev.m() != h.m() || h_prev.n() != h.n() ||
        std::abs(h_prev.b() - h.b()) > 1e-12 * h.b())
        throw std::invalid_argument("weak_residual: profiles on different grids");
    if (!(tau > 0.0)) throw std::invalid_argument("weak_residual: tau must be positive");
    MetricOperator op(h_prev, setup_.backend);
    std::vector<double> warm;
    const PenaltyResult pen = mm_penalty(op, h.values(), h_prev.values(), &warm);
    return residual_sup(weak_fields(h, &pen.v, tau), kmax);
}

double EnergyModel::eq51_diagnostic(const Profile& h) const {
    const SurfaceMetrics met = metrics(h, setup_.backend);
    const std::size_t N = h.size();
    const int m = h.m(), n = h.n();
    const double b = h.b();
    std::vector<double> wfield(N);
    for (std::size_t i = 0; i < N; ++i)
        wfield[i] = odd_power(met.mean_curvature[i], setup_.p);
    std::vector<double> wxx = second_derivative(wfield, m, n, b, 0, 0, setup_.backend);
    double total = 0.0;
    if (m == 1) {
        for (double v : wxx) total += v * v;
    } else {
        std::vector<double> wxy = second_derivative(wfield, m, n, b, 0, 1, setup_.backend);
        std::vector<double> wyy = second_derivative(wfield, m, n, b, 1, 1, setup_.backend);
        for (std::size_t i = 0; i < N; ++i)
            total += wxx[i] * wxx[i] + 2.0 * wxy[i] * wxy[i] + wyy[i] * wyy[i];
    }
    return total * h.cell_volume();
}

double EnergyModel::weak_pairing(const Profile& h, const std::vector<double>& phi,
                                 const std::vector<double>* v, double tau) const {
    if (phi.size() != h.size())
        throw std::invalid_argument("weak_pairing: phi size mismatch");
    const WeakFields wf = weak_fields(h, v, tau);
    const int m = h.m(), n = h.n();
    const double b = h.b();
    const DiffBackend be = setup_.backend;
    const std::size_t N = phi.size();
    double acc = 0.0;
    if (!wf.F0.empty())
        for (std::size_t i = 0; i < N; ++i) acc += wf.F0[i] * phi[i];
    for (int a = 0; a < m; ++a) {
        std::vector<double> dphi = derivative(phi, m, n, b, a, be);
        for (std::size_t i = 0; i < N; ++i) acc += wf.F1[a][i] * dphi[i];
    }
    std::vector<double> pxx = second_derivative(phi, m, n, b, 0, 0, be);
    for (std::size_t i = 0; i < N; ++i) acc += wf.F2[0][i] * pxx[i];
    if (m == 2) {
        std::vector<double> pxy = second_derivative(phi, m, n, b, 0, 1, be);
        std::vector<double> pyy = second_derivative(phi, m, n, b, 1, 1, be);
        for (std::size_t i = 0; i < N; ++i)
            acc += 2.0 * wf.F2[1][i] * pxy[i] + wf.F2[2][i] * pyy[i];
    }
    return acc * wf.cell;
}

} // namespace filmflow
