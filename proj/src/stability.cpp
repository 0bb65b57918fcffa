#include "filmflow/stability.hpp"

#include "filmflow/anisotropy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace filmflow {

namespace {
constexpr double kPi = 3.14159265358979323846;

void check_nu(double nu) {
    if (!(nu >= 0.0) || !(nu < 0.5))
        throw std::domain_error("depth kernel requires a Poisson ratio in [0, 1/2)");
}
} // namespace

double poisson_modulus(const LameParams& p) {
    p.validate();
    return p.lambda / (2.0 * (p.lambda + p.mu));
}

double grinfeld_J(double y, double nu) {
    check_nu(nu);
    if (!(y >= 0.0) || !std::isfinite(y))
        throw std::domain_error("grinfeld_J: y must be nonnegative and finite");
    if (y == 0.0) return 0.0;
    const double s = 3.0 - 4.0 * nu;
    // numerator and denominator scaled by 4 e^{-2y}:
    //   num = 4 y e^{-2y} + s (1 - e^{-4y})
    //   den = (16 (1-nu)^2 + 4 y^2) e^{-2y} + s (1 - e^{-2y})^2
    const double e2 = std::exp(-2.0 * y);
    const double num = 4.0 * y * e2 - s * std::expm1(-4.0 * y);
    const double omt = -std::expm1(-2.0 * y);
    const double den =
        (16.0 * (1.0 - nu) * (1.0 - nu) + 4.0 * y * y) * e2 + s * omt * omt;
    return num / den;
}

double grinfeld_K(double y, double nu) {
    check_nu(nu);
    if (!(y >= 0.0) || !std::isfinite(y))
        throw std::domain_error("grinfeld_K: y must be nonnegative and finite");
    if (y == 0.0) return 0.0;
    double best = 0.0;
    for (long n = 1;; ++n) {
        best = std::max(best, grinfeld_J(n * y, nu) / static_cast<double>(n));
        // remaining terms are bounded by 1/(n+1) since J < 1
        if (static_cast<double>(n + 1) * best > 1.0) break;
        if (n > 50'000'000L)
            throw std::domain_error("grinfeld_K: y too small to certify the maximum");
    }
    return best;
}

double threshold_rhs(double b, const LameParams& lame, double psi11) {
    lame.validate();
    if (!(b > 0.0)) throw std::invalid_argument("threshold_rhs: b must be positive");
    if (!(psi11 > 0.0))
        throw std::invalid_argument("threshold_rhs: psi11 must be positive");
    if (lame.e0 == 0.0)
        throw std::invalid_argument("threshold_rhs: e0 must be nonzero");
    return kPi * (2.0 * lame.mu + lame.lambda) * psi11 /
           (4.0 * lame.e0 * lame.e0 * lame.mu * (lame.mu + lame.lambda) * b);
}

double local_min_thickness(double b, const LameParams& lame, double psi11) {
    const double rhs = threshold_rhs(b, lame, psi11);
    const double nu = poisson_modulus(lame);
    check_nu(nu);
    if (!(rhs < 1.0)) return std::numeric_limits<double>::infinity();

    double lo = 1e-6;
    if (grinfeld_K(lo, nu) >= rhs)
        throw std::domain_error("local_min_thickness: threshold below resolution");
    double hi = 1.0;
    while (grinfeld_K(hi, nu) <= rhs) {
        hi *= 2.0;
        if (hi > 1e6)
            throw std::runtime_error("local_min_thickness: bracket search failed");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (grinfeld_K(mid, nu) < rhs ? lo : hi) = mid;
    }
    const double y = 0.5 * (lo + hi);
    return y * b / (2.0 * kPi);
}

double second_variation_elastic_exact(double d, double b, int k, const LameParams& lame) {
    lame.validate();
    if (!(d > 0.0) || !(b > 0.0) || k < 1)
        throw std::invalid_argument("second_variation_elastic_exact: bad arguments");
    const double nu = poisson_modulus(lame);
    const double kap = 2.0 * kPi * k / b;
    const double chat = 4.0 * lame.e0 * lame.e0 * lame.mu * (lame.mu + lame.lambda) /
                        (2.0 * lame.mu + lame.lambda);
    return -2.0 * chat * kap * grinfeld_J(kap * d, nu) * (b / 2.0);
}

SecondVariation second_variation_flat(double d, double b, int k, const LameParams& lame,
                                      double psi11, double eps_curv, int nx, int ny) {
    if (!(d > 0.0)) throw std::invalid_argument("second_variation_flat: d must be positive");
    if (k < 1) throw std::invalid_argument("second_variation_flat: k must be >= 1");
    if (k >= nx / 2)
        throw std::invalid_argument("second_variation_flat: mode k needs nx > 2k");
    const Profile flat = Profile::flat(1, b, nx, d);
    PlaneStrainSolver solver(nx, ny, b);
    const ElasticField u = solver.solve(flat, lame);
    std::vector<double> phi(nx);
    for (int i = 0; i < nx; ++i)
        phi[i] = std::cos(2.0 * kPi * k * i / nx);
    const PlaneStrainSolver::VPhi v = solver.v_phi(flat, u, phi);

    const double kap = 2.0 * kPi * k / b;
    SecondVariation sv;
    sv.elastic = -2.0 * v.energy;
    sv.surface = psi11 * kap * kap * (b / 2.0);
    sv.curvature = eps_curv * kap * kap * kap * kap * (b / 2.0);
    sv.total = sv.elastic + sv.surface + sv.curvature;
    return sv;
}

namespace {

// min over modes of the sharp second variation at thickness d, sharing the
// solver so mesh pattern and CG warm starts carry across evaluations
struct ThresholdScanner {
    double b;
    LameParams lame;
    double psi11;
    int nx, ny, kmax;
    PlaneStrainSolver solver;
    std::vector<std::vector<double>> warm_k;
    std::vector<StabilityRow>* rows;

    ThresholdScanner(double b_, const LameParams& lame_, double psi11_, int nx_, int ny_,
                     int kmax_, std::vector<StabilityRow>* rows_)
        : b(b_), lame(lame_), psi11(psi11_), nx(nx_), ny(ny_), kmax(kmax_),
          solver(nx_, ny_, b_), warm_k(kmax_), rows(rows_) {}

    double min_total(double d) {
        const Profile flat = Profile::flat(1, b, nx, d);
        const ElasticField u = solver.solve(flat, lame);
        double best = std::numeric_limits<double>::infinity();
        std::vector<double> phi(nx);
        for (int k = 1; k <= kmax; ++k) {
            for (int i = 0; i < nx; ++i)
                phi[i] = std::cos(2.0 * kPi * k * i / nx);
            const PlaneStrainSolver::VPhi v = solver.v_phi(flat, u, phi, &warm_k[k - 1]);
            const double kap = 2.0 * kPi * k / b;
            SecondVariation sv;
            sv.elastic = -2.0 * v.energy;
            sv.surface = psi11 * kap * kap * (b / 2.0);
            sv.total = sv.elastic + sv.surface;
            if (rows) rows->push_back({d, k, sv});
            best = std::min(best, sv.total);
        }
        return best;
    }
};

} // namespace

double numeric_flat_threshold(double b, const LameParams& lame, double psi11,
                              int nx, int ny, int kmax, double d_lo, double d_hi,
                              double rel_tol, std::vector<StabilityRow>* rows) {
    lame.validate();
    if (!(0.0 < d_lo && d_lo < d_hi))
        throw std::invalid_argument("numeric_flat_threshold: need 0 < d_lo < d_hi");
    if (kmax < 1 || kmax >= nx / 2)
        throw std::invalid_argument("numeric_flat_threshold: kmax out of range");
    ThresholdScanner scan(b, lame, psi11, nx, ny, kmax, rows);
    double s_lo = scan.min_total(d_lo);
    double s_hi = scan.min_total(d_hi);
    if (!(s_lo > 0.0) || !(s_hi < 0.0))
        throw std::runtime_error(
            "numeric_flat_threshold: no stable-to-unstable sign change in [d_lo, d_hi]");
    double lo = d_lo, hi = d_hi;
    for (int it = 0; it < 200 && hi - lo > rel_tol * 0.5 * (hi + lo); ++it) {
        const double mid = 0.5 * (lo + hi);
        (scan.min_total(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

LiapunovResult liapunov_experiment(const LiapunovConfig& cfg) {
    cfg.lame.validate();
    if (!(cfg.d > 0.0) || !(cfg.amplitude_rel > 0.0) || cfg.k < 1 || cfg.steps < 1)
        throw std::invalid_argument("liapunov_experiment: bad configuration");

    const double a = cfg.amplitude_rel * cfg.d;
    std::vector<double> vals(cfg.n);
    for (int i = 0; i < cfg.n; ++i)
        vals[i] = cfg.d + a * std::cos(2.0 * kPi * cfg.k * i / cfg.n);
    const Profile h0(1, cfg.b, cfg.n, std::move(vals));

    EnergyModel::Setup setup;
    setup.psi = Anisotropy::isotropic(2);
    setup.epsilon = cfg.epsilon;
    setup.p = cfg.p;
    setup.backend = DiffBackend::spectral;
    setup.elastic = ElasticSpec{cfg.lame, cfg.ny};
    const EnergyModel model(std::move(setup));

    const SurfaceMetrics met0 = metrics(h0, DiffBackend::spectral);
    FlowParams flow;
    flow.epsilon = cfg.epsilon;
    flow.p = cfg.p;
    flow.tau = cfg.tau;
    flow.lambda0 = 2.0 * (1.0 + met0.max_slope);

    auto deviation = [&](const Profile& h) {
        std::vector<double> dev(h.size());
        const double mean = grid_mean(h.values());
        for (std::size_t i = 0; i < dev.size(); ++i) dev[i] = h[i] - mean;
        return grid_l2(dev, h.m(), h.n(), h.b());
    };

    LiapunovResult out;
    out.trace = evolve(h0, model, flow, cfg.steps);
    out.initial_deviation = deviation(h0);
    out.final_deviation = deviation(out.trace.profiles.back());
    const double ratio = out.final_deviation / out.initial_deviation;
    if (ratio <= 0.5)
        out.classification = LiapunovResult::Class::decay;
    else if (ratio >= 2.0)
        out.classification = LiapunovResult::Class::growth;
    else
        out.classification = LiapunovResult::Class::inconclusive;
    return out;
}

} // namespace filmflow
