#include "filmflow/probes.hpp"

#include "filmflow/surface_pde.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace filmflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::size_t field_size(int dim, int n) {
    return dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
}

// mean-zero random trig polynomial with |k| <= degree and coefficient decay
// (1+|k|)^{-decay}
std::vector<double> random_field(SplitMix64& rng, int dim, int n, double b, int degree,
                                 double decay) {
    spectral::Spectrum s;
    s.m = dim;
    s.n = n;
    s.b = b;
    s.c.assign(field_size(dim, n), 0.0);
    auto put = [&](int k1, int k2) {
        const double kabs = std::sqrt(static_cast<double>(k1) * k1 +
                                      static_cast<double>(k2) * k2);
        const double amp = rng.normal() * std::pow(1.0 + kabs, -decay);
        const double phase = 2.0 * kPi * rng.uniform();
        const std::complex<double> c =
            0.5 * amp * std::complex<double>(std::cos(phase), std::sin(phase));
        const std::size_t ip = static_cast<std::size_t>((k2 + n) % n) * (dim == 2 ? n : 0) +
                               static_cast<std::size_t>((k1 + n) % n);
        const std::size_t im = static_cast<std::size_t>((-k2 + n) % n) * (dim == 2 ? n : 0) +
                               static_cast<std::size_t>((-k1 + n) % n);
        s.c[ip] += c;
        s.c[im] += std::conj(c);
    };
    if (dim == 1) {
        for (int k = 1; k <= degree; ++k) put(k, 0);
    } else {
        for (int k2 = 1; k2 <= degree; ++k2) put(0, k2);
        for (int k1 = 1; k1 <= degree; ++k1)
            for (int k2 = -degree; k2 <= degree; ++k2) put(k1, k2);
    }
    return spectral::synthesize(s);
}

// D_x^ax D_y^ay f through exact spectral multipliers (fields are band
// limited, so Nyquist handling is moot)
std::vector<double> deriv_multi(std::span<const double> f, int dim, int n, double b,
                                int ax, int ay) {
    spectral::Spectrum s = spectral::analyze(f, dim, n, b);
    const double w = 2.0 * kPi / b;
    for (std::size_t idx = 0; idx < s.c.size(); ++idx) {
        const int k1 = spectral::signed_index(static_cast<int>(idx % n), n);
        const int k2 = dim == 2 ? spectral::signed_index(static_cast<int>(idx / n), n) : 0;
        std::complex<double> mult(1.0, 0.0);
        for (int t = 0; t < ax; ++t) mult *= std::complex<double>(0.0, w * k1);
        for (int t = 0; t < ay; ++t) mult *= std::complex<double>(0.0, w * k2);
        s.c[idx] *= mult;
    }
    return spectral::synthesize(s);
}

double binom(int n, int k) {
    double r = 1.0;
    for (int t = 1; t <= k; ++t) r = r * (n - k + t) / t;
    return r;
}

// pointwise Frobenius norm of the full order-j derivative tensor
std::vector<double> tensor_norm_field(std::span<const double> f, int dim, int n, double b,
                                      int order) {
    const std::size_t N = f.size();
    std::vector<double> acc(N, 0.0);
    if (dim == 1) {
        std::vector<double> d = deriv_multi(f, dim, n, b, order, 0);
        for (std::size_t i = 0; i < N; ++i) acc[i] = d[i] * d[i];
    } else {
        for (int a = 0; a <= order; ++a) {
            const double w = binom(order, a);
            std::vector<double> d = deriv_multi(f, dim, n, b, a, order - a);
            for (std::size_t i = 0; i < N; ++i) acc[i] += w * d[i] * d[i];
        }
    }
    for (double& v : acc) v = std::sqrt(v);
    return acc;
}

double deriv_lp(std::span<const double> f, int dim, int n, double b, int order, double p) {
    if (order == 0) return grid_lp(f, dim, n, b, p);
    return grid_lp(tensor_norm_field(f, dim, n, b, order), dim, n, b, p);
}

struct TrialRatio {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio() const { return lhs / rhs; }
};

TrialRatio ratio_A(std::span<const double> f, const ProbeParams& par) {
    TrialRatio r;
    r.lhs = deriv_lp(f, par.dim, par.n, par.b, par.j, par.p);
    const double hi = deriv_lp(f, par.dim, par.n, par.b, par.m, par.p);
    const double lo = grid_lp(f, par.dim, par.n, par.b, par.p);
    const double th = static_cast<double>(par.j) / par.m;
    r.rhs = std::pow(hi, th) * std::pow(lo, 1.0 - th);
    return r;
}

TrialRatio ratio_C(std::span<const double> f, const ProbeParams& par, double theta) {
    TrialRatio r;
    r.lhs = grid_lp(f, par.dim, par.n, par.b, par.q);
    const double hi = deriv_lp(f, par.dim, par.n, par.b, par.m, par.p);
    const double lo = grid_lp(f, par.dim, par.n, par.b, par.p);
    r.rhs = std::pow(hi, theta) * std::pow(lo, 1.0 - theta);
    return r;
}

TrialRatio ratio_D(std::span<const double> f, const ProbeParams& par, double theta) {
    TrialRatio r;
    r.lhs = deriv_lp(f, par.dim, par.n, par.b, par.j, par.q);
    const double hi = deriv_lp(f, par.dim, par.n, par.b, par.m, par.p);
    const double lo = deriv_lp(f, par.dim, par.n, par.b, par.s, par.p);
    r.rhs = std::pow(hi, theta) * std::pow(lo, 1.0 - theta);
    return r;
}

TrialRatio ratio_H1(std::span<const double> f, const ProbeParams& par) {
    TrialRatio r;
    const double l2 = grid_l2(f, par.dim, par.n, par.b);
    r.lhs = l2 * l2;
    r.rhs = deriv_lp(f, par.dim, par.n, par.b, 1, 2.0) *
            hminus1_norm(f, par.dim, par.n, par.b);
    return r;
}

// ratio ||D^2 u||_p / ||Div(a Du)||_p for the metric coefficient
// a = (Id - Dh (x) Dh / J^2) / J of a random gentle profile h
struct MoriniOperator {
    int dim, n;
    double b;
    std::vector<std::vector<double>> a;  // {a11} or {a11, a12, a22}

    MoriniOperator(SplitMix64& rng, const ProbeParams& par, int degree) {
        dim = par.dim;
        n = par.n;
        b = par.b;
        std::vector<double> g = random_field(rng, dim, n, b, degree, par.decay);
        std::vector<std::vector<double>> dg(dim);
        for (int axis = 0; axis < dim; ++axis)
            dg[axis] = deriv_multi(g, dim, n, b, axis == 0 ? 1 : 0, axis == 0 ? 0 : 1);
        double slope = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            double s2 = dg[0][i] * dg[0][i];
            if (dim == 2) s2 += dg[1][i] * dg[1][i];
            slope = std::max(slope, std::sqrt(s2));
        }
        const double scale = slope > 0.0 ? 0.4 / slope : 0.0;
        for (int axis = 0; axis < dim; ++axis)
            for (double& v : dg[axis]) v *= scale;

        a.assign(dim == 1 ? 1 : 3, std::vector<double>(g.size()));
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double g1 = dg[0][i];
            const double g2 = dim == 2 ? dg[1][i] : 0.0;
            const double J2 = 1.0 + g1 * g1 + g2 * g2;
            const double J = std::sqrt(J2);
            a[0][i] = (1.0 - g1 * g1 / J2) / J;
            if (dim == 2) {
                a[1][i] = (-g1 * g2 / J2) / J;
                a[2][i] = (1.0 - g2 * g2 / J2) / J;
            }
        }
    }

    std::vector<double> apply(std::span<const double> u) const {
        std::vector<double> ux = deriv_multi(u, dim, n, b, 1, 0);
        std::vector<double> uy;
        if (dim == 2) uy = deriv_multi(u, dim, n, b, 0, 1);
        std::vector<std::vector<double>> flux(dim, std::vector<double>(u.size()));
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (dim == 1) {
                flux[0][i] = a[0][i] * ux[i];
            } else {
                flux[0][i] = a[0][i] * ux[i] + a[1][i] * uy[i];
                flux[1][i] = a[1][i] * ux[i] + a[2][i] * uy[i];
            }
        }
        std::vector<double> out(u.size(), 0.0);
        std::vector<double> d = deriv_multi(flux[0], dim, n, b, 1, 0);
        for (std::size_t i = 0; i < u.size(); ++i) out[i] += d[i];
        if (dim == 2) {
            d = deriv_multi(flux[1], dim, n, b, 0, 1);
            for (std::size_t i = 0; i < u.size(); ++i) out[i] += d[i];
        }
        return out;
    }
};

TrialRatio ratio_morini(const MoriniOperator& op, std::span<const double> u,
                        const ProbeParams& par) {
    TrialRatio r;
    r.lhs = deriv_lp(u, par.dim, par.n, par.b, 2, par.p);
    r.rhs = grid_lp(op.apply(u), par.dim, par.n, par.b, par.p);
    return r;
}

} // namespace

ProbeId probe_id_from_string(const std::string& s) {
    if (s == "A") return ProbeId::A;
    if (s == "C") return ProbeId::C;
    if (s == "D") return ProbeId::D;
    if (s == "H1") return ProbeId::H1;
    if (s == "morini") return ProbeId::morini;
    throw std::invalid_argument("unknown probe id '" + s + "' (try A, C, D, H1, morini)");
}

std::string to_string(ProbeId id) {
    switch (id) {
    case ProbeId::A: return "A";
    case ProbeId::C: return "C";
    case ProbeId::D: return "D";
    case ProbeId::H1: return "H1";
    case ProbeId::morini: return "morini";
    }
    return "?";
}

ProbeReport run_probe(ProbeId id, const ProbeParams& par, int trials, std::uint64_t seed) {
    if (par.dim != 1 && par.dim != 2)
        throw std::domain_error("probe: dim must be 1 or 2");
    if (!is_power_of_two(par.n) || par.n < 8)
        throw std::domain_error("probe: n must be a power of two >= 8");
    if (!(par.b > 0.0)) throw std::domain_error("probe: b must be positive");
    if (trials < 1) throw std::domain_error("probe: need at least one trial");
    if (!(par.decay >= 0.0)) throw std::domain_error("probe: decay must be >= 0");
    const int degree = par.degree > 0 ? par.degree : par.n / 4;
    if (degree >= par.n / 2) throw std::domain_error("probe: degree must be below n/2");

    const double nd = static_cast<double>(par.dim);
    double theta = 0.0;
    switch (id) {
    case ProbeId::A:
        if (!(par.p >= 1.0)) throw std::domain_error("probe A: p must be >= 1 (inf allowed)");
        if (!(par.j >= 1 && par.j < par.m))
            throw std::domain_error("probe A: need 1 <= j < m");
        break;
    case ProbeId::C: {
        if (!(par.p >= 1.0) || !(par.q >= 1.0))
            throw std::domain_error("probe C: p, q must be >= 1");
        if (par.m < 1) throw std::domain_error("probe C: m must be >= 1");
        const double ip = std::isinf(par.p) ? 0.0 : nd / par.p;
        const double iq = std::isinf(par.q) ? 0.0 : nd / par.q;
        theta = (ip - iq) / par.m;
        if (!(theta >= 0.0 && theta <= 1.0))
            throw std::domain_error("probe C: exponents give theta outside [0,1]");
        break;
    }
    case ProbeId::D: {
        if (!(par.p >= 1.0) || !(par.q >= 1.0))
            throw std::domain_error("probe D: p, q must be >= 1");
        if (!(par.s >= 0 && par.s <= par.j && par.j <= par.m && par.s < par.m))
            throw std::domain_error("probe D: need 0 <= s <= j <= m, s < m");
        const double ip = std::isinf(par.p) ? 0.0 : nd / par.p;
        const double iq = std::isinf(par.q) ? 0.0 : nd / par.q;
        theta = (par.j - par.s + ip - iq) / (par.m - par.s);
        if (!(theta >= 0.0 && theta <= 1.0))
            throw std::domain_error("probe D: exponents give theta outside [0,1]");
        break;
    }
    case ProbeId::H1:
        break;
    case ProbeId::morini:
        if (!(par.p > 1.0) || std::isinf(par.p))
            throw std::domain_error("probe morini: p must be finite and > 1");
        break;
    }

    ProbeReport rep;
    rep.id = id;
    rep.params = par;
    rep.trials = trials;
    rep.seed = seed;
    rep.cap = (id == ProbeId::H1) ? 1.0 : 10.0;

    SplitMix64 rng(seed);
    double sum = 0.0;
    for (int t = 0; t < trials; ++t) {
        TrialRatio tr;
        double ratio_scaled;
        if (id == ProbeId::morini) {
            MoriniOperator op(rng, par, degree);
            std::vector<double> u = random_field(rng, par.dim, par.n, par.b, degree, par.decay);
            tr = ratio_morini(op, u, par);
            const double c = 0.5 + 3.0 * rng.uniform();
            std::vector<double> uc(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) uc[i] = c * u[i];
            ratio_scaled = ratio_morini(op, uc, par).ratio();
        } else {
            std::vector<double> f = random_field(rng, par.dim, par.n, par.b, degree, par.decay);
            auto compute = [&](std::span<const double> g) {
                switch (id) {
                case ProbeId::A: return ratio_A(g, par);
                case ProbeId::C: return ratio_C(g, par, theta);
                case ProbeId::D: return ratio_D(g, par, theta);
                default: return ratio_H1(g, par);
                }
            };
            tr = compute(f);
            const double c = 0.5 + 3.0 * rng.uniform();
            std::vector<double> fc(f.size());
            for (std::size_t i = 0; i < f.size(); ++i) fc[i] = c * f[i];
            ratio_scaled = compute(fc).ratio();
        }
        const double ratio = tr.ratio();
        if (!std::isfinite(ratio))
            throw std::runtime_error("probe: degenerate trial (zero right-hand side)");
        if (ratio > rep.worst_ratio) {
            rep.worst_ratio = ratio;
            rep.worst_trial = t;
        }
        sum += ratio;
        rep.max_homogeneity_dev =
            std::max(rep.max_homogeneity_dev, std::abs(ratio_scaled - ratio) / ratio);
    }
    rep.mean_ratio = sum / trials;
    rep.capped = rep.worst_ratio <= rep.cap * (1.0 + 1e-12);
    return rep;
}

} // namespace filmflow
