#include "filmflow/anisotropy.hpp"

#include <cmath>
#include <stdexcept>

namespace filmflow {

namespace {

void check_dim(int dim) {
    if (dim != 2 && dim != 3)
        throw std::invalid_argument("Anisotropy: dim must be 2 or 3");
}

// Symmetric positive definiteness via leading principal minors.
bool spd(const std::vector<double>& M, int dim) {
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j)
            if (std::abs(M[i * dim + j] - M[j * dim + i]) > 1e-14 * (1.0 + std::abs(M[i * dim + j])))
                return false;
    if (!(M[0] > 0.0)) return false;
    double d2 = M[0] * M[dim + 1] - M[1] * M[dim];
    if (!(d2 > 0.0)) return false;
    if (dim == 3) {
        double det = M[0] * (M[4] * M[8] - M[5] * M[7]) -
                     M[1] * (M[3] * M[8] - M[5] * M[6]) +
                     M[2] * (M[3] * M[7] - M[4] * M[6]);
        if (!(det > 0.0)) return false;
    }
    return true;
}

} // namespace

Anisotropy Anisotropy::isotropic(int dim) {
    check_dim(dim);
    return Anisotropy(Family::isotropic, dim);
}

Anisotropy Anisotropy::elliptic(int dim, const std::vector<double>& m_rowmajor) {
    check_dim(dim);
    if (m_rowmajor.size() != static_cast<std::size_t>(dim) * dim)
        throw std::invalid_argument("Anisotropy::elliptic: matrix must be dim x dim");
    if (!spd(m_rowmajor, dim))
        throw std::invalid_argument("Anisotropy::elliptic: matrix must be symmetric positive definite");
    Anisotropy a(Family::elliptic, dim);
    a.M_ = m_rowmajor;
    return a;
}

Anisotropy Anisotropy::regularized_cubic(int dim, double gamma) {
    check_dim(dim);
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw std::invalid_argument("Anisotropy::regularized_cubic: gamma must be >= 0");
    Anisotropy a(Family::regularized_cubic, dim);
    a.gamma_ = gamma;
    return a;
}

double Anisotropy::value(std::span<const double> xi) const {
    double v;
    std::array<double, 3> g;
    std::array<double, 9> h;
    eval(xi, v, std::span<double>(g.data(), dim_), std::span<double>(h.data(), std::size_t(dim_) * dim_));
    return v;
}

void Anisotropy::eval(std::span<const double> xi, double& val,
                      std::span<double> grad, std::span<double> hess) const {
    const int d = dim_;
    if (static_cast<int>(xi.size()) != d)
        throw std::invalid_argument("Anisotropy::eval: xi has wrong dimension");
    if (static_cast<int>(grad.size()) != d || static_cast<int>(hess.size()) != d * d)
        throw std::invalid_argument("Anisotropy::eval: output spans have wrong size");
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += xi[i] * xi[i];
    if (!(r2 > 0.0))
        throw std::domain_error("Anisotropy::eval: xi must be nonzero");
    double r = std::sqrt(r2);

    switch (family_) {
    case Family::isotropic: {
        val = r;
        for (int i = 0; i < d; ++i) grad[i] = xi[i] / r;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                hess[i * d + j] = ((i == j ? 1.0 : 0.0) - xi[i] * xi[j] / r2) / r;
        return;
    }
    case Family::elliptic: {
        std::array<double, 3> mx{};
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            for (int j = 0; j < d; ++j) s += M_[i * d + j] * xi[j];
            mx[i] = s;
        }
        double q = 0.0;
        for (int i = 0; i < d; ++i) q += xi[i] * mx[i];
        val = std::sqrt(q);
        for (int i = 0; i < d; ++i) grad[i] = mx[i] / val;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                hess[i * d + j] = M_[i * d + j] / val - mx[i] * mx[j] / (val * val * val);
        return;
    }
    case Family::regularized_cubic: {
        // psi = r + gamma * S / r^3 with S = sum xi_i^4.
        double S = 0.0;
        for (int i = 0; i < d; ++i) S += xi[i] * xi[i] * xi[i] * xi[i];
        double r3 = r2 * r, r5 = r3 * r2, r7 = r5 * r2;
        val = r + gamma_ * S / r3;
        for (int i = 0; i < d; ++i)
            grad[i] = xi[i] / r + gamma_ * (4.0 * xi[i] * xi[i] * xi[i] / r3 - 3.0 * S * xi[i] / r5);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double id = (i == j) ? 1.0 : 0.0;
                double base = id / r - xi[i] * xi[j] / r3;
                double cub = 12.0 * xi[i] * xi[i] * id / r3
                           - 12.0 * xi[i] * xi[i] * xi[i] * xi[j] / r5
                           - 12.0 * xi[i] * xi[j] * xi[j] * xi[j] / r5
                           + 15.0 * S * xi[i] * xi[j] / r7
                           - 3.0 * S * id / r5;
                hess[i * d + j] = base + gamma_ * cub;
            }
        return;
    }
    }
    throw std::logic_error("Anisotropy::eval: unreachable");
}

double Anisotropy::convexity_margin(int samples) const {
    if (samples < 1) throw std::invalid_argument("convexity_margin: samples must be >= 1");
    const int d = dim_;
    double margin = std::numeric_limits<double>::infinity();
    std::array<double, 3> xi{};
    std::array<double, 3> g{};
    std::array<double, 9> H{};
    double val = 0.0;

    auto tangential_min = [&](const std::array<double, 3>& t1, const std::array<double, 3>& t2) {
        // Smallest eigenvalue of the hessian projected on span{t1,t2} (or the
        // single tangential value in dim 2, where t2 is unused).
        auto quad = [&](const std::array<double, 3>& u, const std::array<double, 3>& w) {
            double s = 0.0;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) s += u[i] * H[i * d + j] * w[j];
            return s;
        };
        if (d == 2) return quad(t1, t1);
        double a = quad(t1, t1), bq = quad(t1, t2), c = quad(t2, t2);
        double tr = a + c;
        double disc = std::sqrt(std::max((a - c) * (a - c) + 4.0 * bq * bq, 0.0));
        return 0.5 * (tr - disc);
    };

    if (d == 2) {
        for (int s = 0; s < samples; ++s) {
            double th = 2.0 * M_PI * (s + 0.5) / samples;
            xi = {std::cos(th), std::sin(th), 0.0};
            eval(std::span<const double>(xi.data(), 2), val,
                 std::span<double>(g.data(), 2), std::span<double>(H.data(), 4));
            std::array<double, 3> t{-xi[1], xi[0], 0.0};
            margin = std::min(margin, tangential_min(t, t));
        }
    } else {
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (int s = 0; s < samples; ++s) {
            double z = 1.0 - (2.0 * s + 1.0) / samples;
            double rho = std::sqrt(std::max(1.0 - z * z, 0.0));
            double th = golden * s;
            xi = {rho * std::cos(th), rho * std::sin(th), z};
            eval(std::span<const double>(xi.data(), 3), val,
                 std::span<double>(g.data(), 3), std::span<double>(H.data(), 9));
            // Orthonormal tangent basis at xi.
            std::array<double, 3> t1{};
            if (std::abs(xi[2]) < 0.9) t1 = {-xi[1], xi[0], 0.0};
            else t1 = {0.0, -xi[2], xi[1]};
            double nrm = std::sqrt(t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]);
            for (double& x : t1) x /= nrm;
            std::array<double, 3> t2{xi[1] * t1[2] - xi[2] * t1[1],
                                     xi[2] * t1[0] - xi[0] * t1[2],
                                     xi[0] * t1[1] - xi[1] * t1[0]};
            margin = std::min(margin, tangential_min(t1, t2));
        }
    }
    return margin;
}

Anisotropy::AngleDensity Anisotropy::angle_density(double theta) const {
    if (dim_ != 2)
        throw std::invalid_argument("angle_density: requires a dim-2 anisotropy");
    std::array<double, 2> u{std::cos(theta), std::sin(theta)};
    std::array<double, 2> up{-u[1], u[0]};
    double val;
    std::array<double, 2> g;
    std::array<double, 4> H;
    eval(u, val, g, H);
    // g'' = D2psi(u)[u',u'] + Dpsi(u).u'' with u'' = -u and Dpsi(u).u = psi(u).
    double quad = up[0] * (H[0] * up[0] + H[1] * up[1]) + up[1] * (H[2] * up[0] + H[3] * up[1]);
    return {val, quad - val};
}

double Anisotropy::bound_constant() const {
    switch (family_) {
    case Family::isotropic:
        return 1.0;
    case Family::elliptic: {
        // Extreme eigenvalues via the convexity sampler on +-value only.
        int d = dim_;
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        int N = 2048;
        std::array<double, 3> xi{};
        for (int s = 0; s < N; ++s) {
            if (d == 2) {
                double th = 2.0 * M_PI * s / N;
                xi = {std::cos(th), std::sin(th), 0.0};
            } else {
                const double golden = M_PI * (3.0 - std::sqrt(5.0));
                double z = 1.0 - (2.0 * s + 1.0) / N;
                double rho = std::sqrt(std::max(1.0 - z * z, 0.0));
                xi = {rho * std::cos(golden * s), rho * std::sin(golden * s), z};
            }
            double v = value(std::span<const double>(xi.data(), d));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return std::max(hi, 1.0 / lo);
    }
    case Family::regularized_cubic:
        return 1.0 + gamma_;
    }
    throw std::logic_error("bound_constant: unreachable");
}

std::vector<double> anisotropic_curvature(const Profile& h, const Anisotropy& psi,
                                          DiffBackend be) {
    const int m = h.m();
    if (psi.dim() != m + 1)
        throw std::invalid_argument("anisotropic_curvature: psi.dim() must equal h.m()+1");
    const int n = h.n();
    const double b = h.b();
    const std::size_t sz = h.size();

    std::vector<std::vector<double>> grad(m);
    for (int a = 0; a < m; ++a) grad[a] = derivative(h.values(), m, n, b, a, be);

    std::vector<std::vector<double>> P(m, std::vector<double>(sz));
    std::array<double, 3> xi{};
    std::array<double, 3> g{};
    std::array<double, 9> H{};
    double val;
    for (std::size_t i = 0; i < sz; ++i) {
        for (int a = 0; a < m; ++a) xi[a] = -grad[a][i];
        xi[m] = 1.0;
        psi.eval(std::span<const double>(xi.data(), m + 1), val,
                 std::span<double>(g.data(), m + 1),
                 std::span<double>(H.data(), std::size_t(m + 1) * (m + 1)));
        for (int a = 0; a < m; ++a) P[a][i] = g[a];
    }
    return divergence(P, m, n, b, be);
}

} // namespace filmflow
