#include "filmflow/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace filmflow {

SurfaceMetrics metrics(const Profile& h, DiffBackend be) {
    const int m = h.m();
    const int n = h.n();
    const double b = h.b();
    const std::size_t sz = h.size();
    const std::vector<double>& v = h.values();

    SurfaceMetrics g;
    g.m = m;
    g.n = n;
    g.b = b;
    g.gradient.resize(m);
    for (int a = 0; a < m; ++a) g.gradient[a] = derivative(v, m, n, b, a, be);

    g.area_element.resize(sz);
    g.normal.assign(m + 1, std::vector<double>(sz));
    g.max_slope = 0.0;
    for (std::size_t i = 0; i < sz; ++i) {
        double s2 = 0.0;
        for (int a = 0; a < m; ++a) s2 += g.gradient[a][i] * g.gradient[a][i];
        double J = std::sqrt(1.0 + s2);
        g.area_element[i] = J;
        for (int a = 0; a < m; ++a) g.normal[a][i] = -g.gradient[a][i] / J;
        g.normal[m][i] = 1.0 / J;
        g.max_slope = std::max(g.max_slope, std::sqrt(s2));
    }

    // H = -Div(Dh/J); the discrete divergence of a periodic field has zero
    // mean, the residual subtraction removes the rounding part of it.
    std::vector<std::vector<double>> flux(m, std::vector<double>(sz));
    for (int a = 0; a < m; ++a)
        for (std::size_t i = 0; i < sz; ++i)
            flux[a][i] = g.gradient[a][i] / g.area_element[i];
    g.mean_curvature = divergence(flux, m, n, b, be);
    for (double& x : g.mean_curvature) x = -x;
    double mean = grid_mean(g.mean_curvature);
    for (double& x : g.mean_curvature) x -= mean;

    g.kappa1.resize(sz);
    g.kappa2.assign(sz, 0.0);
    g.shape_norm_sq.resize(sz);
    if (m == 1) {
        for (std::size_t i = 0; i < sz; ++i) {
            g.kappa1[i] = g.mean_curvature[i];
            g.shape_norm_sq[i] = g.kappa1[i] * g.kappa1[i];
        }
    } else {
        // Gauss curvature det(shape) = det(D^2 h) / J^4.
        std::vector<double> hxx = second_derivative(v, m, n, b, 0, 0, be);
        std::vector<double> hyy = second_derivative(v, m, n, b, 1, 1, be);
        std::vector<double> hxy = second_derivative(v, m, n, b, 0, 1, be);
        for (std::size_t i = 0; i < sz; ++i) {
            double J = g.area_element[i];
            double det = (hxx[i] * hyy[i] - hxy[i] * hxy[i]) / (J * J * J * J);
            double H = g.mean_curvature[i];
            double disc = H * H - 4.0 * det;
            double root = disc > 0.0 ? std::sqrt(disc) : 0.0;
            g.kappa1[i] = 0.5 * (H + root);
            g.kappa2[i] = 0.5 * (H - root);
            g.shape_norm_sq[i] = g.kappa1[i] * g.kappa1[i] + g.kappa2[i] * g.kappa2[i];
        }
    }
    return g;
}

double surface_integral(const SurfaceMetrics& g, std::span<const double> f) {
    if (f.size() != g.area_element.size())
        throw std::invalid_argument("surface_integral: field size mismatch");
    double cell = std::pow(g.b / g.n, g.m);
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g.area_element[i];
    return s * cell;
}

double surface_integral(const Profile& h, std::span<const double> f, DiffBackend be) {
    return surface_integral(metrics(h, be), f);
}

double volume(const Profile& h) {
    return grid_integral(h.values(), h.m(), h.n(), h.b());
}

double surface_area(const SurfaceMetrics& g) {
    double cell = std::pow(g.b / g.n, g.m);
    double s = 0.0;
    for (double J : g.area_element) s += J;
    return s * cell;
}

} // namespace filmflow
