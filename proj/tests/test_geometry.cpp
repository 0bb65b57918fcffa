#include "filmflow/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace filmflow;

namespace {
constexpr double pi = std::numbers::pi;

Profile graph1(int n, double b, auto&& f) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = f(b * i / n);
    return Profile(1, b, n, std::move(v));
}

Profile graph2(int n, double b, auto&& f) {
    std::vector<double> v(static_cast<std::size_t>(n) * n);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
            v[static_cast<std::size_t>(iy) * n + ix] = f(b * ix / n, b * iy / n);
    return Profile(2, b, n, std::move(v));
}
} // namespace

TEST_CASE("one-dimensional graph metrics against closed forms") {
    const double b = 2 * pi;
    const int n = 256;
    const double a = 0.3;
    Profile h = graph1(n, b, [&](double x) { return 1.0 + a * std::sin(x); });
    SurfaceMetrics g = metrics(h);

    for (int i = 0; i < n; i += 7) {
        const double x = b * i / n;
        const double hp = a * std::cos(x);
        const double hpp = -a * std::sin(x);
        const double J = std::sqrt(1 + hp * hp);
        CHECK(g.gradient[0][i] == doctest::Approx(hp).epsilon(1e-10));
        CHECK(g.area_element[i] == doctest::Approx(J).epsilon(1e-10));
        // curvature of a graph, positive on the up bump: -h'' / J^3
        CHECK(g.mean_curvature[i] == doctest::Approx(-hpp / (J * J * J)).epsilon(1e-7));
        CHECK(g.normal[0][i] == doctest::Approx(-hp / J).epsilon(1e-10));
        CHECK(g.normal[1][i] == doctest::Approx(1.0 / J).epsilon(1e-10));
        CHECK(g.kappa2[i] == 0.0);
        CHECK(g.kappa1[i] == g.mean_curvature[i]);
    }
    CHECK(g.max_slope == doctest::Approx(a).epsilon(1e-6));
    CHECK(volume(h) == doctest::Approx(b).epsilon(1e-13));

    // arc length of the graph via quadrature comparison
    double len = 0.0;
    const int Nq = 1 << 16;
    for (int i = 0; i < Nq; ++i) {
        const double x = b * i / Nq;
        len += std::sqrt(1 + a * a * std::cos(x) * std::cos(x)) * (b / Nq);
    }
    CHECK(surface_area(g) == doctest::Approx(len).epsilon(1e-10));
}

TEST_CASE("mean curvature of a product surface") {
    const double b = 2 * pi;
    const int n = 64;
    const double a1 = 0.2, a2 = 0.15;
    Profile h = graph2(n, b, [&](double x, double y) {
        return 1.0 + a1 * std::sin(x) + a2 * std::cos(2 * y);
    });
    SurfaceMetrics g = metrics(h);

    double mean_H = 0.0;
    for (double v : g.mean_curvature) mean_H += v;
    CHECK(std::abs(mean_H / g.mean_curvature.size()) < 1e-13);

    for (int iy = 0; iy < n; iy += 5)
        for (int ix = 0; ix < n; ix += 5) {
            const double x = b * ix / n, y = b * iy / n;
            const double hx = a1 * std::cos(x), hy = -2 * a2 * std::sin(2 * y);
            const double hxx = -a1 * std::sin(x), hyy = -4 * a2 * std::cos(2 * y);
            const double J2 = 1 + hx * hx + hy * hy;
            const double J = std::sqrt(J2);
            // H = -Div(Dh/J) for h(x,y) = f(x) + g(y)
            const double exact =
                -(hxx * (1 + hy * hy) + hyy * (1 + hx * hx)) / (J2 * J);
            const std::size_t id = static_cast<std::size_t>(iy) * n + ix;
            CHECK(g.mean_curvature[id] == doctest::Approx(exact).epsilon(5e-6));
            CHECK(g.kappa1[id] + g.kappa2[id] ==
                  doctest::Approx(g.mean_curvature[id]).epsilon(1e-12));
            CHECK(g.mean_curvature[id] * g.mean_curvature[id] <=
                  2 * g.shape_norm_sq[id] + 1e-12);
        }
}

TEST_CASE("curvature convergence order of the fd2 backend") {
    const double b = 2 * pi;
    double err_prev = 0.0;
    for (int n : {64, 128, 256}) {
        Profile h = graph1(n, b, [&](double x) { return 1.0 + 0.4 * std::sin(x); });
        SurfaceMetrics g = metrics(h, DiffBackend::fd2);
        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = b * i / n;
            const double hp = 0.4 * std::cos(x), hpp = -0.4 * std::sin(x);
            const double J = std::sqrt(1 + hp * hp);
            err = std::max(err, std::abs(g.mean_curvature[i] + hpp / (J * J * J)));
        }
        if (err_prev > 0.0) CHECK(err_prev / err > 3.4);  // ~ second order
        err_prev = err;
    }
}

TEST_CASE("surface integral weights by the area element") {
    const double b = 4.0;
    const int n = 128;
    Profile h = graph1(n, b, [&](double x) { return 2.0 + 0.5 * std::sin(2 * pi * x / b); });
    SurfaceMetrics g = metrics(h);
    std::vector<double> one(h.size(), 1.0);
    CHECK(surface_integral(h, one) == doctest::Approx(surface_area(g)).epsilon(1e-14));
    CHECK(surface_integral(g, one) == doctest::Approx(surface_area(g)).epsilon(1e-14));
}
