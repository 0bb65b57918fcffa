#include "filmflow/stability.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace filmflow;

namespace {
constexpr double pi = std::numbers::pi;

// J(y) straight from its defining expression, usable at moderate y
double J_naive(double y, double nu) {
    const double sh = std::sinh(y), ch = std::cosh(y);
    const double s = 3 - 4 * nu;
    return (y + s * sh * ch) / (4 * (1 - nu) * (1 - nu) + y * y + s * sh * sh);
}
} // namespace

TEST_CASE("depth kernel properties") {
    for (double nu : {0.0, 0.1, 0.25, 0.35, 0.45}) {
        CHECK(grinfeld_J(0.0, nu) == 0.0);

        // agreement with the textbook form where it is numerically safe
        for (double y : {1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0})
            CHECK(grinfeld_J(y, nu) == doctest::Approx(J_naive(y, nu)).epsilon(1e-12));

        // no overflow far beyond the naive form's range; limit 1 from below
        CHECK(grinfeld_J(1e4, nu) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(grinfeld_J(1e4, nu) <= 1.0);
        CHECK(grinfeld_J(12.0, nu) < 1.0);

        // small-y slope 1/(1-nu)
        const double y0 = 1e-8;
        CHECK(grinfeld_J(y0, nu) / y0 == doctest::Approx(1.0 / (1 - nu)).epsilon(1e-6));

        // monotone increasing until saturating at 1 in double precision
        double prev = 0.0;
        for (double y = 0.05; y < 30.0; y += 0.05) {
            const double j = grinfeld_J(y, nu);
            if (prev < 1.0 - 1e-13)
                CHECK(j > prev);
            else
                CHECK(j >= prev);
            prev = j;
        }
        CHECK_THROWS(grinfeld_J(1.0, 0.5));
        CHECK_THROWS(grinfeld_J(1.0, -0.1));
        CHECK_THROWS(grinfeld_J(-1.0, nu));
    }
}

TEST_CASE("envelope kernel properties") {
    const double nu = 0.25;
    // K >= J (n = 1 term) and K(y) >= J(ny)/n for a few n
    for (double y : {0.1, 0.5, 1.0, 3.0}) {
        const double K = grinfeld_K(y, nu);
        CHECK(K >= grinfeld_J(y, nu) - 1e-15);
        for (int n = 1; n <= 12; ++n) CHECK(K >= grinfeld_J(n * y, nu) / n - 1e-15);
        CHECK(K < 1.0);
    }
    // K is decreasing in... no: K(y) -> 1/(1-nu) * y envelope near 0? The
    // small-y limit of max_n J(ny)/n is governed by large arguments: as
    // y -> 0, K(y) -> sup_t J(t) * y / t ... check only monotone decrease of
    // K(y)/ (that K is nonincreasing is false); instead verify continuity by
    // a fine grid bound
    double prev = grinfeld_K(0.02, nu);
    for (double y = 0.04; y < 2.0; y += 0.02) {
        const double k = grinfeld_K(y, nu);
        CHECK(std::abs(k - prev) < 0.2);  // no jumps from the cutoff
        prev = k;
    }
}

TEST_CASE("threshold equation round trip over a parameter grid") {
    // d_loc solves K(2 pi d / b) = rhs; plugging the result back must
    // reproduce rhs to high accuracy for many parameter tuples
    int finite_cases = 0;
    for (double b : {2 * pi, 4 * pi, 5.0}) {
        for (double mu : {0.7, 1.0}) {
            for (double lambda : {0.5, 1.0}) {
                for (double e0 : {0.5, 0.6, 0.8}) {
                    const LameParams p{mu, lambda, e0};
                    const double psi11 = 1.0;
                    const double rhs = threshold_rhs(b, p, psi11);
                    const double d = local_min_thickness(b, p, psi11);
                    if (!std::isfinite(d)) {
                        CHECK(rhs >= 1.0);
                        continue;
                    }
                    ++finite_cases;
                    const double back = grinfeld_K(2 * pi * d / b, poisson_modulus(p));
                    CHECK(back == doctest::Approx(rhs).epsilon(1e-9));
                }
            }
        }
    }
    CHECK(finite_cases >= 10);
}

TEST_CASE("stable regime: rhs >= 1 gives an infinite threshold") {
    // small mismatch -> rhs above 1 -> every thickness is locally stable
    const LameParams p{1.0, 1.0, 0.05};
    CHECK(threshold_rhs(2 * pi, p, 1.0) > 1.0);
    CHECK(std::isinf(local_min_thickness(2 * pi, p, 1.0)));
}

TEST_CASE("flat second variation: signs flip across the threshold") {
    const double b = 2 * pi;
    const LameParams p{1.0, 1.0, 0.6};
    const double psi11 = 1.0;
    const double d_loc = local_min_thickness(b, p, psi11);
    REQUIRE(std::isfinite(d_loc));

    auto min_total = [&](double d) {
        double worst = 1e300;
        for (int k = 1; k <= 6; ++k) {
            auto sv = second_variation_flat(d, b, k, p, psi11, 0.0, 128, 32);
            worst = std::min(worst, sv.total);
        }
        return worst;
    };
    CHECK(min_total(0.5 * d_loc) > 0.0);   // below the threshold: stable
    CHECK(min_total(2.0 * d_loc) < 0.0);   // above: unstable
}

TEST_CASE("curvature regularization shifts the second variation upward") {
    const double b = 2 * pi;
    const LameParams p{1.0, 1.0, 0.6};
    auto sv0 = second_variation_flat(1.0, b, 2, p, 1.0, 0.0, 64, 16);
    auto sv1 = second_variation_flat(1.0, b, 2, p, 1.0, 0.05, 64, 16);
    const double kappa = 2 * pi * 2 / b;
    CHECK(sv1.curvature == doctest::Approx(0.05 * std::pow(kappa, 4) * b / 2).epsilon(1e-12));
    CHECK(sv1.total - sv0.total == doctest::Approx(sv1.curvature).epsilon(1e-12));
    CHECK(sv1.elastic == sv0.elastic);
    CHECK(sv0.surface == doctest::Approx(kappa * kappa * b / 2).epsilon(1e-12));
}

TEST_CASE("numeric threshold agrees with the kernel threshold on a coarse mesh") {
    const double b = 2 * pi;
    const LameParams p{1.0, 1.0, 0.6};
    const double psi11 = 1.0;
    const double d_loc = local_min_thickness(b, p, psi11);
    std::vector<StabilityRow> rows;
    const double dn = numeric_flat_threshold(b, p, psi11, 64, 16, 4, 0.5 * d_loc,
                                             2.0 * d_loc, 1e-3, &rows);
    CHECK(std::abs(dn - d_loc) / d_loc < 0.02);
    CHECK(!rows.empty());
    for (const auto& r : rows) {
        CHECK(r.d > 0.0);
        CHECK(r.k >= 1);
        CHECK(r.sv.total == doctest::Approx(r.sv.elastic + r.sv.surface + r.sv.curvature)
                                .epsilon(1e-12));
    }
}

TEST_CASE("second variation mode minimum vanishes exactly at the kernel threshold") {
    // the zero of min_k [closed-form elastic + surface] in d is the same
    // equation as K(2 pi d / b) = rhs, so the exact-elastic second variation
    // at d_loc must be nonnegative for every k and zero at the minimizing k
    const double b = 4 * pi;
    const LameParams p{1.0, 0.5, 0.5};
    const double psi11 = 1.0;
    const double d_loc = local_min_thickness(b, p, psi11);
    REQUIRE(std::isfinite(d_loc));
    double best = 1e300;
    for (int k = 1; k <= 40; ++k) {
        const double kappa = 2 * pi * k / b;
        const double sv = second_variation_elastic_exact(d_loc, b, k, p) +
                          psi11 * kappa * kappa * b / 2;
        CHECK(sv > -1e-9);
        best = std::min(best, sv);
    }
    CHECK(std::abs(best) < 1e-6 * psi11 * b);
}

TEST_CASE("liapunov experiment classifies a clearly stable thin film quickly") {
    LiapunovConfig cfg;
    cfg.d = 0.1;
    cfg.n = 64;
    cfg.ny = 12;
    cfg.steps = 60;
    cfg.tau = 0.02;
    LiapunovResult res = liapunov_experiment(cfg);
    CHECK(res.initial_deviation > 0.0);
    CHECK(res.final_deviation < res.initial_deviation);
    CHECK(res.classification == LiapunovResult::Class::decay);
}
