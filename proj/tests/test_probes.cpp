#include "filmflow/probes.hpp"

#include <doctest.h>

#include <cmath>

using namespace filmflow;

TEST_CASE("probe id round trip") {
    for (ProbeId id : {ProbeId::A, ProbeId::C, ProbeId::D, ProbeId::H1, ProbeId::morini})
        CHECK(probe_id_from_string(to_string(id)) == id);
    CHECK_THROWS(probe_id_from_string("nope"));
}

TEST_CASE("single-mode equality cases reach the constant exactly") {
    // a one-mode field makes the interpolation inequalities equalities
    ProbeParams par;
    par.dim = 1;
    par.n = 64;
    par.degree = 1;

    SUBCASE("between the first and second derivative") {
        par.j = 1;
        par.m = 2;
        par.p = 2.0;
        auto rep = run_probe(ProbeId::A, par, 50, 3);
        CHECK(rep.worst_ratio == doctest::Approx(1.0).epsilon(1e-11));
        CHECK(rep.mean_ratio == doctest::Approx(1.0).epsilon(1e-11));
    }
    SUBCASE("negative-order pairing") {
        auto rep = run_probe(ProbeId::H1, par, 50, 3);
        CHECK(rep.worst_ratio == doctest::Approx(1.0).epsilon(1e-11));
        CHECK(rep.cap == 1.0);
        CHECK(rep.capped);
    }
}

TEST_CASE("q = p collapses the embedding ratio to one for any field") {
    ProbeParams par;
    par.dim = 1;
    par.n = 128;
    par.p = 2.0;
    par.q = 2.0;
    par.m = 2;
    auto rep = run_probe(ProbeId::C, par, 30, 9);
    CHECK(rep.worst_ratio == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("reports are deterministic in the seed") {
    ProbeParams par;
    par.dim = 1;
    par.n = 64;
    auto a = run_probe(ProbeId::A, par, 25, 1234);
    auto c = run_probe(ProbeId::A, par, 25, 1234);
    CHECK(a.worst_ratio == c.worst_ratio);
    CHECK(a.mean_ratio == c.mean_ratio);
    CHECK(a.worst_trial == c.worst_trial);
    auto d = run_probe(ProbeId::A, par, 25, 1235);
    CHECK(a.worst_ratio != d.worst_ratio);
}

TEST_CASE("multimode fields respect the caps with tiny homogeneity drift") {
    for (int dim : {1, 2}) {
        ProbeParams par;
        par.dim = dim;
        par.n = dim == 1 ? 128 : 32;

        auto a = run_probe(ProbeId::A, par, 40, 7);
        CHECK(a.capped);
        CHECK(a.worst_ratio <= 10.0);
        CHECK(a.max_homogeneity_dev < 1e-12);

        auto h = run_probe(ProbeId::H1, par, 40, 7);
        CHECK(h.capped);
        CHECK(h.worst_ratio <= 1.0 * (1 + 1e-12));
        CHECK(h.worst_ratio > 0.3);  // not trivially small either
    }
}

TEST_CASE("interpolation with differing exponents") {
    ProbeParams par;
    par.dim = 2;
    par.n = 32;
    par.p = 2.0;
    par.q = 4.0;  // theta = (2/2 - 2/4)/m = 0.25 for m = 2
    par.m = 2;
    auto rep = run_probe(ProbeId::C, par, 30, 21);
    CHECK(rep.capped);
    CHECK(rep.worst_ratio > 0.0);

    par.j = 1;
    par.s = 0;
    auto repd = run_probe(ProbeId::D, par, 30, 21);
    CHECK(repd.capped);
}

TEST_CASE("sup norms are admissible where scaling allows") {
    ProbeParams par;
    par.dim = 1;
    par.n = 128;
    par.p = 2.0;
    par.q = std::numeric_limits<double>::infinity();  // theta = (1/2)/m
    par.m = 1;
    auto rep = run_probe(ProbeId::C, par, 30, 5);
    CHECK(rep.capped);
}

TEST_CASE("elliptic-regularity probe stays bounded") {
    for (int dim : {1, 2}) {
        ProbeParams par;
        par.dim = dim;
        par.n = dim == 1 ? 128 : 32;
        par.p = 2.0;
        auto rep = run_probe(ProbeId::morini, par, dim == 1 ? 30 : 10, 13);
        CHECK(rep.capped);
        CHECK(rep.worst_ratio > 0.0);
        CHECK(rep.max_homogeneity_dev < 1e-11);
    }
}

TEST_CASE("inadmissible parameters are rejected") {
    ProbeParams par;
    par.dim = 1;
    par.n = 64;

    par.j = 2;
    par.m = 2;  // j must be < m
    CHECK_THROWS_AS(run_probe(ProbeId::A, par, 1, 1), std::domain_error);

    par.j = 1;
    par.p = 4.0;
    par.q = 2.0;  // theta < 0
    CHECK_THROWS_AS(run_probe(ProbeId::C, par, 1, 1), std::domain_error);

    par.p = 2.0;
    par.q = std::numeric_limits<double>::infinity();
    par.m = 0;  // dim/p - dim/q > m * 1: theta > 1
    CHECK_THROWS_AS(run_probe(ProbeId::C, par, 1, 1), std::domain_error);

    par.q = 2.0;
    par.m = 2;
    par.s = 2;  // s < m violated together with j range
    par.j = 2;
    CHECK_THROWS_AS(run_probe(ProbeId::D, par, 1, 1), std::domain_error);

    par.s = 0;
    par.j = 1;
    par.p = 1.0;  // morini needs p > 1
    CHECK_THROWS_AS(run_probe(ProbeId::morini, par, 1, 1), std::domain_error);

    ProbeParams bad;
    bad.dim = 3;
    CHECK_THROWS_AS(run_probe(ProbeId::A, bad, 1, 1), std::domain_error);
    bad.dim = 1;
    bad.n = 48;
    CHECK_THROWS_AS(run_probe(ProbeId::A, bad, 1, 1), std::domain_error);
}
