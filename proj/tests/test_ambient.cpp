#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "slagfib/family.hpp"
#include "slagfib/region.hpp"

using namespace slagfib;
using namespace testutil;

TEST_CASE("make_coefficients modulus and phase") {
    std::map<int, double> w{{1, 1.0}};
    auto a = make_coefficients(w, 0.1);
    CHECK(std::abs(a[1] - cplx(0.1, 0)) < 1e-15);

    std::map<int, double> w2{{1, 2.0}, {2, 0.5}};
    auto a2 = make_coefficients(w2, 0.5);
    CHECK(std::abs(a2[1] - cplx(0.25, 0)) < 1e-15);
    CHECK(std::abs(a2[2] - cplx(std::sqrt(0.5), 0)) < 1e-15);

    std::map<int, double> ph{{1, std::numbers::pi / 2}};
    auto a3 = make_coefficients(w, 0.1, ph);
    CHECK(std::abs(a3[1] - cplx(0, 0.1)) < 1e-15);

    CHECK_THROWS_AS(make_coefficients(w, 1.5), parameter_error);
    CHECK_THROWS_AS(make_coefficients(w, -0.1), parameter_error);
    std::map<int, double> bad{{1, -1.0}};
    CHECK_THROWS_AS(make_coefficients(bad, 0.1), parameter_error);
}

TEST_CASE("hypersurface_residual on exact and perturbed points") {
    PartitionedIndex part(2, {0, 1});
    DefiningPolynomial p = const_p(2.0);
    FamilyParams fam;
    fam.t = 0.01;
    fam.s = 1.0;
    Vec z(3);
    z << cplx(0.02, 0), cplx(1, 0), cplx(1, 0);
    CHECK(std::abs(hypersurface_residual(z, fam, p, part)) < 1e-16);
    z[0] = cplx(0.03, 0);
    CHECK(std::abs(hypersurface_residual(z, fam, p, part) - cplx(0.01, 0)) < 1e-15);

    // s=0 keeps the z'-dependence and removes only the z''-dependence
    DefiningPolynomial pz = desk_p();
    fam.s = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        Vec w(3);
        for (int i = 0; i < 3; ++i)
            w[i] = std::polar(urand(0.2, 1.2), urand(0, 2 * std::numbers::pi));
        cplx expect = w[0] * w[1] * w[2] - 0.01 * (cplx(2, 0) + w[2]);
        CHECK(std::abs(hypersurface_residual(w, fam, pz, part) - expect) < 1e-14);
    }
}

TEST_CASE("hypersurface_residual is equivariant under toric phase rotation") {
    // scaling z_k -> e^{i theta} z_k for all k: the product term turns by
    // (n+1) theta and a monomial p of total degree d turns by d theta
    PartitionedIndex part(2, {0, 1});
    DefiningPolynomial::Terms mono;
    mono[{0, 0, 1}] = cplx(2.0, 0.0);
    DefiningPolynomial p(3, mono);
    FamilyParams fam;
    fam.t = 0.01;
    fam.s = 1.0;
    for (int rep = 0; rep < 5; ++rep) {
        Vec z(3);
        for (int i = 0; i < 3; ++i)
            z[i] = std::polar(urand(0.2, 1.0), urand(0, 2 * std::numbers::pi));
        double th = urand(0, 2 * std::numbers::pi);
        cplx rot = std::polar(1.0, th);
        Vec zr = z * rot;
        cplx r1 = hypersurface_residual(zr, fam, p, part);
        cplx prod = z[0] * z[1] * z[2];
        cplx expect = prod * std::pow(rot, 3) - fam.t * p.value(z) * rot;
        CHECK(std::abs(r1 - expect) < 1e-13);
    }
}

TEST_CASE("classify_region desk examples") {
    PartitionedIndex part(2, {0, 1});
    DefiningPolynomial p = desk_p();
    RegionConstants consts;
    consts.eps_max = 0.5;
    consts.C3 = 1.0;

    Vec z(3);
    z << cplx(0.02, 0), cplx(0.14, 0), cplx(1, 0);
    RegionReport rep = classify_region(z, part, p, consts);
    CHECK(rep.p_bounded);
    CHECK(rep.epsilon_small);
    CHECK(rep.refined_small_coords);
    CHECK(rep.refined_large_coords);
    CHECK(rep.sector_member);
    CHECK(rep.normal);

    Vec z2(3);
    z2 << cplx(0.5, 0), cplx(0.6, 0), cplx(1, 0);
    RegionReport rep2 = classify_region(z2, part, p, consts);
    CHECK_FALSE(rep2.epsilon_small);
    CHECK_FALSE(rep2.normal);

    // p(z') = -2 + z_2 with z_2 = 1.9: |p| = 0.1 < 1
    DefiningPolynomial::Terms t3;
    t3[{0, 0, 0}] = cplx(-2.0, 0.0);
    t3[{0, 0, 1}] = cplx(1.0, 0.0);
    DefiningPolynomial p3(3, t3);
    Vec z3(3);
    z3 << cplx(0.02, 0), cplx(0.14, 0), cplx(1.9, 0);
    RegionReport rep3 = classify_region(z3, part, p3, consts);
    CHECK_FALSE(rep3.p_bounded);
    CHECK_FALSE(rep3.normal);
}

TEST_CASE("classify_region with empty I' flags the epsilon test vacuous") {
    PartitionedIndex part(2, {0, 1, 2});
    DefiningPolynomial p = const_p(2.0);
    RegionConstants consts;
    consts.C = 20.0;
    Vec z(3);
    z << cplx(0.1, 0), cplx(0.12, 0), cplx(0.14, 0);
    RegionReport rep = classify_region(z, part, p, consts);
    CHECK(rep.epsilon_vacuous);
    CHECK(rep.epsilon_small);
}

TEST_CASE("classify_region is monotone under shrinking t on hypersurface families") {
    // shrinking t at fixed (z'', z') scales |z_0| down along the hypersurface;
    // normal must never flip true -> false as t decreases
    PartitionedIndex part(2, {0, 1});
    DefiningPolynomial p = desk_p();
    RegionConstants consts;
    for (int rep = 0; rep < 20; ++rep) {
        double r1 = urand(0.05, 0.2), r2 = urand(0.8, 1.2);
        double th1 = urand(0, 2 * std::numbers::pi), th2 = urand(0, 2 * std::numbers::pi);
        bool seen_normal = false;
        for (double t : {1e-2, 5e-3, 1e-3, 5e-4, 1e-4}) {
            Vec z(3);
            z[1] = std::polar(r1, th1);
            z[2] = std::polar(r2, th2);
            z[0] = t * p.value(z) / (z[1] * z[2]);
            bool normal = classify_region(z, part, p, consts).normal;
            if (seen_normal) REQUIRE(normal);
            seen_normal = seen_normal || normal;
        }
    }
}
