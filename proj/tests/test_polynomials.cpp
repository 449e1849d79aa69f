#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "slagfib/laurent.hpp"
#include "slagfib/toric_potential.hpp"

using namespace slagfib;
using namespace testutil;

namespace {

Vec random_point(int n, double lo = 0.3, double hi = 1.5) {
    Vec z(n);
    for (int i = 0; i < n; ++i)
        z[i] = std::polar(urand(lo, hi), urand(0, 2 * std::numbers::pi));
    return z;
}

// central finite difference of a real function of one complex coordinate,
// recombined into the complex Hessian entry d^2/dz_j dzbar_k
cplx fd_hessian_entry(const ToricPotential& pot, Vec z, int j, int k, double h = 1e-5) {
    auto f = [&](const Vec& w) { return pot.value(w); };
    // d/dz_j = (d/dx_j - i d/dy_j)/2, d/dzbar_k = (d/dx_k + i d/dy_k)/2
    auto dz_j = [&](Vec w) {
        Vec a = w, b = w, c = w, d = w;
        a[j] += h;
        b[j] -= h;
        c[j] += cplx(0, h);
        d[j] -= cplx(0, h);
        return cplx((f(a) - f(b)) / (2 * h), -(f(c) - f(d)) / (2 * h)) * 0.5;
    };
    Vec a = z, b = z, c = z, d = z;
    a[k] += h;
    b[k] -= h;
    c[k] += cplx(0, h);
    d[k] -= cplx(0, h);
    return (dz_j(a) - dz_j(b)) / (2 * h) * 0.5 + cplx(0, 1) * (dz_j(c) - dz_j(d)) / (2 * h) * 0.5;
}

}  // namespace

TEST_CASE("kahler_matrix of the flat potential is the identity") {
    ToricPotential rho = flat_rho3();
    for (int rep = 0; rep < 5; ++rep) {
        Vec z = random_point(3);
        Mat g = kahler_matrix(rho, z);
        REQUIRE((g - Mat::Identity(3, 3)).norm() < 1e-14);
    }
}

TEST_CASE("kahler_matrix of |z0|^2 + |z0|^2|z1|^2 at (1,1)") {
    ToricPotential::Terms t;
    t[{1, 0}] = 1.0;
    t[{1, 1}] = 1.0;
    ToricPotential rho(2, t);
    Vec z(2);
    z << cplx(1, 0), cplx(1, 0);
    Mat g = kahler_matrix(rho, z);
    CHECK(std::abs(g(0, 0) - cplx(2, 0)) < 1e-14);
    CHECK(std::abs(g(0, 1) - cplx(1, 0)) < 1e-14);
    CHECK(std::abs(g(1, 1) - cplx(1, 0)) < 1e-14);
    CHECK((g - g.adjoint()).norm() < 1e-14);
}

TEST_CASE("kahler_matrix matches the finite-difference Hessian") {
    ToricPotential rho = curved_rho3();
    for (int rep = 0; rep < 4; ++rep) {
        Vec z = random_point(3);
        Mat g = kahler_matrix(rho, z);
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                cplx fd = fd_hessian_entry(rho, z, j, k);
                REQUIRE(std::abs(g(j, k) - fd) < 1e-6 * (1 + std::abs(g(j, k))));
            }
    }
}

TEST_CASE("toric potential log-derivatives match finite differences") {
    ToricPotential rho = curved_rho3();
    for (int rep = 0; rep < 4; ++rep) {
        Vec z = random_point(3);
        for (int j = 0; j < 3; ++j) {
            double h = 1e-6;
            Vec zp = z, zm = z;
            zp[j] *= std::exp(0.5 * h);  // log|z_j|^2 += h
            zm[j] *= std::exp(-0.5 * h);
            double fd = (rho.value(zp) - rho.value(zm)) / (2 * h);
            REQUIRE(std::abs(rho.dlog(z, j) - fd) < 1e-6 * (1 + std::abs(fd)));
            for (int k = 0; k < 3; ++k) {
                double fd2 = (rho.dlog(zp, k) - rho.dlog(zm, k)) / (2 * h);
                REQUIRE(std::abs(rho.dlog2(z, j, k) - fd2) < 1e-6 * (1 + std::abs(fd2)));
            }
        }
    }
}

TEST_CASE("defining polynomial log-derivatives agree with central differences") {
    // includes a Laurent term to cover negative exponents
    DefiningPolynomial::Terms t;
    t[{0, 0, 0}] = cplx(2.0, 0.3);
    t[{0, 0, 1}] = cplx(1.0, -0.2);
    t[{0, 1, -1}] = cplx(0.15, 0.05);
    DefiningPolynomial p(3, t);

    int checked = 0;
    while (checked < 6) {
        Vec z = random_point(3, 0.5, 1.4);
        if (std::abs(p.value(z)) < 0.1) continue;
        ++checked;
        for (int k = 0; k < 3; ++k) {
            double h = 1e-6;
            Vec zp = z, zm = z;
            zp[k] *= std::exp(h);
            zm[k] *= std::exp(-h);
            cplx fd = (p.value(zp) - p.value(zm)) / (2 * h);
            REQUIRE(std::abs(p.pk(z, k) - fd) < 1e-6 * (1 + std::abs(fd)));
            cplx fd_log = (std::log(p.value(zp)) - std::log(p.value(zm))) / (2 * h);
            REQUIRE(std::abs(p.logderiv(z, k) - fd_log) < 1e-6 * (1 + std::abs(fd_log)));
            for (int j = 0; j < 3; ++j) {
                cplx fd2 = (p.logderiv(zp, j) - p.logderiv(zm, j)) / (2 * h);
                REQUIRE(std::abs(p.logderiv2(z, j, k) - fd2) < 1e-6 * (1 + std::abs(fd2)));
            }
        }
    }
}

TEST_CASE("scaled_second reproduces evaluation at the scaled point") {
    PartitionedIndex part(2, {0, 1});
    DefiningPolynomial p = desk_p();
    DefiningPolynomial::Terms extra = p.terms();
    extra[{1, 1, 0}] = cplx(0.1, 0.0);
    DefiningPolynomial p2(3, extra);
    for (double s : {0.0, 0.3, 1.0}) {
        DefiningPolynomial ps = p2.scaled_second(part, s);
        for (int rep = 0; rep < 3; ++rep) {
            Vec z = random_point(3);
            Vec w = z;
            for (int k : part.i_second()) w[k] *= s;
            REQUIRE(std::abs(ps.value(z) - p2.value(w)) < 1e-12);
        }
    }
}
