#pragma once

#include <random>

#include "slagfib/darboux.hpp"
#include "slagfib/model.hpp"

// Shared fixtures and independent oracles for the test suites.
namespace testutil {

using namespace slagfib;

// Desk-scale configuration: n=2, I''={0,1}, I'={2}, flat rho, p = 2 + z_2,
// t = 0.01, r_2 = 1.
inline ToricPotential flat_rho3() {
    ToricPotential::Terms t;
    t[{1, 0, 0}] = 1.0;
    t[{0, 1, 0}] = 1.0;
    t[{0, 0, 1}] = 1.0;
    return ToricPotential(3, t);
}

inline DefiningPolynomial desk_p() {
    DefiningPolynomial::Terms t;
    t[{0, 0, 0}] = cplx(2.0, 0.0);
    t[{0, 0, 1}] = cplx(1.0, 0.0);
    return DefiningPolynomial(3, t);
}

inline DefiningPolynomial const_p(double v = 2.0) {
    DefiningPolynomial::Terms t;
    t[{0, 0, 0}] = cplx(v, 0.0);
    return DefiningPolynomial(3, t);
}

inline LocalModel desk_model(double c1 = 0.0, double t = 0.01, double r2 = 1.0,
                             DefiningPolynomial p = desk_p()) {
    PartitionedIndex part(2, {0, 1});
    FamilyParams fam;
    fam.t = t;
    ModelParams mp;
    mp.r = {r2};
    mp.c = {0.0, c1};
    return LocalModel(part, flat_rho3(), std::move(p), fam, mp);
}

// A mildly curved potential exercising the lambda_k(z') machinery:
// rho = |z0|^2 (1 + 0.1 |z2|^2) + |z1|^2 + |z2|^2 + 0.05 |z2|^4.
inline ToricPotential curved_rho3() {
    ToricPotential::Terms t;
    t[{1, 0, 0}] = 1.0;
    t[{1, 0, 1}] = 0.1;
    t[{0, 1, 0}] = 1.0;
    t[{0, 0, 1}] = 1.0;
    t[{0, 0, 2}] = 0.05;
    return ToricPotential(3, t);
}

inline LocalModel curved_model(double c1 = 0.02) {
    PartitionedIndex part(2, {0, 1});
    FamilyParams fam;
    fam.t = 0.01;
    ModelParams mp;
    mp.r = {1.0};
    mp.c = {0.0, c1};
    return LocalModel(part, curved_rho3(), desk_p(), fam, mp);
}

// n = 3 with two I'-directions: the smallest setting where z'-(1,1)-forms have
// nonzero restrictions to fibre tangent pairs.
inline LocalModel model3d(double c1 = 0.02) {
    PartitionedIndex part(3, {0, 1});
    ToricPotential::Terms rt;
    rt[{1, 0, 0, 0}] = 1.0;
    rt[{0, 1, 0, 0}] = 1.0;
    rt[{0, 0, 1, 0}] = 1.0;
    rt[{0, 0, 0, 1}] = 1.0;
    DefiningPolynomial::Terms pt;
    pt[{0, 0, 0, 0}] = cplx(2.0, 0.0);
    pt[{0, 0, 1, 0}] = cplx(1.0, 0.0);
    pt[{0, 0, 0, 1}] = cplx(0.5, 0.0);
    FamilyParams fam;
    fam.t = 0.01;
    ModelParams mp;
    mp.r = {1.0, 0.9};
    mp.c = {0.0, c1};
    return LocalModel(part, ToricPotential(4, rt), DefiningPolynomial(4, pt), fam, mp);
}

inline std::mt19937& rng() {
    static std::mt19937 gen(0x5e3d);
    return gen;
}

inline double urand(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng());
}

// Bisection oracle for the eta-equation (independent of solve_eta).
inline double eta_bisection(const std::vector<double>& c, double kappa) {
    auto f = [&](double eta) {
        double p = 1;
        for (double ck : c) p *= (ck + eta);
        return p - kappa;
    };
    double lo = 0, hi = std::pow(kappa, 1.0 / c.size());
    while (f(hi) < 0) hi *= 2;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (f(mid) >= 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

// A random point on Y_t near the model fibre (exactly on the hypersurface).
inline Vec random_Yt_point(const LocalModel& model, double radial_jitter = 0.05) {
    const auto& part = model.part();
    const int n = part.n();
    Vec z = Vec::Zero(n + 1);
    for (std::size_t j = 0; j < part.i_prime().size(); ++j) {
        int cj = part.i_prime()[j];
        z[cj] = std::polar(model.params().r[j] * (1 + urand(-radial_jitter, radial_jitter)),
                           urand(0, 2 * std::numbers::pi));
    }
    double eta = model.eta(z);
    for (std::size_t kpos = 1; kpos < part.i_second().size(); ++kpos) {
        int k = part.i_second()[kpos];
        double lam = model.lambda_value(static_cast<int>(kpos), z);
        double mod = std::sqrt((model.params().c[kpos] + eta) / lam) *
                     (1 + urand(-radial_jitter, radial_jitter));
        z[k] = std::polar(mod, urand(0, 2 * std::numbers::pi));
    }
    cplx tp = model.family().t * model.p0().value(z);
    cplx prod = 1;
    for (int m = 1; m <= n; ++m) prod *= z[m];
    z[0] = tp / prod;
    return z;
}

// Tangent vector of Y_t at z with random base components.
inline Vec random_Yt_tangent(const LocalModel& model, const Vec& z) {
    const int n = model.part().n();
    Vec a(n);
    for (int m = 0; m < n; ++m) a[m] = cplx(urand(-1, 1), urand(-1, 1)) * z[m + 1];
    Vec q = q_coefficients(z, 0.0, model.p(), model.part());
    return lift_tangent(z, q, a);
}

}  // namespace testutil
