#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "slagfib/family.hpp"

namespace slagfib {

struct convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Unique positive root of prod_k (c_k + eta) = kappa.  Safeguarded Newton on
/// log eta; the map is smooth and strictly monotone, so the bracketed iteration
/// cannot fail.
inline double solve_eta(const std::vector<double>& c, double kappa, double tol = 1e-15) {
    if (!(kappa > 0)) throw parameter_error("solve_eta: kappa must be positive");
    for (double ck : c)
        if (ck < 0) throw parameter_error("solve_eta: c_k must be non-negative");
    const int m = static_cast<int>(c.size());
    if (m == 0) throw parameter_error("solve_eta: empty c");

    double hi = std::pow(kappa, 1.0 / m);
    double lo = hi;
    for (double ck : c) lo /= (1.0 + ck / hi);
    auto g = [&](double eta) {
        double s = -std::log(kappa);
        for (double ck : c) s += std::log(ck + eta);
        return s;
    };
    while (g(lo) > 0) lo *= 0.5;  // paranoia; analytic bracket should already hold

    // Newton on log eta down to near machine precision of the log residual,
    // then polish multiplicatively; the achievable |g| floor is O(eps |log kappa|).
    double log_floor = 8.0 * std::numeric_limits<double>::epsilon() *
                       (1.0 + std::abs(std::log(kappa)));
    double phi = std::log(std::sqrt(lo * hi)), plo = std::log(lo), phi_hi = std::log(hi);
    double eta = std::exp(phi);
    for (int it = 0; it < 200; ++it) {
        eta = std::exp(phi);
        double val = g(eta);
        if (std::abs(val) <= std::max(tol, log_floor)) break;
        if (val > 0)
            phi_hi = phi;
        else
            plo = phi;
        double s1 = 0;
        for (double ck : c) s1 += 1.0 / (ck + eta);
        double step = -val / (eta * s1);  // d g / d log eta = eta * s1 = 1/zeta in [1, m]
        double next = phi + step;
        if (!(next > plo && next < phi_hi)) next = 0.5 * (plo + phi_hi);
        phi = next;
        if (it == 199) throw convergence_error("solve_eta: no convergence");
    }
    for (int polish = 0; polish < 3; ++polish) {
        double prod = 1, s1 = 0;
        for (double ck : c) {
            prod *= (ck + eta);
            s1 += 1.0 / (ck + eta);
        }
        double delta = (prod - kappa) / (prod * s1);
        if (eta - delta > 0) eta -= delta;
        if (std::abs(prod - kappa) <= 0.5e-14 * kappa) break;
    }
    double prod = 1;
    for (double ck : c) prod *= (ck + eta);
    if (std::abs(prod - kappa) > 1e-14 * kappa)
        throw convergence_error("solve_eta: residual above tolerance");
    return eta;
}

/// zeta = (sum_k eta/(c_k+eta))^{-1}; always in [1/|I''|, 1].
inline double zeta_of(const std::vector<double>& c, double eta) {
    double s = 0;
    for (double ck : c) s += eta / (ck + eta);
    return 1.0 / s;
}

struct MuValue {
    double mu = 0;
    std::vector<double> dmu_dc;   // -log(c_k + eta)
    std::vector<double> deta_dc;  // -zeta*eta/(c_k + eta)
};

/// mu = (l+1) eta - sum_k c_k log(c_k + eta) with the c-gradient
/// -log(c_k + eta).  The gradient is exact for the antiderivative normalized
/// as mu + sum_k c_k; the displayed mu differs from it by the z-independent
/// function -sum_k c_k, so d mu and ddbar mu are unaffected.
inline MuValue mu_of(const std::vector<double>& c, double eta, double /*kappa*/ = 0) {
    MuValue out;
    const int m = static_cast<int>(c.size());
    out.mu = m * eta;
    for (double ck : c) out.mu -= ck * std::log(ck + eta);
    double zeta = zeta_of(c, eta);
    for (double ck : c) {
        out.dmu_dc.push_back(-std::log(ck + eta));
        out.deta_dc.push_back(-zeta * eta / (ck + eta));
    }
    return out;
}

}  // namespace slagfib
