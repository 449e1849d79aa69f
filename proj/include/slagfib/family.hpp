#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "slagfib/laurent.hpp"
#include "slagfib/partition.hpp"

namespace slagfib {

struct parameter_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Parameters of the hypersurface family X_{t,s} = {z_0...z_n = t p(s z'', z')}.
struct FamilyParams {
    double t = 0.01;   // fixed |t| > 0, phases absorbed into p
    double s = 1.0;    // deformation parameter in [0,1]
    double tau = 0.1;  // coefficient scale for a_m = tau^{w_m}

    void validate() const {
        if (!(t > 0)) throw parameter_error("FamilyParams: t must be positive");
        if (s < 0 || s > 1) throw parameter_error("FamilyParams: s must be in [0,1]");
        if (!(tau > 0) || tau >= 1) throw parameter_error("FamilyParams: tau must be in (0,1)");
    }
};

/// a_m with |a_m| = tau^{w_m} and argument phases[m] (default 0).
template <typename Key>
std::map<Key, cplx> make_coefficients(const std::map<Key, double>& weights, double tau,
                                      const std::map<Key, double>& phases = {}) {
    if (!(tau > 0) || !(tau < 1)) throw parameter_error("make_coefficients: tau must be in (0,1)");
    std::map<Key, cplx> out;
    for (const auto& [m, w] : weights) {
        if (!(w > 0)) throw parameter_error("make_coefficients: weights must be positive");
        double mod = std::pow(tau, w);
        double ph = 0;
        if (auto it = phases.find(m); it != phases.end()) ph = it->second;
        out[m] = std::polar(mod, ph);
    }
    return out;
}

/// The point (s z'', z').
inline Vec scale_second_pt(const Vec& z, const PartitionedIndex& part, double s) {
    Vec w = z;
    for (int k : part.i_second()) w[k] *= s;
    return w;
}

/// z_0...z_n - t p(s z'', z'); zero iff z is on X_{t,s}.
inline cplx hypersurface_residual(const Vec& z, const FamilyParams& family,
                                  const DefiningPolynomial& p, const PartitionedIndex& part) {
    cplx prod = 1;
    for (Eigen::Index k = 0; k < z.size(); ++k) prod *= z[k];
    return prod - family.t * p.value(scale_second_pt(z, part, family.s));
}

/// q_k = 1 - dlog p(s z'', z')/dlog z_k, the coefficients in
/// d(z_0...z_n - t p) = z_0...z_n sum q_k dz_k/z_k on X_{t,s}.
/// Evaluated by point-scaling: the composite log-derivative in z_k equals
/// pcheck_k of p at the scaled point.
inline Vec q_coefficients(const Vec& z, double s, const DefiningPolynomial& p,
                          const PartitionedIndex& part) {
    Vec w = scale_second_pt(z, part, s);
    cplx pv = p.value(w);
    Vec q(z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) q[k] = cplx(1) - p.pk(w, static_cast<int>(k)) / pv;
    return q;
}

/// Log-frame gradient of the defining function F = z_0...z_n - t p(s z'', z'):
/// G_k = z_k dF/dz_k, valid off the hypersurface as well (on X_{t,s} it equals
/// t p q_k).  Tangency of u is sum (u_k/z_k) G_k = 0 for the level set through z.
inline Vec defining_gradient(const Vec& z, double s, double t, const DefiningPolynomial& p,
                             const PartitionedIndex& part) {
    Vec w = scale_second_pt(z, part, s);
    cplx prod = 1;
    for (Eigen::Index k = 0; k < z.size(); ++k) prod *= z[k];
    Vec G(z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k)
        G[k] = prod - t * p.pk(w, static_cast<int>(k));
    return G;
}

}  // namespace slagfib
