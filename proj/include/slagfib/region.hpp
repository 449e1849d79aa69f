#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "slagfib/family.hpp"
#include "slagfib/laurent.hpp"
#include "slagfib/partition.hpp"

namespace slagfib {

/// Constants of the working-region tests.  Defaults are the documented
/// desk-scale choices; all are overridable from the configuration file.
struct RegionConstants {
    double eps_max = 0.1;  // threshold for epsilon = max |z_0|/|z_j|
    double C = 1.0;        // scale-separation constant |z_i|^{3/2} <= C |z_1|
    double C2 = 10.0;      // outer radius |z| < C2
    double C3 = 1.0;       // lower bound for |p|
    double C4 = 1.0;       // region-decomposition constant
};

struct RegionReport {
    double epsilon = 0;
    bool epsilon_vacuous = false;  // I' empty: the epsilon test is vacuously true
    bool p_bounded = false;
    bool epsilon_small = false;
    bool refined_small_coords = false;  // |z_i|^{3/2} <= C |z_1|, 1 <= i <= l
    bool refined_large_coords = false;  // |z_i|^{3/2} >= C |z_0|, i in I'
    bool sector_member = false;         // membership in U_{sigma,I'}
    bool normal = false;
};

/// Classifies a point against the normal-region inequalities and the
/// region-decomposition membership test.
inline RegionReport classify_region(const Vec& z, const PartitionedIndex& part,
                                    const DefiningPolynomial& p,
                                    const RegionConstants& consts = {}) {
    RegionReport rep;
    const auto& isec = part.i_second();
    const auto& ipr = part.i_prime();

    // |p(z')| >= C3 with p frozen to the local model (z'' = 0)
    double pz = std::abs(p.scaled_second(part, 0.0).value(z));
    rep.p_bounded = pz >= consts.C3;

    double z0 = std::abs(z[0]);
    if (ipr.empty()) {
        rep.epsilon_vacuous = true;
        rep.epsilon_small = true;
    } else {
        double e = 0;
        for (int j : ipr) e = std::max(e, z0 / std::abs(z[j]));
        rep.epsilon = e;
        rep.epsilon_small = e < consts.eps_max;  // strict: the threshold itself fails
    }

    // |z_i|^{3/2} <= C |z_1| for 1 <= i <= l; z_1 is the first I''-coordinate
    // after z_0 (I'' kept sorted).
    rep.refined_small_coords = true;
    if (part.l() >= 1) {
        double z1 = std::abs(z[isec[1]]);
        for (int i : isec) {
            if (i == 0) continue;
            if (std::pow(std::abs(z[i]), 1.5) > consts.C * z1) rep.refined_small_coords = false;
        }
    }
    rep.refined_large_coords = true;
    for (int j : ipr)
        if (std::pow(std::abs(z[j]), 1.5) < consts.C * z0) rep.refined_large_coords = false;

    // U_{sigma,I'}: |z| < C2, |p(z)| >= C3, |z_i| <= |z_j|,
    // |z_i| <= C4 nu1~^{2/3}, |z_j| >= C4 nu0~^{2/3} for i in I'', j in I'.
    double nu0t, nu1t;
    {
        std::vector<double> mods;
        for (int i : isec) mods.push_back(std::abs(z[i]));
        std::sort(mods.begin(), mods.end());
        nu0t = mods[0];
        nu1t = mods.size() > 1 ? mods[1] : mods[0];
    }
    bool sector = z.norm() < consts.C2 && std::abs(p.value(z)) >= consts.C3;
    for (int i : isec) {
        for (int j : ipr) sector = sector && std::abs(z[i]) <= std::abs(z[j]);
        sector = sector && std::abs(z[i]) <= consts.C4 * std::pow(nu1t, 2.0 / 3.0);
    }
    for (int j : ipr) sector = sector && std::abs(z[j]) >= consts.C4 * std::pow(nu0t, 2.0 / 3.0);
    rep.sector_member = sector;

    rep.normal = rep.p_bounded && rep.epsilon_small && rep.refined_small_coords &&
                 rep.refined_large_coords && rep.sector_member;
    return rep;
}

}  // namespace slagfib
