#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "slagfib/family.hpp"
#include "slagfib/toric_potential.hpp"

namespace slagfib {

/// Diagnostics of the T-boundedness notions evaluated on one metric matrix.
struct TBoundReport {
    double norm_G = 0;           // ||G||
    double norm_conj = 0;        // ||Z G Z^{-1}||
    double norm_conj_bar = 0;    // ||Zbar^{-1} G Zbar||
    double norm_inv_conj = 0;    // ||Z G^{-1} Z^{-1}|| (when det above floor)
    double det_lower = 0;        // |det G|
    double torically_bounded_excess = 0;
    double diag_envelope = 0;        // smallest constant for the diagonal part
    double toric_envelope = 0;       // smallest constant for O(|z_i z_j|) entries
    double strong_correction_norm = 0;  // smallest constant for O(|z_0|^2/(|z_i||z_j|))
    bool t_bounded = false;
    bool inverse_t_bounded = false;
};

/// Conjugated operator norms ||Z G Z^{-1}||, ||Zbar^{-1} G Zbar|| and the
/// inverse variant; z holds the diagonal entries z_1..z_n (no zeros allowed).
inline TBoundReport t_bound_norms(const Mat& G, const Vec& z, double bound = 1e3,
                                  double det_floor = 1e-12) {
    const int n = static_cast<int>(G.rows());
    if (z.size() != n) throw parameter_error("t_bound_norms: size mismatch");
    for (int k = 0; k < n; ++k)
        if (z[k] == cplx(0)) throw parameter_error("t_bound_norms: zero coordinate");

    Mat Z = Mat::Zero(n, n), Zi = Mat::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        Z(k, k) = z[k];
        Zi(k, k) = cplx(1) / z[k];
    }
    auto opnorm = [](const Mat& m) {
        Eigen::JacobiSVD<Mat> svd(m);
        return svd.singularValues()[0];
    };

    TBoundReport rep;
    rep.norm_G = opnorm(G);
    rep.norm_conj = opnorm(Z * G * Zi);
    rep.norm_conj_bar = opnorm(Zi.conjugate() * G * Z.conjugate());
    rep.det_lower = std::abs(G.determinant());
    rep.t_bounded = rep.norm_conj <= bound && rep.norm_conj_bar <= bound;
    if (rep.det_lower >= det_floor) {
        Mat Gi = G.inverse();
        rep.norm_inv_conj = opnorm(Z * Gi * Zi);
        rep.inverse_t_bounded = rep.norm_inv_conj <= bound;
    }
    return rep;
}

/// Entry-wise envelope split G = D + T + E: diagonal -> D, off-diagonal
/// outside I x J -> T with envelope |z_i z_j|, off-diagonal inside I x J -> E
/// with envelope |z_0|^2/(|z_i||z_j|).  Reports the smallest constants
/// achieving the split (sup over entries).
inline TBoundReport strong_tbound_decompose(const Mat& G, const Vec& z, double z0_abs,
                                            const std::vector<int>& I, const std::vector<int>& J) {
    const int n = static_cast<int>(G.rows());
    for (int k = 0; k < n; ++k)
        if (z0_abs > std::abs(z[k]) * (1 + 1e-12))
            throw parameter_error("strong_tbound_decompose: |z_0| must be <= min |z_k|");

    auto inI = [&](int i) { return std::find(I.begin(), I.end(), i) != I.end(); };
    auto inJ = [&](int j) { return std::find(J.begin(), J.end(), j) != J.end(); };

    TBoundReport rep = t_bound_norms(G, z);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double mag = std::abs(G(i, j));
            if (i == j) {
                rep.diag_envelope = std::max(rep.diag_envelope, mag);
            } else if (inI(i) && inJ(j)) {
                double env = z0_abs * z0_abs / (std::abs(z[i]) * std::abs(z[j]));
                rep.strong_correction_norm = std::max(rep.strong_correction_norm, mag / env);
            } else {
                double env = std::abs(z[i]) * std::abs(z[j]);
                rep.toric_envelope = std::max(rep.toric_envelope, mag / env);
            }
        }
    // excess of the torically-bounded model: entries not dominated by
    // diag + |z_i z_j| envelopes at constant max(diag_envelope, toric_envelope)
    double cmax = std::max(rep.diag_envelope, rep.toric_envelope);
    double excess = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double env = cmax * ((i == j ? 1.0 : 0.0) + std::abs(z[i]) * std::abs(z[j]));
            excess = std::max(excess, std::abs(G(i, j)) - env);
        }
    rep.torically_bounded_excess = std::max(0.0, excess);
    return rep;
}

}  // namespace slagfib
