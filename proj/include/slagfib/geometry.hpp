#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "slagfib/embedding.hpp"
#include "slagfib/model.hpp"

namespace slagfib {

/// Exact first/second derivative tables of the z'-ingredients at one ambient
/// point: lambdas, rho(0,z'), log Lambda, pcheck of p(0,z'), kappa, eta.
/// Real-frame indices m = 1..n are stored 0-based (coordinate m <-> slot m-1);
/// entries for m in I'' vanish for the z'-only functions.
struct PointGeometry {
    int n = 0;
    double kappa = 0, eta = 0, zeta = 0;
    std::vector<char> is_prime;               // coordinate m=1..n in I'?
    std::vector<double> lam;                  // lambda_k over I'' positions
    std::vector<Eigen::VectorXd> lam_d;       // d lambda_k / d u_m
    std::vector<Eigen::MatrixXd> lam_dd;      // second
    Eigen::VectorXd rho0_d;                   // d rho(0,z') / d u_m
    Eigen::MatrixXd rho0_dd;
    Eigen::VectorXd logLam_d;
    Eigen::MatrixXd logLam_dd;
    Vec pch;                                  // pcheck_m of p(0,z'), complex
    Eigen::VectorXd K_u, K_th;                // d log kappa (live) in (u, theta)
    Eigen::VectorXd eta_u, eta_th;            // first derivatives of eta

    static PointGeometry at(const LocalModel& model, const Vec& z) {
        const auto& part = model.part();
        PointGeometry g;
        g.n = part.n();
        const int n = g.n;
        g.rho0_d = Eigen::VectorXd::Zero(n);
        g.rho0_dd = Eigen::MatrixXd::Zero(n, n);
        g.logLam_d = Eigen::VectorXd::Zero(n);
        g.logLam_dd = Eigen::MatrixXd::Zero(n, n);
        g.pch = Vec::Zero(n);
        g.K_u = Eigen::VectorXd::Zero(n);
        g.K_th = Eigen::VectorXd::Zero(n);
        g.is_prime.assign(n, 0);
        for (int j : part.i_prime()) g.is_prime[j - 1] = 1;

        const auto& ipr = part.i_prime();
        const int nsec = static_cast<int>(part.i_second().size());
        for (int kpos = 0; kpos < nsec; ++kpos) {
            const auto& lk = model.lambda(kpos);
            g.lam.push_back(lk.value(z));
            Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
            Eigen::MatrixXd dd = Eigen::MatrixXd::Zero(n, n);
            for (int j : ipr) {
                d[j - 1] = lk.dlog(z, j);
                for (int m : ipr) dd(j - 1, m - 1) = lk.dlog2(z, j, m);
            }
            g.lam_d.push_back(std::move(d));
            g.lam_dd.push_back(std::move(dd));
        }
        for (int j : ipr) {
            g.rho0_d[j - 1] = model.rho0().dlog(z, j);
            for (int m : ipr) g.rho0_dd(j - 1, m - 1) = model.rho0().dlog2(z, j, m);
            for (int kpos = 0; kpos < nsec; ++kpos) {
                g.logLam_d[j - 1] += g.lam_d[kpos][j - 1] / g.lam[kpos];
                for (int m : ipr)
                    g.logLam_dd(j - 1, m - 1) +=
                        g.lam_dd[kpos](j - 1, m - 1) / g.lam[kpos] -
                        g.lam_d[kpos][j - 1] * g.lam_d[kpos][m - 1] / (g.lam[kpos] * g.lam[kpos]);
            }
            g.pch[j - 1] = model.p0().logderiv(z, j);
        }

        g.kappa = model.kappa(z);
        g.eta = solve_eta(model.params().c, g.kappa);
        g.zeta = zeta_of(model.params().c, g.eta);
        for (int j : ipr) {
            g.K_u[j - 1] = g.logLam_d[j - 1] + g.pch[j - 1].real() - 1.0;
            g.K_th[j - 1] = -2.0 * g.pch[j - 1].imag();
        }
        g.eta_u = g.zeta * g.eta * g.K_u;
        g.eta_th = g.zeta * g.eta * g.K_th;
        return g;
    }

    /// Holomorphic log-derivative of kappa: A_j = (logLambda)_j + pcheck_j - 1
    /// for j in I', zero otherwise.
    cplx A(int m1based) const {
        if (!is_prime[m1based - 1]) return 0;
        return cplx(logLam_d[m1based - 1] - 1.0, 0) + pch[m1based - 1];
    }
};

/// (1,1)-part evaluator: sum G_{j kbar} (u_j vbar_k - v_j ubar_k).
inline cplx eval_one_one(const Mat& G, const Vec& u, const Vec& v) {
    return (u.transpose() * G * v.conjugate())(0) - (v.transpose() * G * u.conjugate())(0);
}

/// Exact complex Hessian of mu (live convention): eta * ddbar logLambda +
/// zeta eta * dlogkappa (x) conj(dlogkappa).  Only the I'-block is nonzero.
inline Mat mu_hessian(const LocalModel& model, const Vec& z, const PointGeometry& g) {
    const auto& part = model.part();
    const int n = part.n();
    Mat H = Mat::Zero(n + 1, n + 1);
    for (int j : part.i_prime())
        for (int k : part.i_prime()) {
            cplx hl = g.logLam_dd(j - 1, k - 1) / (z[j] * std::conj(z[k]));
            cplx aa = (g.A(j) / z[j]) * std::conj(g.A(k) / z[k]);
            H(j, k) += g.eta * hl + g.zeta * g.eta * aa;
        }
    return H;
}

inline Mat mu_hessian(const LocalModel& model, const Vec& z) {
    return mu_hessian(model, z, PointGeometry::at(model, z));
}

/// Full toric Kahler form omega = ddbar rho.
inline TwoForm omega_form(const ToricPotential& pot) {
    return [pot](const Vec& z, const Vec& u, const Vec& v) -> cplx {
        return eval_one_one(pot.hessian(z), u, v);
    };
}

/// omega_check = ddbar(model potential) - ddbar mu; restricted to Y_t this is
/// the local-model Kahler form the fibres are Lagrangian for.
inline TwoForm omega_check_form(const LocalModel& model) {
    ToricPotential mp = model.model_potential();
    return [mp, &model](const Vec& z, const Vec& u, const Vec& v) -> cplx {
        return eval_one_one(mp.hessian(z) - mu_hessian(model, z), u, v);
    };
}

/// d Arg(t p(0,z')) as a 1-form on real tangents: Im sum pcheck_j u_j/z_j.
inline double d_arg_tp(const LocalModel& model, const Vec& z, const Vec& u) {
    double s = 0;
    for (int j : model.part().i_prime())
        s += (model.p0().logderiv(z, j) * u[j] / z[j]).imag();
    return s;
}

/// d(lambda_0 |z_0|^2 - eta) on real ambient tangents, exact.
inline double d_defect(const LocalModel& model, const PointGeometry& g, const Vec& z,
                       const Vec& u) {
    // 2 Re of the holomorphic differential of f = lambda_0(z')|z_0|^2 - eta(z').
    cplx df = g.lam[0] * std::conj(z[0]) * u[0];
    double z0sq = std::norm(z[0]);
    for (int j : model.part().i_prime()) {
        cplx coeff = g.lam_d[0][j - 1] * z0sq - g.zeta * g.eta * g.A(j);
        df += coeff * u[j] / z[j];
    }
    return 2.0 * df.real();
}

/// Defect function lambda_0 |z_0|^2 - eta (vanishes on the model fibre).
inline double defect_value(const LocalModel& model, const Vec& z) {
    return model.lambda_value(0, z) * std::norm(z[0]) - model.eta(z);
}

/// omega_hat_{t,s} = omega_check + i (1-s) d(lambda_0|z_0|^2 - eta) ^ dArg(tp).
/// s = 1 gives omega_check_t, s = 0 the Darboux normal form i sum dx ^ dy.
inline TwoForm omega_hat_ts_form(const LocalModel& model, double s) {
    ToricPotential mp = model.model_potential();
    return [mp, &model, s](const Vec& z, const Vec& u, const Vec& v) -> cplx {
        PointGeometry g = PointGeometry::at(model, z);
        cplx base = eval_one_one(mp.hessian(z) - mu_hessian(model, z), u, v);
        double du_f = d_defect(model, g, z, u), dv_f = d_defect(model, g, z, v);
        double du_a = d_arg_tp(model, z, u), dv_a = d_arg_tp(model, z, v);
        return base + cplx(0, 1) * (1.0 - s) * cplx(du_f * dv_a - dv_f * du_a, 0);
    };
}

/// Family potential rho_tilde_s Hessian: model + s-weighted higher part
/// - (1-s) mu.  At s=0 this is omega_check ambient, at s=1 the original omega.
inline Mat omega_tilde_s_matrix(const LocalModel& model, double s, const Vec& z) {
    Mat H = model.model_potential().hessian(z);
    if (!model.higher().empty())
        H += model.higher().family_weighted_higher(model.part(), s).hessian(z);
    if (s != 1.0) H -= (1.0 - s) * mu_hessian(model, z);
    return H;
}

inline TwoForm omega_tilde_s_form(const LocalModel& model, double s) {
    return [&model, s](const Vec& z, const Vec& u, const Vec& v) -> cplx {
        return eval_one_one(omega_tilde_s_matrix(model, s, z), u, v);
    };
}

/// alpha_s = Im d(v_s + mu) as the paper's i-convention 1-form evaluated on a
/// real tangent: returns the real value a with alpha_s(X) = -i * a.
inline double alpha_s_value(const LocalModel& model, double s, const Vec& z, const Vec& u) {
    PointGeometry g = PointGeometry::at(model, z);
    // Im of the holomorphic differential of v_s + mu.
    cplx dmu = 0;
    for (int j : model.part().i_prime()) dmu += g.eta * g.A(j) * u[j] / z[j];
    cplx dvs = 0;
    if (!model.higher().empty()) {
        ToricPotential vs = model.higher().family_s_derivative(model.part(), s);
        for (Eigen::Index k = 0; k < z.size(); ++k) {
            double c = vs.dlog(z, static_cast<int>(k));
            if (c != 0.0) dvs += c * u[k] / z[k];
        }
    }
    return (dmu + dvs).imag();
}

/// Holomorphic lift of base components a (along z_1..z_n) to an ambient vector
/// annihilated by the covector with log-frame components G (on a hypersurface,
/// G = q up to a common factor): u_0 fixed by sum G_k u_k / z_k = 0.
inline Vec lift_tangent(const Vec& z, const Vec& G, const Vec& a) {
    const int n = static_cast<int>(z.size()) - 1;
    Vec u(n + 1);
    cplx s = 0;
    for (int k = 1; k <= n; ++k) {
        u[k] = a[k - 1];
        s += G[k] * a[k - 1] / z[k];
    }
    u[0] = -z[0] * s / G[0];
    return u;
}

}  // namespace slagfib
