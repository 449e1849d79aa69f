#pragma once

#include <cmath>
#include <numbers>

#include "slagfib/geometry.hpp"
#include "slagfib/model.hpp"

namespace slagfib {

struct chart_domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DarbouxImage {
    Eigen::VectorXd x;  // angles theta_1..theta_n
    Eigen::VectorXd y;  // action-like coordinates, zero on the model fibre
};

struct DarbouxBlocks {
    Eigen::MatrixXd y_u;     // dy / d log|z|^2
    Eigen::MatrixXd y_th;    // dy / d theta
    Eigen::MatrixXd u_y;     // d log|z|^2 / dy  (= y_u^{-1})
    Eigen::MatrixXd u_x;     // d log|z|^2 / dx  (= -y_u^{-1} y_th)
    // dx/dlog|z|^2 = 0 and dx/dtheta = I identically.
};

/// Darboux coordinates (x, y) on (Y_t, omega_hat_t) around one model fibre:
/// x_k = theta_k, y built from the displayed action combinations, calibrated
/// so y vanishes identically on S_{r,c} cap Y_t.
class DarbouxChart {
public:
    explicit DarbouxChart(const LocalModel& model) : model_(&model) {
        const auto& part = model.part();
        // C0_j = rho_j + sum_k (lambda_{k,j}/lambda_k) c_k at the fibre radii.
        Vec zr = Vec::Zero(part.n() + 1);
        for (std::size_t j = 0; j < part.i_prime().size(); ++j)
            zr[part.i_prime()[j]] = model.params().r[j];
        c0_ = Eigen::VectorXd::Zero(part.n() + 1);
        for (int j : part.i_prime()) {
            double v = model.rho0().dlog(zr, j);
            for (std::size_t kpos = 0; kpos < part.i_second().size(); ++kpos)
                v += model.lambda(kpos).dlog(zr, j) / model.lambda(kpos).value(zr) *
                     model.params().c[kpos];
            c0_[j] = v;
        }
    }

    const LocalModel& model() const { return *model_; }
    double calibration(int j) const { return c0_[j]; }

    /// Forward map.  Requires z on Y_t to within rel_tol of the t*p scale.
    DarbouxImage forward(const Vec& z, double rel_tol = 1e-8) const {
        const auto& part = model_->part();
        FamilyParams fam = model_->family();
        fam.s = 0;
        double scale = fam.t * std::max(1.0, model_->sup_p_scale());
        if (std::abs(hypersurface_residual(z, fam, model_->p(), part)) > rel_tol * scale)
            throw chart_domain_error("darboux_forward: point not on Y_t");
        return forward_unchecked(z);
    }

    DarbouxImage forward_unchecked(const Vec& z) const {
        const auto& part = model_->part();
        const int n = part.n();
        PointGeometry g = PointGeometry::at(*model_, z);
        DarbouxImage out;
        out.x = Eigen::VectorXd(n);
        out.y = Eigen::VectorXd(n);
        for (int m = 1; m <= n; ++m) out.x[m - 1] = std::arg(z[m]);

        double z0sq = std::norm(z[0]);
        for (std::size_t kpos = 1; kpos < part.i_second().size(); ++kpos) {
            int k = part.i_second()[kpos];
            out.y[k - 1] =
                g.lam[kpos] * std::norm(z[k]) - g.lam[0] * z0sq - model_->params().c[kpos];
        }
        for (int j : part.i_prime()) {
            double v = g.rho0_d[j - 1] - g.lam[0] * z0sq + g.eta * (1.0 - g.logLam_d[j - 1]);
            for (std::size_t kpos = 0; kpos < part.i_second().size(); ++kpos) {
                int k = part.i_second()[kpos];
                double zk2 = (k == 0) ? z0sq : std::norm(z[k]);
                v += g.lam_d[kpos][j - 1] * zk2;
            }
            out.y[j - 1] = v - c0_[j];
        }
        return out;
    }

    /// Exact Jacobian blocks at z (live eta convention; z_0 eliminated through
    /// the hypersurface relation).
    DarbouxBlocks jacobian(const Vec& z) const {
        const auto& part = model_->part();
        const int n = part.n();
        PointGeometry g = PointGeometry::at(*model_, z);
        const double z0sq = std::norm(z[0]);

        // d log|z_0|^2 in the reduced frame.
        Eigen::VectorXd lz0_u(n), lz0_th(n);
        for (int m = 1; m <= n; ++m) {
            lz0_u[m - 1] = g.pch[m - 1].real() - 1.0;
            lz0_th[m - 1] = -2.0 * g.pch[m - 1].imag();
        }

        DarbouxBlocks B;
        B.y_u = Eigen::MatrixXd::Zero(n, n);
        B.y_th = Eigen::MatrixXd::Zero(n, n);

        for (std::size_t kpos = 1; kpos < part.i_second().size(); ++kpos) {
            int k = part.i_second()[kpos];
            double zk2 = std::norm(z[k]);
            for (int m = 1; m <= n; ++m) {
                double v = 0;
                if (m == k) v += g.lam[kpos] * zk2;
                v += g.lam_d[kpos][m - 1] * zk2;
                v -= g.lam_d[0][m - 1] * z0sq;
                v -= g.lam[0] * z0sq * lz0_u[m - 1];
                B.y_u(k - 1, m - 1) = v;
                B.y_th(k - 1, m - 1) = -g.lam[0] * z0sq * lz0_th[m - 1];
            }
        }
        for (int j : part.i_prime()) {
            for (int m = 1; m <= n; ++m) {
                double v = 0;
                if (g.is_prime[m - 1]) {
                    v += g.rho0_dd(j - 1, m - 1);
                    v -= g.eta * g.logLam_dd(j - 1, m - 1);
                }
                v += g.eta_u[m - 1] * (1.0 - g.logLam_d[j - 1]);
                // sum over I'': lambda_{k,j} |z_k|^2 terms
                for (std::size_t kpos = 0; kpos < part.i_second().size(); ++kpos) {
                    int k = part.i_second()[kpos];
                    double zk2 = (k == 0) ? z0sq : std::norm(z[k]);
                    if (g.is_prime[m - 1]) v += g.lam_dd[kpos](j - 1, m - 1) * zk2;
                    if (k == 0)
                        v += g.lam_d[kpos][j - 1] * z0sq * lz0_u[m - 1];
                    else if (m == k)
                        v += g.lam_d[kpos][j - 1] * zk2;
                }
                v -= g.lam_d[0][m - 1] * z0sq;
                v -= g.lam[0] * z0sq * lz0_u[m - 1];
                B.y_u(j - 1, m - 1) = v;

                double w = g.eta_th[m - 1] * (1.0 - g.logLam_d[j - 1]);
                w += (g.lam_d[0][j - 1] - g.lam[0]) * z0sq * lz0_th[m - 1];
                B.y_th(j - 1, m - 1) = w;
            }
        }

        Eigen::FullPivLU<Eigen::MatrixXd> lu(B.y_u);
        if (!lu.isInvertible())
            throw chart_domain_error("darboux_jacobian: singular dy/dlog|z|^2 block");
        B.u_y = lu.inverse();
        B.u_x = -B.u_y * B.y_th;
        return B;
    }

    /// Validated chart box |y_k| <= 0.5 nu_k^2.
    bool in_box(const Eigen::VectorXd& y) const {
        const auto& nu = model_->nu();
        for (int m = 1; m <= model_->part().n(); ++m)
            if (std::abs(y[m - 1]) > 0.5 * nu[m] * nu[m]) return false;
        return true;
    }

    /// Inverse map: Newton on log|z_k|^2 with theta = x fixed; z_0 recovered
    /// from the hypersurface relation.
    Vec inverse(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int max_iter = 50,
                double tol = 1e-13) const {
        const auto& part = model_->part();
        const int n = part.n();

        // initial guess: the model fibre at angles x
        Vec z = Vec::Zero(n + 1);
        for (std::size_t j = 0; j < part.i_prime().size(); ++j) {
            int cj = part.i_prime()[j];
            z[cj] = std::polar(model_->params().r[j], x[cj - 1]);
        }
        double eta0 = model_->eta(z);
        for (std::size_t kpos = 0; kpos < part.i_second().size(); ++kpos) {
            int k = part.i_second()[kpos];
            double lam = model_->lambda_value(static_cast<int>(kpos), z);
            double mod = std::sqrt((model_->params().c[kpos] + eta0) / lam);
            if (k != 0) z[k] = std::polar(mod, x[k - 1]);
        }
        restore_z0(z, x);

        double yscale = model_->nu().tail(n).cwiseAbs2().maxCoeff();
        for (int it = 0; it < max_iter; ++it) {
            DarbouxImage im = forward_unchecked(z);
            Eigen::VectorXd res = im.y - y;
            if (res.cwiseAbs().maxCoeff() <= tol * std::max(1.0, yscale)) return z;
            DarbouxBlocks B = jacobian(z);
            Eigen::VectorXd du = B.y_u.partialPivLu().solve(res);
            for (int m = 1; m <= n; ++m) z[m] *= std::exp(-0.5 * du[m - 1]);
            restore_z0(z, x);
        }
        throw chart_domain_error("darboux_inverse: Newton did not converge");
    }

private:
    void restore_z0(Vec& z, const Eigen::VectorXd& x) const {
        cplx tp = model_->family().t * model_->p0().value(z);
        cplx prod = 1;
        for (int m = 1; m <= model_->part().n(); ++m) prod *= z[m];
        double th0 = std::arg(tp);
        for (Eigen::Index m = 0; m < x.size(); ++m) th0 -= x[m];
        z[0] = std::polar(std::abs(tp) / std::abs(prod), th0);
    }

    const LocalModel* model_;
    Eigen::VectorXd c0_;
};

}  // namespace slagfib
