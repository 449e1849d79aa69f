#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "slagfib/geometry.hpp"
#include "slagfib/model.hpp"

namespace slagfib {

struct flow_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FlowTrace {
    std::vector<double> s_samples;
    std::vector<double> residual_max;  // hypersurface residual per sample
    std::vector<double> form_drift;    // symplectic-pullback drift per sample
};

/// Integrators for the two symplectic deformation flows: the chart flow
/// generated by -H_alpha on Y_t and the family flow generated by V - H_alpha_s
/// on X_{t,s}.  Points are ambient; after every step z_0 is re-solved from the
/// hypersurface relation (multiplicative projection).
class Flows {
public:
    explicit Flows(const LocalModel& model, int steps_per_unit = 64)
        : model_(&model), steps_(steps_per_unit) {}

    int steps_per_unit() const { return steps_; }

    /// H_alpha with iota(H)omega_hat_{t,s} = alpha,
    /// alpha = -i (lambda_0|z_0|^2 - eta) dArg(tp), assembled and solved in the
    /// real 2n frame of the lifted log-z basis.
    Vec h_alpha(const Vec& z, double s, double alpha_scale = 1.0) const {
        const int n = model_->part().n();
        Vec G = defining_gradient(z, 0.0, model_->family().t, model_->p(), model_->part());
        auto basis = real_basis(z, G);
        PointGeometry g = PointGeometry::at(*model_, z);
        double defect = g.lam[0] * std::norm(z[0]) - g.eta;
        Mat omega_ambient = model_->model_potential().hessian(z) - mu_hessian(*model_, z, g);

        auto omega = [&](const Vec& u, const Vec& v) -> cplx {
            cplx base = eval_one_one(omega_ambient, u, v);
            double du_f = d_defect(*model_, g, z, u), dv_f = d_defect(*model_, g, z, v);
            double du_a = d_arg_tp(*model_, z, u), dv_a = d_arg_tp(*model_, z, v);
            return base + cplx(0, 1) * (1.0 - s) * cplx(du_f * dv_a - dv_f * du_a, 0);
        };
        Eigen::VectorXd rhs(2 * n);
        for (int k = 0; k < 2 * n; ++k)
            rhs[k] = -alpha_scale * defect * d_arg_tp(*model_, z, basis[k]);
        return solve_dual(z, basis, omega, rhs);
    }

    /// Hamiltonian-gradient field V of the family X_{t,s} w.r.t. the frozen
    /// background omega_tilde_s; satisfies dF(V) = d(t p_s)/ds and V
    /// metric-orthogonal to T X_{t,s}.
    Vec V_field(const Vec& z, double s) const {
        const int n = model_->part().n();
        Vec G = defining_gradient(z, s, model_->family().t, model_->p(), model_->part());
        Vec W(n + 1);
        for (int k = 0; k <= n; ++k) W[k] = G[k] / z[k];  // exact ambient dF/dz_k
        Mat H = omega_tilde_s_matrix(*model_, s, z);
        Eigen::LDLT<Mat> ldlt(H);
        if (ldlt.info() != Eigen::Success) throw flow_error("V_field: singular metric");
        Vec N = ldlt.solve(W.conjugate());
        cplx denom = (W.transpose() * N)(0);
        if (std::abs(denom) < 1e-300) throw flow_error("V_field: singular defining differential");
        cplx dtp_ds = model_->family().t * model_->p().s_derivative(model_->part(), s, z);
        return (dtp_ds / denom) * N;
    }

    /// gamma_k representation of V (gamma_k z_k = V-component / P on X_{t,s}).
    Vec gamma(const Vec& z, double s) const {
        const int n = model_->part().n();
        Vec q = q_coefficients(z, s, model_->p(), model_->part());
        Vec W(n + 1);
        for (int k = 0; k <= n; ++k) W[k] = q[k] / z[k];
        Mat H = omega_tilde_s_matrix(*model_, s, z);
        Vec N = H.ldlt().solve(W.conjugate());
        cplx denom = (W.transpose() * N)(0);
        Vec gam(n + 1);
        for (int k = 0; k <= n; ++k) gam[k] = N[k] / (z[k] * denom);
        return gam;
    }

    /// H_{alpha_s} tangent to X_{t,s}: iota(H)omega_tilde_{t,s} = alpha_s|_X.
    Vec h_alpha_s(const Vec& z, double s) const {
        const int n = model_->part().n();
        Vec G = defining_gradient(z, s, model_->family().t, model_->p(), model_->part());
        auto basis = real_basis(z, G);
        Mat H = omega_tilde_s_matrix(*model_, s, z);
        auto omega = [&](const Vec& u, const Vec& v) -> cplx { return eval_one_one(H, u, v); };
        Eigen::VectorXd rhs(2 * n);
        for (int k = 0; k < 2 * n; ++k) rhs[k] = -alpha_s_value(*model_, s, z, basis[k]);
        return solve_dual(z, basis, omega, rhs);
    }

    Vec deformation_field(const Vec& z, double s) const {
        return V_field(z, s) - h_alpha_s(z, s);
    }

    /// Project onto X_{t,s} by re-solving z_0 (fixed point; contraction since
    /// p depends on z_0 only through small z''-terms).
    void project(Vec& z, double s) const {
        DefiningPolynomial ps = model_->p().scaled_second(model_->part(), s);
        const int n = model_->part().n();
        for (int it = 0; it < 60; ++it) {
            cplx prod = 1;
            for (int m = 1; m <= n; ++m) prod *= z[m];
            cplx z0 = model_->family().t * ps.value(z) / prod;
            double delta = std::abs(z0 - z[0]);
            z[0] = z0;
            if (delta <= 1e-16 * (std::abs(z0) + 1e-300)) return;
        }
        throw flow_error("projection: fixed-point iteration did not converge");
    }

    /// Re-impose the tangency constraint on a transported tangent vector.
    void project_tangent(const Vec& z, double s, Vec& u) const {
        Vec G = defining_gradient(z, s, model_->family().t, model_->p(), model_->part());
        cplx acc = 0;
        for (int k = 1; k < z.size(); ++k) acc += G[k] * u[k] / z[k];
        u[0] = -z[0] * acc / G[0];
    }

    using Field = std::function<Vec(const Vec&, double)>;

    /// RK4 with per-step projection and optional simultaneous variational
    /// transport of tangent frames (directional differences of the field).
    void integrate(const Field& field, Vec& z, double s0, double s1, int steps,
                   std::vector<Vec>* tangents = nullptr, bool project_hypersurface = true,
                   double s_project = -1) const {
        const double h = (s1 - s0) / steps;
        for (int step = 0; step < steps; ++step) {
            double s = s0 + step * h;
            Vec k1 = field(z, s);
            Vec k2 = field(z + 0.5 * h * k1, s + 0.5 * h);
            Vec k3 = field(z + 0.5 * h * k2, s + 0.5 * h);
            Vec k4 = field(z + h * k3, s + h);
            if (tangents) {
                for (Vec& u : *tangents) {
                    Vec m1 = dfield(field, z, s, u);
                    Vec m2 = dfield(field, z + 0.5 * h * k1, s + 0.5 * h, u + 0.5 * h * m1);
                    Vec m3 = dfield(field, z + 0.5 * h * k2, s + 0.5 * h, u + 0.5 * h * m2);
                    Vec m4 = dfield(field, z + h * k3, s + h, u + h * m3);
                    u += (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
                }
            }
            z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (project_hypersurface) {
                double sp = (s_project >= 0) ? s_project : s + h;
                project(z, sp);
                if (tangents)
                    for (Vec& u : *tangents) project_tangent(z, sp, u);
            }
        }
    }

    /// Chart flow of -H_alpha from s0 to s1 (stays on Y_t).
    void varphi(Vec& z, double s0, double s1, std::vector<Vec>* tangents = nullptr) const {
        Field f = [this](const Vec& zz, double ss) -> Vec { return -h_alpha(zz, ss); };
        int steps = std::max(1, static_cast<int>(std::lround(steps_ * std::abs(s1 - s0))));
        integrate(f, z, s0, s1, steps, tangents, true, /*s_project=*/0.0);
        // s_project 0: Y_t is the s=0 member of the family
    }

    /// Deformation flow of V - H_{alpha_s} from s0 to s1 (moves across X_{t,s}).
    void phi(Vec& z, double s0, double s1, std::vector<Vec>* tangents = nullptr) const {
        Field f = [this](const Vec& zz, double ss) { return deformation_field(zz, ss); };
        int steps = std::max(1, static_cast<int>(std::lround(steps_ * std::abs(s1 - s0))));
        integrate(f, z, s0, s1, steps, tangents);
    }

    /// psi_s = phi_s after varphi_1: the full chart-to-hypersurface transport.
    void psi(Vec& z, double s, std::vector<Vec>* tangents = nullptr) const {
        varphi(z, 0.0, 1.0, tangents);
        if (s > 0) phi(z, 0.0, s, tangents);
    }

    void psi_inverse(Vec& z, double s, std::vector<Vec>* tangents = nullptr) const {
        if (s > 0) phi(z, s, 0.0, tangents);
        varphi(z, 1.0, 0.0, tangents);
    }

private:
    /// Real 2n basis of T X: slots k -> lift(e_{k+1}), n+k -> lift(i e_{k+1}).
    std::vector<Vec> real_basis(const Vec& z, const Vec& G) const {
        const int n = model_->part().n();
        std::vector<Vec> basis;
        for (int pass = 0; pass < 2; ++pass)
            for (int m = 1; m <= n; ++m) {
                Vec a = Vec::Zero(n);
                a[m - 1] = pass == 0 ? cplx(1) : cplx(0, 1);
                a[m - 1] *= z[m];  // log-z frame: e_m = z_m d/dz_m
                basis.push_back(lift_tangent(z, G, a));
            }
        return basis;
    }

    template <typename Omega>
    Vec solve_dual(const Vec& z, const std::vector<Vec>& basis, const Omega& omega,
                   const Eigen::VectorXd& rhs) const {
        const int n = model_->part().n();
        Eigen::MatrixXd M(2 * n, 2 * n);
        for (int j = 0; j < 2 * n; ++j)
            for (int k = 0; k < 2 * n; ++k) M(j, k) = omega(basis[j], basis[k]).imag();
        Eigen::FullPivLU<Eigen::MatrixXd> lu(M.transpose());
        if (!lu.isInvertible()) throw flow_error("degenerate symplectic form matrix");
        Eigen::VectorXd h = lu.solve(rhs);
        Vec out = Vec::Zero(z.size());
        for (int k = 0; k < 2 * n; ++k) out += h[k] * basis[k];
        return out;
    }

    /// Directional derivative of the field (variational right-hand side).
    Vec dfield(const Field& field, const Vec& z, double s, const Vec& u) const {
        double un = u.norm();
        if (un < 1e-300) return Vec::Zero(z.size());
        double eps = 1e-6 * (z.norm() + 1.0) / un;
        return (field(z + eps * u, s) - field(z - eps * u, s)) / (2.0 * eps);
    }

    const LocalModel* model_;
    int steps_;
};

}  // namespace slagfib
