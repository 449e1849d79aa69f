#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "slagfib/darboux.hpp"
#include "slagfib/embedding.hpp"
#include "slagfib/flows.hpp"
#include "slagfib/geometry.hpp"
#include "slagfib/potential_field.hpp"
#include "slagfib/threading.hpp"

namespace slagfib {

struct continuation_error : std::runtime_error {
    double last_converged_s;
    continuation_error(const std::string& what, double s)
        : std::runtime_error(what), last_converged_s(s) {}
};

/// Coefficients of the linearized phase operator a^{ij} d^2 + b^i d on the
/// grid (a packed row-major over (i,j)).
struct LinearOperatorCoeffs {
    std::vector<Eigen::VectorXd> a;  // n*n grid functions
    std::vector<Eigen::VectorXd> b;  // n grid functions
};

struct DeformationBasis {
    std::vector<Eigen::VectorXd> f;  // n grid functions, zero mean
    Eigen::VectorXd min_diag;        // per k: min over grid of |1 - df_k/dx_k|
    double solve_residual = 0;       // plug-back residual of the linear solves
};

struct ModuliCoordinate {
    Eigen::VectorXd coords;  // mean(y_k)/nu_k^2
};

struct ContinuationStep {
    double s;
    PotentialField h;
    double residual;
    int newton_iters;
    bool used_fd_fallback = false;
};

struct SolverConfig {
    int flow_steps = 64;
    double newton_tol = 1e-9;
    int max_newton_iters = 8;
    int s_steps = 11;  // schedule points including s=0
    double min_ds = 1.0 / 160.0;
    double tail_guard = 0.1;
    int threads = 0;
    bool allow_fd_fallback = true;
};

/// Graph embedding with optionally transported tangent frames.
struct GraphEmbedding {
    FibreEmbedding emb;
    std::vector<Eigen::MatrixXcd> tangents;  // per axis, size x (n+1); empty if not requested
};

/// Evaluates the special-Lagrangian defect F(h,s) on graph tori over one chart
/// and solves F(h,s) = const by damped Newton continuation in s.
class SlagSolver {
public:
    SlagSolver(const LocalModel& model, std::vector<int> grid_shape, SolverConfig cfg = {})
        : model_(&model),
          chart_(model),
          flows_(model, cfg.flow_steps),
          grid_(grid_shape),
          cfg_(cfg),
          reference_(model_torus(model, grid_shape)) {}

    const LocalModel& model() const { return *model_; }
    const DarbouxChart& chart() const { return chart_; }
    const Flows& flows() const { return flows_; }
    const TorusGrid& grid() const { return grid_; }
    const FibreEmbedding& reference() const { return reference_; }
    const SolverConfig& config() const { return cfg_; }

    /// Embedding of the flowed graph torus psi_s({y = dh(x)}); optionally
    /// transports the graph tangent frames variationally through the flows.
    GraphEmbedding embed_graph(const PotentialField& h, double s, bool with_tangents = false,
                               const Eigen::VectorXd* y_shift = nullptr) const {
        const int n = model_->part().n();
        const std::size_t sz = grid_.size();
        Eigen::MatrixXd y = h.gradients();
        if (y_shift)
            for (int ax = 0; ax < n; ++ax) y.col(ax).array() += (*y_shift)[ax];
        std::vector<Eigen::VectorXd> hess;
        if (with_tangents) hess = h.hessian();

        Eigen::MatrixXcd pts(sz, n + 1);
        std::vector<Eigen::MatrixXcd> frames;
        if (with_tangents)
            frames.assign(n, Eigen::MatrixXcd(sz, n + 1));

        parallel_for(
            sz,
            [&](std::size_t i) {
                Eigen::VectorXd x = grid_.node(i);
                Eigen::VectorXd yi = y.row(i).transpose();
                if (!chart_.in_box(yi))
                    throw chart_domain_error("embed_graph: y outside the validated chart box");
                Vec z = chart_.inverse(x, yi);
                std::vector<Vec> tang;
                if (with_tangents) {
                    DarbouxBlocks B = chart_.jacobian(z);
                    Vec q = defining_gradient(z, 0.0, model_->family().t, model_->p(),
                                              model_->part());
                    for (int ax = 0; ax < n; ++ax) {
                        // du/dx_ax along the graph: u_x + u_y * hess(:,ax)
                        Eigen::VectorXd du = B.u_x.col(ax);
                        for (int j = 0; j < n; ++j)
                            du += B.u_y.col(j) * hess[j * n + ax][i];
                        Vec a(n);
                        for (int m = 1; m <= n; ++m) {
                            cplx dlog(0.5 * du[m - 1], (m - 1 == ax) ? 1.0 : 0.0);
                            a[m - 1] = dlog * z[m];
                        }
                        tang.push_back(lift_tangent(z, q, a));
                    }
                }
                flows_.psi(z, s, with_tangents ? &tang : nullptr);
                pts.row(i) = z.transpose();
                for (int ax = 0; ax < n; ++ax)
                    if (with_tangents) frames[ax].row(i) = tang[ax].transpose();
            },
            cfg_.threads);

        GraphEmbedding out{FibreEmbedding{grid_, std::move(pts), reference_.winding},
                           std::move(frames)};
        return out;
    }

    /// F(h,s) = Im log(Omega_{t,s}-density) along the embedded torus, with the
    /// grid mean removed (the gauge the solver works in).  The overall sign is
    /// fixed so that the linearization at (0,0) is positive elliptic.
    Eigen::VectorXd eval_F(const PotentialField& h, double s) const {
        return eval_F_emb(embed_graph(h, s).emb, s);
    }

    Eigen::VectorXd eval_F_emb(const FibreEmbedding& emb, double s) const {
        const int n = model_->part().n();
        Eigen::MatrixXcd g = emb.periodic_log();
        std::vector<Eigen::MatrixXcd> d;
        for (int ax = 0; ax < n; ++ax) d.push_back(emb.dlog(ax, g));
        cplx in = std::pow(cplx(0, 1), n);
        Eigen::VectorXd F(emb.grid.size());
        for (std::size_t node = 0; node < emb.grid.size(); ++node) {
            Mat J(n, n);
            for (int k = 0; k < n; ++k)
                for (int ax = 0; ax < n; ++ax) J(k, ax) = d[ax](node, k + 1);
            cplx det = J.determinant();
            if (std::abs(det) < 1e-12) throw verification_error("eval_F: degenerate frame");
            Vec z = emb.points.row(node).transpose();
            cplx q0 = q_coefficients(z, s, model_->p(), model_->part())[0];
            F[node] = -std::arg(det / (q0 * in));
        }
        F.array() -= F.mean();
        return F;
    }

    /// Phase functional of the raw chart graph y = dh(x), without the
    /// deformation transport.  linear_operator() is its exact linearization at
    /// h = 0; the transported F(h,0) differs from it by the derivative of the
    /// chart flow off the fibre (the O(A) surrogate slack of the Newton).
    Eigen::VectorXd eval_graph_phase(const PotentialField& h) const {
        const int n = model_->part().n();
        const std::size_t sz = grid_.size();
        Eigen::MatrixXd y = h.gradients();
        std::vector<Eigen::VectorXd> hess = h.hessian();
        cplx in = std::pow(cplx(0, 1), n);
        Eigen::VectorXd F(sz);
        parallel_for(
            sz,
            [&](std::size_t i) {
                Eigen::VectorXd x = grid_.node(i);
                Eigen::VectorXd yi = y.row(i).transpose();
                Mat D = chart_U2(x, yi), U3 = chart_U3(x, yi);
                for (int k = 0; k < n; ++k)
                    for (int ax = 0; ax < n; ++ax)
                        for (int j = 0; j < n; ++j)
                            D(k, ax) += U3(k, j) * hess[j * n + ax][i];
                F[i] = -std::arg(D.determinant() / in);
            },
            cfg_.threads);
        F.array() -= F.mean();
        return F;
    }

    /// Linearized operator at (h=0, s=0) from the exact chart Jacobians:
    /// a^{ij} = Im[(U2)^{-1} U3], b^i = Im d(log det U2)/dy_i by centered
    /// differences of exact Jacobians.
    LinearOperatorCoeffs linear_operator() const {
        const int n = model_->part().n();
        const std::size_t sz = grid_.size();
        LinearOperatorCoeffs L;
        L.a.assign(n * n, Eigen::VectorXd(sz));
        L.b.assign(n, Eigen::VectorXd(sz));
        const auto& nu = model_->nu();

        parallel_for(
            sz,
            [&](std::size_t i) {
                Eigen::VectorXd x = grid_.node(i);
                Eigen::VectorXd y0 = Eigen::VectorXd::Zero(n);
                Mat U2 = chart_U2(x, y0), U3 = chart_U3(x, y0);
                Mat ahat = U2.partialPivLu().solve(U3);
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        L.a[a * n + b][i] = -0.5 * (ahat(a, b).imag() + ahat(b, a).imag());
                cplx in = std::pow(cplx(0, 1), n);  // keep logs off the branch cut
                for (int k = 0; k < n; ++k) {
                    double delta = 1e-5 * nu[k + 1] * nu[k + 1];
                    Eigen::VectorXd yp = y0, ym = y0;
                    yp[k] += delta;
                    ym[k] -= delta;
                    cplx lp = std::log(chart_U2(x, yp).determinant() / in);
                    cplx lm = std::log(chart_U2(x, ym).determinant() / in);
                    L.b[k][i] = -((lp - lm) / (2.0 * delta)).imag();
                }
            },
            cfg_.threads);
        return L;
    }

    /// Linearized operator refreshed at (h, s): the U_s machinery evaluated
    /// along the flowed graph with y-partials by centered constant shifts.
    LinearOperatorCoeffs linear_operator_at(const PotentialField& h, double s) const {
        const int n = model_->part().n();
        const std::size_t sz = grid_.size();
        const auto& nu = model_->nu();

        GraphEmbedding base = embed_graph(h, s);
        Eigen::MatrixXcd glog = base.emb.periodic_log();
        std::vector<Eigen::MatrixXcd> dx_total;
        for (int ax = 0; ax < n; ++ax) dx_total.push_back(base.emb.dlog(ax, glog));
        std::vector<Eigen::VectorXd> hess = h.hessian();

        // centered constant-y shifts for d log z / dy_i
        std::vector<Eigen::MatrixXcd> dy(n);
        std::vector<Eigen::MatrixXcd> glog_p(n), glog_m(n);
        std::vector<Eigen::MatrixXcd> pts_p(n), pts_m(n);
        Eigen::VectorXd delta(n);
        for (int k = 0; k < n; ++k) {
            delta[k] = 1e-5 * nu[k + 1] * nu[k + 1];
            Eigen::VectorXd sh = Eigen::VectorXd::Zero(n);
            sh[k] = delta[k];
            GraphEmbedding ep = embed_graph(h, s, false, &sh);
            sh[k] = -delta[k];
            GraphEmbedding em = embed_graph(h, s, false, &sh);
            glog_p[k] = ep.emb.periodic_log();
            glog_m[k] = em.emb.periodic_log();
            pts_p[k] = ep.emb.points;
            pts_m[k] = em.emb.points;
            dy[k] = (glog_p[k] - glog_m[k]) / (2.0 * delta[k]);
        }

        LinearOperatorCoeffs L;
        L.a.assign(n * n, Eigen::VectorXd(sz));
        L.b.assign(n, Eigen::VectorXd(sz));

        // dlog z/dx at fixed y for an embedding with graph Hessian correction
        auto fixed_x = [&](const std::vector<Eigen::MatrixXcd>& dxt, std::size_t node,
                           const Eigen::MatrixXd& hess_node) {
            Mat X(n, n);
            for (int k = 0; k < n; ++k)
                for (int ax = 0; ax < n; ++ax) {
                    cplx v = dxt[ax](node, k + 1);
                    for (int j = 0; j < n; ++j) v -= dy[j](node, k + 1) * hess_node(j, ax);
                    X(k, ax) = v;
                }
            return X;
        };

        std::vector<std::vector<Eigen::MatrixXcd>> dxt_p(n), dxt_m(n);
        for (int k = 0; k < n; ++k)
            for (int ax = 0; ax < n; ++ax) {
                dxt_p[k].push_back(base.emb.dlog(ax, glog_p[k]));
                dxt_m[k].push_back(base.emb.dlog(ax, glog_m[k]));
            }

        parallel_for(
            sz,
            [&](std::size_t i) {
                Eigen::MatrixXd hn(n, n);
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) hn(a, b) = hess[a * n + b][i];
                Mat X = fixed_x(dx_total, i, hn);
                Mat Y(n, n);
                for (int k = 0; k < n; ++k)
                    for (int j = 0; j < n; ++j) Y(k, j) = dy[j](i, k + 1);
                Eigen::PartialPivLU<Mat> lu(X);
                Mat Us = lu.solve(Y);
                Mat M = Mat::Identity(n, n) + Us * hn;
                Eigen::PartialPivLU<Mat> luM(M);
                Mat as = luM.solve(Us);
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        L.a[a * n + b][i] = -0.5 * (as(a, b).imag() + as(b, a).imag());

                cplx in = std::pow(cplx(0, 1), n);  // keep logs off the branch cut
                for (int k = 0; k < n; ++k) {
                    Mat Xp = fixed_x(dxt_p[k], i, hn), Xm = fixed_x(dxt_m[k], i, hn);
                    // eta_s = det X / q0; q0 varies with the shifted point too
                    Vec zp = pts_p[k].row(i).transpose(), zm = pts_m[k].row(i).transpose();
                    cplx q0p = q_coefficients(zp, s, model_->p(), model_->part())[0];
                    cplx q0m = q_coefficients(zm, s, model_->p(), model_->part())[0];
                    cplx letap = std::log(Xp.determinant() / (q0p * in));
                    cplx letam = std::log(Xm.determinant() / (q0m * in));
                    double b1 = ((letap - letam) / (2.0 * delta[k])).imag();
                    // Tr((I + Us hess)^{-1} dUs/dy_k hess)
                    Mat Usp = Eigen::PartialPivLU<Mat>(Xp).solve(Y);
                    Mat Usm = Eigen::PartialPivLU<Mat>(Xm).solve(Y);
                    Mat dUs = (Usp - Usm) / (2.0 * delta[k]);
                    double b2 = (luM.solve(dUs * hn)).trace().imag();
                    L.b[k][i] = -(b1 + b2);
                }
            },
            cfg_.threads);
        return L;
    }

    /// Spectral application of the variable-coefficient operator.
    Eigen::VectorXd apply_operator(const LinearOperatorCoeffs& L, const Eigen::VectorXd& f) const {
        const int n = model_->part().n();
        Eigen::VectorXd out = Eigen::VectorXd::Zero(f.size());
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                Eigen::VectorXd d2 = grid_.second_derivative_real(f, i, j);
                out += L.a[i * n + j].cwiseProduct(d2);
            }
            out += L.b[i].cwiseProduct(grid_.derivative_real(f, i));
        }
        return out;
    }

    /// Dense matrix of the operator on grid values, plus the gauge bordering:
    /// rows 0..M-1: L f + c = rhs; row M: mean(f) = 0.
    Eigen::MatrixXd dense_operator(const LinearOperatorCoeffs& L) const {
        const std::size_t M = grid_.size();
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M + 1, M + 1);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(M);
        for (std::size_t j = 0; j < M; ++j) {
            e[j] = 1.0;
            A.block(0, j, M, 1) = apply_operator(L, e);
            e[j] = 0.0;
        }
        A.block(0, M, M, 1).setOnes();
        A.block(M, 0, 1, M).setOnes();
        return A;
    }

    /// Damped Newton continuation along the s-schedule.  The Jacobian
    /// surrogate is the refreshed linearized operator, inverted densely with a
    /// gauge border; a centered-difference dense Jacobian is the stall
    /// fallback.  Throws continuation_error with the last converged s.
    std::vector<ContinuationStep> newton_continuation(double s_final = 1.0) const {
        std::vector<ContinuationStep> out;
        PotentialField h = PotentialField::zero(grid_);
        out.push_back({0.0, h, eval_F(h, 0.0).cwiseAbs().maxCoeff(), 0});

        double ds = s_final / (cfg_.s_steps - 1);
        double s = 0;
        while (s < s_final - 1e-12) {
            double step = std::min(ds, s_final - s);
            bool ok = false;
            while (true) {
                PotentialField trial = h;
                int iters = 0;
                bool used_fd = false;
                if (solve_at(trial, s + step, iters, used_fd)) {
                    s += step;
                    h = trial;
                    out.push_back({s, h, eval_F(h, s).cwiseAbs().maxCoeff(), iters, used_fd});
                    ok = true;
                    break;
                }
                step *= 0.5;
                if (step < cfg_.min_ds) break;
            }
            if (!ok) throw continuation_error("newton_continuation: stalled", s);
        }
        return out;
    }

    /// One damped Newton solve of F(h, s) = 0 (mean gauge) at fixed s.
    bool solve_at(PotentialField& h, double s, int& iters, bool& used_fd) const {
        const std::size_t M = grid_.size();
        LinearOperatorCoeffs L =
            (s == 0.0 && h.values.cwiseAbs().maxCoeff() == 0.0) ? linear_operator()
                                                                : linear_operator_at(h, s);
        Eigen::MatrixXd A = dense_operator(L);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);

        Eigen::VectorXd F = eval_F(h, s);
        double res = F.cwiseAbs().maxCoeff();
        for (iters = 0; iters < cfg_.max_newton_iters; ++iters) {
            if (res <= cfg_.newton_tol) {
                if (h.tail_fraction() > cfg_.tail_guard)
                    throw verification_error("newton_continuation: spectral tail guard tripped");
                return true;
            }
            Eigen::VectorXd rhs(M + 1);
            rhs.head(M) = -F;
            rhs[M] = 0;
            Eigen::VectorXd sol = lu.solve(rhs);
            Eigen::VectorXd dh = sol.head(M);

            double lambda = 1.0;
            bool accepted = false;
            for (int back = 0; back < 6; ++back) {
                PotentialField trial = h;
                trial.values += lambda * dh;
                trial.project_mean();
                Eigen::VectorXd Ft;
                try {
                    Ft = eval_F(trial, s);
                } catch (const chart_domain_error&) {
                    lambda *= 0.5;
                    continue;
                } catch (const flow_error&) {
                    lambda *= 0.5;
                    continue;
                }
                double rt = Ft.cwiseAbs().maxCoeff();
                if (rt < res) {
                    h = trial;
                    F = Ft;
                    res = rt;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if (!accepted) break;  // stall
        }
        if (res <= cfg_.newton_tol) return true;

        if (!cfg_.allow_fd_fallback) return false;
        used_fd = true;
        return solve_fd(h, s, iters);
    }

    /// Moduli coordinate of a graph given by y-samples: mean(y_k)/nu_k^2.
    ModuliCoordinate moduli_coordinate(const Eigen::MatrixXd& y_samples) const {
        const int n = model_->part().n();
        const auto& nu = model_->nu();
        ModuliCoordinate mc;
        mc.coords = Eigen::VectorXd(n);
        for (int k = 0; k < n; ++k)
            mc.coords[k] = y_samples.col(k).mean() / (nu[k + 1] * nu[k + 1]);
        return mc;
    }

    /// Deformation one-forms dx_k - df_k at the solved state: solves the n
    /// linear problems with the refreshed coefficients.
    DeformationBasis deformation_one_forms(const PotentialField& h, double s = 1.0) const {
        const int n = model_->part().n();
        const std::size_t M = grid_.size();
        LinearOperatorCoeffs L = linear_operator_at(h, s);
        Eigen::MatrixXd A = dense_operator(L);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);

        DeformationBasis out;
        out.min_diag = Eigen::VectorXd(n);
        double worst = 0;
        for (int k = 0; k < n; ++k) {
            Eigen::VectorXd rhs(M + 1);
            rhs.head(M) = L.b[k];
            rhs[M] = 0;
            Eigen::VectorXd sol = lu.solve(rhs);
            Eigen::VectorXd fk = sol.head(M);
            double c = sol[M];
            Eigen::VectorXd plug = apply_operator(L, fk);
            plug.array() += c;
            worst = std::max(worst, (plug - L.b[k]).cwiseAbs().maxCoeff());
            Eigen::VectorXd dfk = grid_.derivative_real(fk, k);
            out.min_diag[k] = (1.0 - dfk.array()).abs().minCoeff();
            out.f.push_back(std::move(fk));
        }
        out.solve_residual = worst;
        return out;
    }

private:
    /// U2 = dlog z/dx and U3 = dlog z/dy at chart coordinates (x, y), exact.
    Mat chart_U2(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        const int n = model_->part().n();
        Vec z = chart_.inverse(x, y);
        DarbouxBlocks B = chart_.jacobian(z);
        Mat U2(n, n);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                U2(j, k) = cplx(0.5 * B.u_x(j, k), j == k ? 1.0 : 0.0);
        return U2;
    }
    Mat chart_U3(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        const int n = model_->part().n();
        Vec z = chart_.inverse(x, y);
        DarbouxBlocks B = chart_.jacobian(z);
        return 0.5 * B.u_y.cast<cplx>();
    }

    bool solve_fd(PotentialField& h, double s, int& iters) const {
        const std::size_t M = grid_.size();
        Eigen::VectorXd F = eval_F(h, s);
        double res = F.cwiseAbs().maxCoeff();
        for (int outer = 0; outer < cfg_.max_newton_iters; ++outer) {
            if (res <= cfg_.newton_tol) return true;
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M + 1, M + 1);
            double eps = 1e-6;
            for (std::size_t j = 0; j < M; ++j) {
                PotentialField hp = h, hm = h;
                hp.values[j] += eps;
                hm.values[j] -= eps;
                A.block(0, j, M, 1) = (eval_F(hp, s) - eval_F(hm, s)) / (2 * eps);
            }
            A.block(0, M, M, 1).setOnes();
            A.block(M, 0, 1, M).setOnes();
            Eigen::VectorXd rhs(M + 1);
            rhs.head(M) = -F;
            rhs[M] = 0;
            Eigen::VectorXd dh = A.partialPivLu().solve(rhs).head(M);
            PotentialField trial = h;
            trial.values += dh;
            trial.project_mean();
            Eigen::VectorXd Ft = eval_F(trial, s);
            double rt = Ft.cwiseAbs().maxCoeff();
            if (rt >= res) return false;
            h = trial;
            F = Ft;
            res = rt;
            ++iters;
        }
        return res <= cfg_.newton_tol;
    }

    const LocalModel* model_;
    DarbouxChart chart_;
    Flows flows_;
    TorusGrid grid_;
    SolverConfig cfg_;
    FibreEmbedding reference_;
};

}  // namespace slagfib
