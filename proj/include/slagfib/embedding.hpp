#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "slagfib/grid.hpp"
#include "slagfib/model.hpp"

namespace slagfib {

struct verification_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Winding of a raw phase field along one grid axis (number of 2pi turns per
/// period), measured with wrapped nearest-branch increments.
inline int axis_winding(const TorusGrid& grid, const Eigen::VectorXd& raw_phase, int axis) {
    auto m0 = std::vector<int>(grid.dim(), 0);
    double total = 0;
    for (int j = 0; j < grid.shape()[axis]; ++j) {
        auto a = m0, b = m0;
        a[axis] = j;
        b[axis] = j + 1;  // flat() wraps
        double d = raw_phase[grid.flat(b)] - raw_phase[grid.flat(a)];
        while (d > std::numbers::pi) d -= 2 * std::numbers::pi;
        while (d < -std::numbers::pi) d += 2 * std::numbers::pi;
        total += d;
    }
    return static_cast<int>(std::lround(total / (2 * std::numbers::pi)));
}

/// Discrete embedded torus: grid node x -> z in C^{n+1}, with the integer
/// winding matrix W such that log z_k(x) = i (W^T x)_k + periodic part.
struct FibreEmbedding {
    TorusGrid grid;
    Eigen::MatrixXcd points;  // size x (n+1)
    Eigen::MatrixXi winding;  // n x (n+1); entry (j,k): turns of z_k per x_j-cycle

    int n() const { return static_cast<int>(points.cols()) - 1; }

    /// Periodic parts g_k of log z_k.  Throws if any branch jump exceeds pi
    /// (single-valuedness invariant).
    Eigen::MatrixXcd periodic_log() const {
        const std::size_t sz = grid.size();
        Eigen::MatrixXcd g(sz, points.cols());
        for (int k = 0; k <= n(); ++k) {
            Eigen::VectorXd raw(sz);
            for (std::size_t i = 0; i < sz; ++i) {
                auto x = grid.node(i);
                double wphase = 0;
                for (int j = 0; j < grid.dim(); ++j) wphase += winding(j, k) * x[j];
                raw[i] = std::arg(points(i, k) * std::exp(cplx(0, -wphase)));
            }
            Eigen::VectorXd ph = unwrap_phases(grid, raw);
            for (int ax = 0; ax < grid.dim(); ++ax)
                if (axis_winding(grid, raw, ax) != 0)
                    throw verification_error("FibreEmbedding: residual winding after unwrap");
            for (std::size_t i = 0; i < sz; ++i)
                g(i, k) = cplx(std::log(std::abs(points(i, k))), ph[i]);
        }
        return g;
    }

    /// d log z_k / d x_axis at every node (spectral derivative of the periodic
    /// part plus the winding term).
    Eigen::MatrixXcd dlog(int axis, const Eigen::MatrixXcd& glog) const {
        Eigen::MatrixXcd d(glog.rows(), glog.cols());
        for (int k = 0; k < glog.cols(); ++k) {
            Eigen::VectorXcd col = glog.col(k);
            d.col(k) = grid.derivative(col, axis);
            d.col(k).array() += cplx(0, winding(axis, k));
        }
        return d;
    }

    /// Max hypersurface residual over the grid.
    double residual_max(const LocalModel& model, double s) const {
        FamilyParams fam = model.family();
        fam.s = s;
        double m = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            Vec z = points.row(i).transpose();
            m = std::max(m, std::abs(hypersurface_residual(z, fam, model.p(), model.part())));
        }
        return m;
    }
};

/// Explicit local-model fibre S_{r,c} cap Y_t on a uniform grid: |z_j| = r_j,
/// lambda_k |z_k|^2 = c_k + eta(z'), theta_0 = Arg(t p) - sum theta_k.
inline FibreEmbedding model_torus(const LocalModel& model, const std::vector<int>& grid_shape) {
    const auto& part = model.part();
    const int n = part.n();
    TorusGrid grid(grid_shape);
    if (grid.dim() != n) throw parameter_error("model_torus: grid dimension must equal n");

    const std::size_t sz = grid.size();
    Eigen::MatrixXcd pts(sz, n + 1);
    Eigen::VectorXd argp_raw(sz);

    for (std::size_t i = 0; i < sz; ++i) {
        auto x = grid.node(i);
        Vec z = Vec::Zero(n + 1);
        for (std::size_t j = 0; j < part.i_prime().size(); ++j) {
            int cj = part.i_prime()[j];
            z[cj] = std::polar(model.params().r[j], x[cj - 1]);
        }
        double eta = model.eta(z);
        for (std::size_t kpos = 0; kpos < part.i_second().size(); ++kpos) {
            int ck = part.i_second()[kpos];
            double lam = model.lambda_value(static_cast<int>(kpos), z);
            if (!(lam > 0)) throw parameter_error("model_torus: lambda_k <= 0 at a node");
            double mod = std::sqrt((model.params().c[kpos] + eta) / lam);
            double th = (ck == 0) ? 0.0 : x[ck - 1];
            z[ck] = std::polar(mod, th);
        }
        argp_raw[i] = std::arg(model.family().t * model.p0().value(z));
        pts.row(i) = z.transpose();
    }

    // Unwrap Arg(t p) over the grid; its axis windings go into the z_0 column.
    Eigen::VectorXd argp = unwrap_phases(grid, argp_raw);
    Eigen::MatrixXi W = Eigen::MatrixXi::Zero(n, n + 1);
    for (int j = 0; j < n; ++j) {
        W(j, 0) = -1 + axis_winding(grid, argp_raw, j);
        W(j, j + 1) = 1;
    }
    for (std::size_t i = 0; i < sz; ++i) {
        auto x = grid.node(i);
        double th0 = argp[i];
        for (int j = 0; j < n; ++j) th0 -= x[j];
        pts(i, 0) = std::polar(std::abs(pts(i, 0)), th0);
    }
    return FibreEmbedding{std::move(grid), std::move(pts), std::move(W)};
}

/// Tangent frames of an embedding: frame[i] is the (size x (n+1)) matrix of
/// pushforward vectors along x_i, computed spectrally.
inline std::vector<Eigen::MatrixXcd> spectral_tangents(const FibreEmbedding& emb) {
    Eigen::MatrixXcd g = emb.periodic_log();
    std::vector<Eigen::MatrixXcd> frames;
    for (int ax = 0; ax < emb.grid.dim(); ++ax) {
        Eigen::MatrixXcd d = emb.dlog(ax, g);
        frames.push_back(d.cwiseProduct(emb.points));
    }
    return frames;
}

/// Two-form evaluator signature: complex value on a base point and two real
/// tangent vectors represented by their (1,0)-components.
using TwoForm = std::function<cplx(const Vec&, const Vec&, const Vec&)>;

/// sup over nodes and coordinate pairs of |form(e_i, e_j)| with tangents from
/// spectral differentiation (or caller-supplied frames).
inline double lagrangian_residual(const FibreEmbedding& emb, const TwoForm& form,
                                  const std::vector<Eigen::MatrixXcd>* frames_in = nullptr) {
    std::vector<Eigen::MatrixXcd> own;
    const std::vector<Eigen::MatrixXcd>* frames = frames_in;
    if (!frames) {
        own = spectral_tangents(emb);
        frames = &own;
    }
    double worst = 0;
    const int n = emb.n();
    for (std::size_t node = 0; node < emb.grid.size(); ++node) {
        Vec z = emb.points.row(node).transpose();
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                Vec u = (*frames)[i].row(node).transpose();
                Vec v = (*frames)[j].row(node).transpose();
                worst = std::max(worst, std::abs(form(z, u, v)));
            }
    }
    return worst;
}

/// sup - inf of Im log det [d log z_k / d x_j]_{k,j=1..n}, the phase density
/// of Omega_t = prod_{k>=1} dz_k/z_k along the fibre.
inline double phase_residual(const FibreEmbedding& emb) {
    const int n = emb.n();
    Eigen::MatrixXcd g = emb.periodic_log();
    std::vector<Eigen::MatrixXcd> d;
    for (int ax = 0; ax < n; ++ax) d.push_back(emb.dlog(ax, g));

    cplx in = std::pow(cplx(0, 1), n);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t node = 0; node < emb.grid.size(); ++node) {
        Mat J(n, n);
        for (int k = 0; k < n; ++k)
            for (int ax = 0; ax < n; ++ax) J(k, ax) = d[ax](node, k + 1);
        cplx det = J.determinant();
        if (std::abs(det) < 1e-12) throw verification_error("phase_residual: degenerate frame");
        double ph = std::arg(det / in);
        lo = std::min(lo, ph);
        hi = std::max(hi, ph);
    }
    return hi - lo;
}

}  // namespace slagfib
