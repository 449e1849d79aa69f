#pragma once

#include <cmath>

#include "slagfib/grid.hpp"

namespace slagfib {

/// Graph potential h on T^n held as mean-zero grid values; derivatives are
/// exact derivatives of the trigonometric interpolant.
struct PotentialField {
    TorusGrid grid;
    Eigen::VectorXd values;

    static PotentialField zero(const TorusGrid& g) {
        return PotentialField{g, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size()))};
    }

    void project_mean() { values.array() -= values.mean(); }

    Eigen::VectorXd gradient(int axis) const { return grid.derivative_real(values, axis); }

    /// All n gradients, column per axis.
    Eigen::MatrixXd gradients() const {
        Eigen::MatrixXd g(values.size(), grid.dim());
        for (int ax = 0; ax < grid.dim(); ++ax) g.col(ax) = gradient(ax);
        return g;
    }

    /// Second derivatives d2h/dx_i dx_j, packed row-major over (i,j).
    std::vector<Eigen::VectorXd> hessian() const {
        const int n = grid.dim();
        std::vector<Eigen::VectorXd> H(n * n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                H[i * n + j] = grid.second_derivative_real(values, i, j);
                if (j != i) H[j * n + i] = H[i * n + j];
            }
        return H;
    }

    /// Energy fraction carried by modes with any |k_ax| in the top third of the
    /// resolved band (under-resolution guard).
    double tail_fraction() const {
        Eigen::VectorXcd sp = grid.fft(values.cast<std::complex<double>>());
        double total = 0, tail = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            auto m = grid.multi(i);
            bool zero_mode = true, in_tail = false;
            for (int ax = 0; ax < grid.dim(); ++ax) {
                double k = std::abs(TorusGrid::wavenumber(m[ax], grid.shape()[ax], false));
                if (k != 0) zero_mode = false;
                if (k >= (2.0 / 3.0) * (grid.shape()[ax] / 2)) in_tail = true;
            }
            if (zero_mode) continue;
            double e = std::norm(sp[i]);
            total += e;
            if (in_tail) tail += e;
        }
        return total > 0 ? tail / total : 0.0;
    }
};

}  // namespace slagfib
