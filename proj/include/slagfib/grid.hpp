#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <unsupported/Eigen/FFT>
#include <vector>

namespace slagfib {

/// Uniform periodic grid on T^n with tensor FFT utilities: spectral
/// differentiation, means, and trigonometric interpolation at off-grid points.
class TorusGrid {
public:
    explicit TorusGrid(std::vector<int> shape) : shape_(std::move(shape)) {
        if (shape_.empty()) throw std::invalid_argument("TorusGrid: empty shape");
        size_ = 1;
        for (int nvals : shape_) {
            if (nvals < 4) throw std::invalid_argument("TorusGrid: axis size must be >= 4");
            size_ *= nvals;
        }
        strides_.resize(shape_.size());
        std::size_t s = 1;
        for (int ax = static_cast<int>(shape_.size()) - 1; ax >= 0; --ax) {
            strides_[ax] = s;
            s *= shape_[ax];
        }
    }

    int dim() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    std::size_t size() const { return size_; }

    std::vector<int> multi(std::size_t flat) const {
        std::vector<int> m(dim());
        for (int ax = 0; ax < dim(); ++ax) {
            m[ax] = static_cast<int>(flat / strides_[ax]);
            flat %= strides_[ax];
        }
        return m;
    }
    std::size_t flat(const std::vector<int>& m) const {
        std::size_t f = 0;
        for (int ax = 0; ax < dim(); ++ax) {
            int v = ((m[ax] % shape_[ax]) + shape_[ax]) % shape_[ax];
            f += strides_[ax] * static_cast<std::size_t>(v);
        }
        return f;
    }

    /// Angles of one node, components in [0, 2pi).
    Eigen::VectorXd node(std::size_t flat_idx) const {
        auto m = multi(flat_idx);
        Eigen::VectorXd x(dim());
        for (int ax = 0; ax < dim(); ++ax)
            x[ax] = 2.0 * std::numbers::pi * m[ax] / shape_[ax];
        return x;
    }

    /// Integer wavenumber of index j on an axis of size N (derivative
    /// convention: Nyquist mode mapped to 0).
    static double wavenumber(int j, int N, bool for_derivative) {
        int k = (j <= N / 2) ? j : j - N;
        if (for_derivative && N % 2 == 0 && j == N / 2) return 0.0;
        return static_cast<double>(k);
    }

    /// Forward FFT along one axis, in place on a flat complex field.
    void fft_axis(Eigen::VectorXcd& f, int axis, bool inverse) const {
        const int N = shape_[axis];
        Eigen::FFT<double> fft;
        std::vector<std::complex<double>> line(N), out(N);
        const std::size_t stride = strides_[axis];
        const std::size_t nlines = size_ / N;
        for (std::size_t li = 0; li < nlines; ++li) {
            // base index of this line: decompose li over the remaining axes
            std::size_t rem = li, base = 0;
            for (int ax = 0; ax < dim(); ++ax) {
                if (ax == axis) continue;
                std::size_t extent = shape_[ax];
                std::size_t coord = rem % extent;
                rem /= extent;
                base += coord * strides_[ax];
            }
            for (int j = 0; j < N; ++j) line[j] = f[base + j * stride];
            if (!inverse)
                fft.fwd(out, line);
            else
                fft.inv(out, line);
            for (int j = 0; j < N; ++j) f[base + j * stride] = out[j];
        }
    }

    Eigen::VectorXcd fft(const Eigen::VectorXcd& f) const {
        Eigen::VectorXcd g = f;
        for (int ax = 0; ax < dim(); ++ax) fft_axis(g, ax, false);
        return g;
    }
    Eigen::VectorXcd ifft(const Eigen::VectorXcd& f) const {
        Eigen::VectorXcd g = f;
        for (int ax = 0; ax < dim(); ++ax) fft_axis(g, ax, true);
        return g;
    }

    /// Spectral d/dx_axis of a complex field given by grid values.
    Eigen::VectorXcd derivative(const Eigen::VectorXcd& f, int axis) const {
        Eigen::VectorXcd sp = fft(f);
        for (std::size_t i = 0; i < size_; ++i) {
            auto m = multi(i);
            double k = wavenumber(m[axis], shape_[axis], true);
            sp[i] *= std::complex<double>(0, k);
        }
        return ifft(sp);
    }

    Eigen::VectorXd derivative_real(const Eigen::VectorXd& f, int axis) const {
        Eigen::VectorXcd g = derivative(f.cast<std::complex<double>>(), axis);
        return g.real();
    }

    /// Spectral second derivative d^2/dx_i dx_j.  The diagonal case keeps the
    /// Nyquist wavenumber (multiplier -k^2 with k = N/2), so the discrete
    /// operator has no spurious null modes; mixed derivatives use the
    /// odd-derivative convention on both axes.
    Eigen::VectorXd second_derivative_real(const Eigen::VectorXd& f, int i, int j) const {
        Eigen::VectorXcd sp = fft(f.cast<std::complex<double>>());
        for (std::size_t idx = 0; idx < size_; ++idx) {
            auto m = multi(idx);
            if (i == j) {
                double k = wavenumber(m[i], shape_[i], false);
                if (shape_[i] % 2 == 0 && m[i] == shape_[i] / 2) k = shape_[i] / 2.0;
                sp[idx] *= -k * k;
            } else {
                double ki = wavenumber(m[i], shape_[i], true);
                double kj = wavenumber(m[j], shape_[j], true);
                sp[idx] *= -ki * kj;
            }
        }
        return ifft(sp).real();
    }

    double mean(const Eigen::VectorXd& f) const { return f.sum() / static_cast<double>(size_); }

    /// Evaluate the trigonometric interpolant of grid values at an arbitrary
    /// point x (angles).  Even-axis Nyquist modes interpolate as cos so real
    /// data keeps a real interpolant.  O(size) per evaluation.
    std::complex<double> interpolate(const Eigen::VectorXcd& spectrum,
                                     const Eigen::VectorXd& x) const {
        std::complex<double> acc = 0;
        for (std::size_t i = 0; i < size_; ++i) {
            std::complex<double> factor = 1;
            auto m = multi(i);
            for (int ax = 0; ax < dim(); ++ax) {
                int N = shape_[ax];
                if (N % 2 == 0 && m[ax] == N / 2) {
                    factor *= std::cos((N / 2) * x[ax]);
                } else {
                    double k = wavenumber(m[ax], N, false);
                    factor *= std::complex<double>(std::cos(k * x[ax]), std::sin(k * x[ax]));
                }
            }
            acc += spectrum[i] * factor;
        }
        return acc / static_cast<double>(size_);
    }

private:
    std::vector<int> shape_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

/// Unwrap grid phases so that each field is continuous (jumps < pi) along the
/// lexicographic sweep; assumes the underlying function is smooth and the grid
/// resolves it.
inline Eigen::VectorXd unwrap_phases(const TorusGrid& grid, const Eigen::VectorXd& raw) {
    Eigen::VectorXd out(raw.size());
    const double twopi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i == 0) {
            out[0] = raw[0];
            continue;
        }
        auto m = grid.multi(i);
        // reference: previous node along the last axis that has a nonzero coordinate
        std::size_t ref = i;
        for (int ax = grid.dim() - 1; ax >= 0; --ax) {
            if (m[ax] > 0) {
                auto mm = m;
                mm[ax] -= 1;
                ref = grid.flat(mm);
                break;
            }
        }
        double v = raw[i];
        while (v - out[ref] > std::numbers::pi) v -= twopi;
        while (v - out[ref] < -std::numbers::pi) v += twopi;
        out[i] = v;
    }
    return out;
}

}  // namespace slagfib
