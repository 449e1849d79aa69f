#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include "slagfib/partition.hpp"
#include "slagfib/toric_potential.hpp"

namespace slagfib {

/// Laurent polynomial p(z) = sum_m a_m z^m, m in Z^{n+1}.  Supplies exact
/// logarithmic derivatives p_k = z_k dp/dz_k and the second log-derivatives of
/// log p used throughout the chart and flow formulas.
class DefiningPolynomial {
public:
    using Terms = std::map<std::vector<int>, cplx>;

    DefiningPolynomial() = default;
    DefiningPolynomial(int nvars, Terms terms) : nvars_(nvars), terms_(std::move(terms)) {
        for (const auto& [idx, c] : terms_)
            if (static_cast<int>(idx.size()) != nvars_)
                throw std::invalid_argument("DefiningPolynomial: bad multi-index length");
    }

    int nvars() const { return nvars_; }
    const Terms& terms() const { return terms_; }

    cplx value(const Vec& z) const {
        cplx s = 0;
        for (const auto& [idx, c] : terms_) s += c * mono(z, idx);
        return s;
    }

    /// p_k = z_k dp/dz_k
    cplx pk(const Vec& z, int k) const {
        cplx s = 0;
        for (const auto& [idx, c] : terms_)
            if (idx[k]) s += c * static_cast<double>(idx[k]) * mono(z, idx);
        return s;
    }

    /// pcheck_k = z_k d(log p)/dz_k
    cplx logderiv(const Vec& z, int k) const { return pk(z, k) / value(z); }

    /// d^2 log p / d log z_j d log z_k
    cplx logderiv2(const Vec& z, int j, int k) const {
        cplx p = value(z), pj = pk(z, j), pkk = pk(z, k), pjk = 0;
        for (const auto& [idx, c] : terms_)
            if (idx[j] && idx[k])
                pjk += c * static_cast<double>(idx[j]) * static_cast<double>(idx[k]) * mono(z, idx);
        return pjk / p - pj * pkk / (p * p);
    }

    /// p(s z'', z'): coefficients scaled by s^{deg''(m)}.  Requires non-negative
    /// I''-exponents when s can be 0.
    DefiningPolynomial scaled_second(const PartitionedIndex& part, double s) const {
        Terms t;
        for (const auto& [idx, c] : terms_) {
            int d = 0;
            for (int k : part.i_second()) d += idx[k];
            if (d < 0 && s == 0.0)
                throw std::domain_error("DefiningPolynomial: negative I''-degree at s=0");
            cplx f = (d == 0) ? cplx(1) : cplx(std::pow(s, d));
            if (f != cplx(0)) t[idx] = c * f;
        }
        return DefiningPolynomial(nvars_, std::move(t));
    }

    /// d/ds [ p(s z'', z') ] evaluated at z (z unscaled).
    cplx s_derivative(const PartitionedIndex& part, double s, const Vec& z) const {
        cplx r = 0;
        for (const auto& [idx, c] : terms_) {
            int d = 0;
            for (int k : part.i_second()) d += idx[k];
            if (d == 0) continue;
            r += c * static_cast<double>(d) * std::pow(s, d - 1) * mono(z, idx);
        }
        return r;
    }

    /// sup |p| over a torus sample with radii |z_k| = rad_k (crude bound used
    /// for residual scales).
    double sup_on_radii(const std::vector<double>& rad) const {
        double s = 0;
        for (const auto& [idx, c] : terms_) {
            double m = std::abs(c);
            for (std::size_t i = 0; i < idx.size(); ++i) m *= std::pow(rad[i], idx[i]);
            s += m;
        }
        return s;
    }

private:
    static cplx mono(const Vec& z, const std::vector<int>& idx) {
        cplx m = 1;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            int e = idx[i];
            if (e > 0)
                m *= std::pow(z[i], e);
            else if (e < 0)
                m /= std::pow(z[i], -e);
        }
        return m;
    }

    int nvars_ = 0;
    Terms terms_;
};

}  // namespace slagfib
