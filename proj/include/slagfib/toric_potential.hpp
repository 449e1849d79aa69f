#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include "slagfib/partition.hpp"

namespace slagfib {

using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

/// Toric Kahler potential rho(z) = sum_I rho^I prod_k |z_k|^{2 I_k} with
/// non-negative integer multi-indices.  All derivatives in log|z_k|^2 and the
/// complex Hessian are exact.
class ToricPotential {
public:
    using Terms = std::map<std::vector<int>, double>;

    ToricPotential() = default;
    explicit ToricPotential(int nvars, Terms terms) : nvars_(nvars), terms_(std::move(terms)) {
        for (const auto& [idx, c] : terms_) {
            if (static_cast<int>(idx.size()) != nvars_)
                throw std::invalid_argument("ToricPotential: bad multi-index length");
            for (int e : idx)
                if (e < 0) throw std::invalid_argument("ToricPotential: negative exponent");
        }
    }

    int nvars() const { return nvars_; }
    const Terms& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    void add_term(const std::vector<int>& idx, double c) {
        if (static_cast<int>(idx.size()) != nvars_)
            throw std::invalid_argument("ToricPotential: bad multi-index length");
        terms_[idx] += c;
    }

    /// rho at z, through r2_k = |z_k|^2.
    double value(const Vec& z) const {
        std::vector<double> r2 = radii2(z);
        double s = 0;
        for (const auto& [idx, c] : terms_) s += c * mono(r2, idx);
        return s;
    }

    /// d rho / d log|z_j|^2
    double dlog(const Vec& z, int j) const {
        std::vector<double> r2 = radii2(z);
        double s = 0;
        for (const auto& [idx, c] : terms_)
            if (idx[j]) s += c * idx[j] * mono(r2, idx);
        return s;
    }

    /// d^2 rho / d log|z_j|^2 d log|z_k|^2
    double dlog2(const Vec& z, int j, int k) const {
        std::vector<double> r2 = radii2(z);
        double s = 0;
        for (const auto& [idx, c] : terms_)
            if (idx[j] && idx[k]) s += c * idx[j] * idx[k] * mono(r2, idx);
        return s;
    }

    /// Complex Hessian g_{j kbar} = d^2 rho / dz_j dzbar_k.
    Mat hessian(const Vec& z) const {
        Mat g = Mat::Zero(nvars_, nvars_);
        for (const auto& [idx, c] : terms_) {
            // d/dz_j of prod |z_i|^{2 I_i} = I_j * prod / z_j; another dzbar_k gives I_k / zbar_k.
            for (int j = 0; j < nvars_; ++j) {
                if (!idx[j]) continue;
                for (int k = 0; k < nvars_; ++k) {
                    if (!idx[k]) continue;
                    cplx m = c * static_cast<double>(idx[j]) * static_cast<double>(idx[k]);
                    for (int i = 0; i < nvars_; ++i) {
                        int e = idx[i];
                        if (i == j) --e;
                        if (e) m *= std::pow(z[i], e);
                    }
                    for (int i = 0; i < nvars_; ++i) {
                        int e = idx[i];
                        if (i == k) --e;
                        if (e) m *= std::pow(std::conj(z[i]), e);
                    }
                    g(j, k) += m;
                }
            }
        }
        return g;
    }

    /// Degree in the I''-variables of one multi-index.
    static int second_degree(const std::vector<int>& idx, const PartitionedIndex& part) {
        int d = 0;
        for (int k : part.i_second()) d += idx[k];
        return d;
    }

    /// Terms with I''-degree zero: rho(0, z').
    ToricPotential zprime_part(const PartitionedIndex& part) const {
        Terms t;
        for (const auto& [idx, c] : terms_)
            if (second_degree(idx, part) == 0) t[idx] = c;
        return ToricPotential(nvars_, std::move(t));
    }

    /// lambda_k(z') = coefficient function of |z_k|^2 in the expansion around z''=0.
    ToricPotential lambda(const PartitionedIndex& part, int k) const {
        Terms t;
        for (const auto& [idx, c] : terms_) {
            if (idx[k] != 1) continue;
            if (second_degree(idx, part) != 1) continue;
            std::vector<int> rest = idx;
            rest[k] = 0;
            t[rest] += c;
        }
        return ToricPotential(nvars_, std::move(t));
    }

    /// Terms with I''-degree >= 2 (the v_s / deformation-family part).
    ToricPotential higher_part(const PartitionedIndex& part) const {
        Terms t;
        for (const auto& [idx, c] : terms_)
            if (second_degree(idx, part) >= 2) t[idx] = c;
        return ToricPotential(nvars_, std::move(t));
    }

    /// Terms with I''-degree <= 1: the local-model potential rho(0,z') + |z''|^2_lambda.
    ToricPotential model_part(const PartitionedIndex& part) const {
        Terms t;
        for (const auto& [idx, c] : terms_)
            if (second_degree(idx, part) <= 1) t[idx] = c;
        return ToricPotential(nvars_, std::move(t));
    }

    /// rho(s z'', z'): coefficients scaled by s^{2 deg''}.
    ToricPotential scaled_second(const PartitionedIndex& part, double s) const {
        Terms t;
        for (const auto& [idx, c] : terms_) {
            double f = std::pow(s, 2 * second_degree(idx, part));
            if (f != 0.0) t[idx] = c * f;
        }
        return ToricPotential(nvars_, std::move(t));
    }

    /// d/ds of the family rho_tilde's higher part:
    /// sum_{deg>=2} (2 deg - 2) s^{2 deg - 3} |(z'')^I|^2 rho^I.
    ToricPotential family_s_derivative(const PartitionedIndex& part, double s) const {
        Terms t;
        for (const auto& [idx, c] : terms_) {
            int d = second_degree(idx, part);
            if (d < 2) continue;
            t[idx] = c * (2 * d - 2) * std::pow(s, 2 * d - 3);
        }
        return ToricPotential(nvars_, std::move(t));
    }

    /// Higher part with family weights s^{2 deg - 2} (enters rho_tilde_s).
    ToricPotential family_weighted_higher(const PartitionedIndex& part, double s) const {
        Terms t;
        for (const auto& [idx, c] : terms_) {
            int d = second_degree(idx, part);
            if (d < 2) continue;
            t[idx] = c * std::pow(s, 2 * d - 2);
        }
        return ToricPotential(nvars_, std::move(t));
    }

    ToricPotential operator+(const ToricPotential& o) const {
        Terms t = terms_;
        for (const auto& [idx, c] : o.terms_) t[idx] += c;
        return ToricPotential(nvars_, std::move(t));
    }

private:
    static std::vector<double> radii2(const Vec& z) {
        std::vector<double> r2(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) r2[i] = std::norm(z[i]);
        return r2;
    }
    static double mono(const std::vector<double>& r2, const std::vector<int>& idx) {
        double m = 1;
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (int e = 0; e < idx[i]; ++e) m *= r2[i];
        return m;
    }

    int nvars_ = 0;
    Terms terms_;
};

/// g_{j kbar} = d^2 rho / dz_j dzbar_k; Hermitian by construction.
inline Mat kahler_matrix(const ToricPotential& pot, const Vec& z) { return pot.hessian(z); }

}  // namespace slagfib
