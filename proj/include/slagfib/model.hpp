#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "slagfib/eta.hpp"
#include "slagfib/family.hpp"
#include "slagfib/grid.hpp"
#include "slagfib/laurent.hpp"
#include "slagfib/partition.hpp"
#include "slagfib/region.hpp"
#include "slagfib/toric_potential.hpp"

namespace slagfib {

/// Fibre parameters: radii r_j (j in I', in I'-order) and action constants c_k
/// (k in I'', in I''-order, c_0 = 0 and non-decreasing).
struct ModelParams {
    std::vector<double> r;
    std::vector<double> c;

    void validate(const PartitionedIndex& part) const {
        if (static_cast<int>(r.size()) != static_cast<int>(part.i_prime().size()))
            throw parameter_error("ModelParams: r size mismatch");
        if (static_cast<int>(c.size()) != part.l() + 1)
            throw parameter_error("ModelParams: c size mismatch");
        if (c[0] != 0.0) throw parameter_error("ModelParams: c_0 must be 0");
        for (std::size_t i = 0; i + 1 < c.size(); ++i)
            if (c[i] > c[i + 1]) throw parameter_error("ModelParams: c must be non-decreasing");
        for (double rj : r)
            if (!(rj > 0)) throw parameter_error("ModelParams: r_j must be positive");
    }
};

/// Immutable bundle identifying one local-model chart: partition, potential,
/// defining polynomial, |t|, and the fibre parameters (r, c).  Precomputes the
/// z''-expansion of rho, the frozen p(0,z'), eta_check and the scale vector nu.
class LocalModel {
public:
    LocalModel(PartitionedIndex part, ToricPotential pot, DefiningPolynomial p,
               FamilyParams family, ModelParams params)
        : part_(std::move(part)),
          pot_(std::move(pot)),
          p_(std::move(p)),
          family_(family),
          params_(std::move(params)),
          rho0_(pot_.zprime_part(part_)),
          higher_(pot_.higher_part(part_)),
          model_pot_(pot_.model_part(part_)),
          p0_(p_.scaled_second(part_, 0.0)) {
        params_.validate(part_);
        for (int k : part_.i_second()) lambda_.push_back(pot_.lambda(part_, k));

        // Lambda and eta_check at the torus radii (z' functions are toric, so
        // any point with |z_j| = r_j works).
        Vec zr = Vec::Zero(part_.n() + 1);
        for (std::size_t j = 0; j < part_.i_prime().size(); ++j)
            zr[part_.i_prime()[j]] = params_.r[j];
        double lam_prod = 1, R = 1;
        for (const auto& lk : lambda_) lam_prod *= lk.value(zr);
        for (double rj : params_.r) R *= rj * rj;
        double kappa_check = lam_prod * family_.t * family_.t / R;
        eta_check_ = solve_eta(params_.c, kappa_check);

        nu_ = Eigen::VectorXd::Zero(part_.n() + 1);
        for (std::size_t i = 0; i < part_.i_second().size(); ++i)
            nu_[part_.i_second()[i]] = std::sqrt(eta_check_ + params_.c[i]);
        for (std::size_t j = 0; j < part_.i_prime().size(); ++j)
            nu_[part_.i_prime()[j]] = params_.r[j];
    }

    const PartitionedIndex& part() const { return part_; }
    const ToricPotential& pot() const { return pot_; }
    const DefiningPolynomial& p() const { return p_; }
    const FamilyParams& family() const { return family_; }
    const ModelParams& params() const { return params_; }
    const ToricPotential& rho0() const { return rho0_; }
    const ToricPotential& higher() const { return higher_; }
    const DefiningPolynomial& p0() const { return p0_; }
    const ToricPotential& lambda(int pos) const { return lambda_[pos]; }
    int second_pos(int k) const {  // position of coordinate k within I''
        const auto& is = part_.i_second();
        return static_cast<int>(std::lower_bound(is.begin(), is.end(), k) - is.begin());
    }
    double c_of(int k) const { return params_.c[second_pos(k)]; }
    double eta_check() const { return eta_check_; }
    const Eigen::VectorXd& nu() const { return nu_; }

    /// Local-model potential rho(0,z') + sum lambda_k |z_k|^2.
    const ToricPotential& model_potential() const { return model_pot_; }

    /// kappa(z) = Lambda(z') |t p(0,z')|^2 / prod_{j in I'} |z_j|^2, live in z'.
    double kappa(const Vec& z) const {
        double lam_prod = 1;
        for (const auto& lk : lambda_) lam_prod *= lk.value(z);
        double R = 1;
        for (int j : part_.i_prime()) R *= std::norm(z[j]);
        return lam_prod * family_.t * family_.t * std::norm(p0_.value(z)) / R;
    }

    double eta(const Vec& z) const { return solve_eta(params_.c, kappa(z)); }

    /// Radial profile eta(z') = const only when both p and the lambdas are.
    double lambda_value(int pos, const Vec& z) const { return lambda_[pos].value(z); }

    double sup_p_scale() const {
        std::vector<double> rad(part_.n() + 1, 0.0);
        for (std::size_t i = 0; i < part_.i_second().size(); ++i)
            rad[part_.i_second()[i]] = std::sqrt(eta_check_ + params_.c[i]);
        for (std::size_t j = 0; j < part_.i_prime().size(); ++j)
            rad[part_.i_prime()[j]] = params_.r[j];
        return p_.sup_on_radii(rad);
    }

private:
    PartitionedIndex part_;
    ToricPotential pot_;
    DefiningPolynomial p_;
    FamilyParams family_;
    ModelParams params_;
    ToricPotential rho0_, higher_, model_pot_;
    DefiningPolynomial p0_;
    std::vector<ToricPotential> lambda_;
    double eta_check_ = 0;
    Eigen::VectorXd nu_;
};

/// eta, zeta and mu sampled over the I'-angle torus of one model fibre.
struct EtaProfile {
    TorusGrid grid;
    Eigen::VectorXd eta, zeta, mu;
};

}  // namespace slagfib
