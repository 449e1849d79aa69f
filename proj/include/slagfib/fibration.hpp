#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slagfib/region.hpp"
#include "slagfib/solver.hpp"

namespace slagfib {

using json = nlohmann::ordered_json;

struct VerificationThresholds {
    double phase = 1e-8;
    double lagrangian = 1e-8;  // variational route against omega_t
    double min_diag = 0.5;
};

struct FibreRecord {
    ModelParams params;
    Eigen::VectorXd normalized;  // chart coordinates of the parameter point
    bool attempted = false;
    bool solved = false;
    bool verified = false;
    std::string error;
    double residual = 0;
    double phase_res = 0;
    double lagr_var = 0;   // omega_t residual with variationally transported frames
    double lagr_spec = 0;  // omega_t residual with spectral-difference frames
    double min_diag = 0;
    double sup_h = 0;
    Eigen::VectorXd moduli;
    PotentialField h{TorusGrid({4}), Eigen::VectorXd::Zero(4)};
    std::shared_ptr<FibreEmbedding> emb;
};

struct OverlapRecord {
    std::vector<int> i_second_b;
    Eigen::VectorXd matched_params_b;  // normalized chart-B coordinates
    double distance = 0;
    double distance_unrefined = 0;  // ablation: initial S8 matching only
    int matching_iterations = 0;
};

struct FibrationAtlas {
    PartitionedIndex part;
    std::vector<FibreRecord> fibres;
    std::vector<OverlapRecord> overlaps;
    std::vector<int> grid_shape;
};

/// Normalized fibre-parameter coordinates of a chart:
/// (c_k/nu_k^2 for k in I'' \ {0}, log r_j^2 for j in I').
inline Eigen::VectorXd normalized_params(const LocalModel& model) {
    const auto& part = model.part();
    Eigen::VectorXd u(part.n());
    int slot = 0;
    for (std::size_t kpos = 1; kpos < part.i_second().size(); ++kpos)
        u[slot++] = model.params().c[kpos] / (model.nu()[part.i_second()[kpos]] *
                                              model.nu()[part.i_second()[kpos]]);
    for (std::size_t j = 0; j < part.i_prime().size(); ++j)
        u[slot++] = 2.0 * std::log(model.params().r[j]);
    return u;
}

/// Parameters from normalized coordinates, measured with the base chart's nu.
inline ModelParams params_from_normalized(const LocalModel& base, const Eigen::VectorXd& u) {
    const auto& part = base.part();
    ModelParams mp;
    mp.c.assign(part.i_second().size(), 0.0);
    int slot = 0;
    for (std::size_t kpos = 1; kpos < part.i_second().size(); ++kpos) {
        double nu = base.nu()[part.i_second()[kpos]];
        mp.c[kpos] = u[slot++] * nu * nu;
    }
    for (std::size_t j = 0; j < part.i_prime().size(); ++j)
        mp.r.push_back(std::exp(0.5 * u[slot++]));
    return mp;
}

/// Pull a solved embedding back through a chart's transport and read the
/// (x, y) graph samples; rows follow the embedding's grid order.
inline Eigen::MatrixXd pull_back_graph(const SlagSolver& solver, const FibreEmbedding& emb,
                                       double s, Eigen::MatrixXd* x_out = nullptr) {
    const int n = solver.model().part().n();
    const std::size_t sz = emb.grid.size();
    Eigen::MatrixXd y(sz, n);
    Eigen::MatrixXd xs(sz, n);
    parallel_for(
        sz,
        [&](std::size_t i) {
            Vec z = emb.points.row(i).transpose();
            solver.flows().psi_inverse(z, s);
            DarbouxImage im = solver.chart().forward_unchecked(z);
            y.row(i) = im.y.transpose();
            xs.row(i) = im.x.transpose();
        },
        solver.config().threads);
    if (x_out) *x_out = xs;
    return y;
}

/// Solves one fibre and fills the verification block.
inline FibreRecord solve_fibre(const LocalModel& model, const std::vector<int>& grid_shape,
                               const SolverConfig& cfg,
                               const VerificationThresholds& thresh = {}) {
    FibreRecord rec;
    rec.params = model.params();
    rec.normalized = normalized_params(model);
    rec.attempted = true;
    try {
        SlagSolver solver(model, grid_shape, cfg);
        auto steps = solver.newton_continuation(1.0);
        const auto& last = steps.back();
        rec.residual = last.residual;
        rec.h = last.h;
        rec.sup_h = last.h.values.cwiseAbs().maxCoeff();
        rec.solved = true;

        GraphEmbedding ge = solver.embed_graph(last.h, 1.0, /*with_tangents=*/true);
        rec.emb = std::make_shared<FibreEmbedding>(ge.emb);
        rec.phase_res = phase_residual(ge.emb);
        TwoForm omega_t = omega_form(model.pot());
        rec.lagr_var = lagrangian_residual(ge.emb, omega_t, &ge.tangents);
        rec.lagr_spec = lagrangian_residual(ge.emb, omega_t);
        DeformationBasis basis = solver.deformation_one_forms(last.h, 1.0);
        rec.min_diag = basis.min_diag.minCoeff();
        rec.moduli = solver.moduli_coordinate(last.h.gradients()).coords;
        rec.verified = rec.phase_res <= thresh.phase && rec.lagr_var <= thresh.lagrangian &&
                       rec.min_diag >= thresh.min_diag;
    } catch (const std::exception& e) {
        rec.error = e.what();
    }
    return rec;
}

/// Runs the solver over a grid of normalized parameter offsets around the base
/// chart.  Points failing the region classifier are recorded and skipped; solve
/// failures are recorded per point and do not abort the sweep.
inline FibrationAtlas sweep(const LocalModel& base, const std::vector<std::vector<double>>& deltas,
                            const std::vector<int>& grid_shape, const SolverConfig& cfg,
                            const RegionConstants& consts = {},
                            const VerificationThresholds& thresh = {}) {
    const auto& part = base.part();
    if (static_cast<int>(deltas.size()) != part.n())
        throw parameter_error("sweep: need one offset list per normalized parameter");

    FibrationAtlas atlas{part, {}, {}, grid_shape};
    Eigen::VectorXd u0 = normalized_params(base);

    std::vector<Eigen::VectorXd> points;
    std::vector<int> idx(part.n(), 0);
    while (true) {
        Eigen::VectorXd u = u0;
        for (int d = 0; d < part.n(); ++d) u[d] += deltas[d][idx[d]];
        points.push_back(u);
        int ax = part.n() - 1;
        while (ax >= 0 && ++idx[ax] == static_cast<int>(deltas[ax].size())) idx[ax--] = 0;
        if (ax < 0) break;
    }

    for (const auto& u : points) {
        FibreRecord rec;
        rec.normalized = u;
        try {
            ModelParams mp = params_from_normalized(base, u);
            LocalModel model(part, base.pot(), base.p(), base.family(), mp);
            // classifier gate at representative fibre nodes
            FibreEmbedding probe = model_torus(model, std::vector<int>(part.n(), 4));
            bool normal = true;
            for (std::size_t i = 0; i < probe.grid.size(); ++i) {
                Vec z = probe.points.row(i).transpose();
                if (!classify_region(z, part, base.p(), consts).normal) normal = false;
            }
            if (!normal) {
                rec.params = mp;
                rec.error = "skipped: parameter point not normal";
                atlas.fibres.push_back(std::move(rec));
                continue;
            }
            atlas.fibres.push_back(solve_fibre(model, grid_shape, cfg, thresh));
            atlas.fibres.back().normalized = u;
        } catch (const std::exception& e) {
            rec.error = e.what();
            atlas.fibres.push_back(std::move(rec));
        }
    }
    return atlas;
}

/// Minimum pairwise distance between solved fibres (over grid samples).
inline double min_pairwise_distance(const FibrationAtlas& atlas) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < atlas.fibres.size(); ++a) {
        if (!atlas.fibres[a].solved) continue;
        for (std::size_t b = a + 1; b < atlas.fibres.size(); ++b) {
            if (!atlas.fibres[b].solved) continue;
            const auto& ea = *atlas.fibres[a].emb;
            const auto& eb = *atlas.fibres[b].emb;
            for (std::size_t i = 0; i < ea.grid.size(); ++i) {
                for (std::size_t j = 0; j < eb.grid.size(); ++j) {
                    double d = (ea.points.row(i) - eb.points.row(j)).norm();
                    best = std::min(best, d);
                }
            }
        }
    }
    return best;
}

struct TangentMapResult {
    Eigen::MatrixXd map;  // d(normalized moduli)/d(normalized params)
    double sigma_min = 0;
    double cond = 0;
};

/// Central-difference tangent map of (r,c) -> normalized moduli, with every
/// neighbouring fibre re-expressed in the base chart before its periods are
/// read.
inline TangentMapResult tangent_map(const LocalModel& base, const std::vector<int>& grid_shape,
                                    const SolverConfig& cfg, double delta = 0.05) {
    const auto& part = base.part();
    const int n = part.n();
    SlagSolver base_solver(base, grid_shape, cfg);
    Eigen::VectorXd u0 = normalized_params(base);

    auto moduli_of = [&](const Eigen::VectorXd& u) {
        ModelParams mp = params_from_normalized(base, u);
        LocalModel model(part, base.pot(), base.p(), base.family(), mp);
        FibreRecord rec = solve_fibre(model, grid_shape, cfg);
        if (!rec.solved) throw continuation_error("tangent_map: stencil solve failed: " + rec.error, 0);
        Eigen::MatrixXd y = pull_back_graph(base_solver, *rec.emb, 1.0);
        return base_solver.moduli_coordinate(y).coords;
    };

    TangentMapResult out;
    out.map = Eigen::MatrixXd(n, n);
    for (int d = 0; d < n; ++d) {
        Eigen::VectorXd up = u0, um = u0;
        up[d] += delta;
        um[d] -= delta;
        out.map.col(d) = (moduli_of(up) - moduli_of(um)) / (2 * delta);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.map);
    out.sigma_min = svd.singularValues().minCoeff();
    out.cond = svd.singularValues().maxCoeff() / out.sigma_min;
    return out;
}

/// Spectral interpolator for one embedding: z(x) at arbitrary angles.
class EmbeddingInterpolant {
public:
    explicit EmbeddingInterpolant(const FibreEmbedding& emb) : emb_(&emb) {
        Eigen::MatrixXcd g = emb.periodic_log();
        for (int k = 0; k < g.cols(); ++k) {
            Eigen::VectorXcd col = g.col(k);
            spectra_.push_back(emb.grid.fft(col));
        }
    }

    Vec at(const Eigen::VectorXd& x) const {
        const int ncols = static_cast<int>(spectra_.size());
        Vec z(ncols);
        for (int k = 0; k < ncols; ++k) {
            cplx g = emb_->grid.interpolate(spectra_[k], x);
            double wphase = 0;
            for (int j = 0; j < emb_->grid.dim(); ++j) wphase += emb_->winding(j, k) * x[j];
            z[k] = std::exp(g + cplx(0, wphase));
        }
        return z;
    }

private:
    const FibreEmbedding* emb_;
    std::vector<Eigen::VectorXcd> spectra_;
};

struct OverlapConfig {
    std::vector<int> i_second_b;
    double moduli_tol = 1e-9;
    int max_iters = 10;
    double damping = 1.0;
};

/// Symmetric grid-point Hausdorff distance between two embeddings after
/// resampling to a common angular parameterization.  reparam holds the
/// base-chart angles of emb_b's nodes (graph order); emb_a is a graph over its
/// own uniform grid in the same angles.
inline double embedding_distance(const FibreEmbedding& emb_a, const FibreEmbedding& emb_b,
                                 const Eigen::MatrixXd& reparam) {
    const int n = emb_a.n();
    EmbeddingInterpolant ia(emb_a), ib(emb_b);
    const TorusGrid& gb = emb_b.grid;

    // direction 1: B-nodes against A interpolated at the matched angles
    double worst = 0;
    for (std::size_t i = 0; i < gb.size(); ++i) {
        Vec za = ia.at(reparam.row(i).transpose());
        worst = std::max(worst, (za - emb_b.points.row(i).transpose()).norm());
    }

    // direction 2: A-grid angles against B interpolated at the pre-image
    // (fixed point of the near-identity reparameterization)
    Eigen::MatrixXd shift(gb.size(), n);  // periodic part of reparam
    for (std::size_t i = 0; i < gb.size(); ++i) {
        Eigen::VectorXd xb = gb.node(i);
        for (int d = 0; d < n; ++d)
            shift(i, d) = std::remainder(reparam(i, d) - xb[d], 2 * std::numbers::pi);
    }
    std::vector<Eigen::VectorXcd> shift_spec;
    for (int d = 0; d < n; ++d) {
        Eigen::VectorXcd col = shift.col(d).cast<cplx>();
        shift_spec.push_back(gb.fft(col));
    }
    for (std::size_t i = 0; i < emb_a.grid.size(); ++i) {
        Eigen::VectorXd xstar = emb_a.grid.node(i);
        Eigen::VectorXd xb = xstar;
        for (int it = 0; it < 40; ++it) {
            Eigen::VectorXd xa(n);
            for (int d = 0; d < n; ++d)
                xa[d] = xb[d] + gb.interpolate(shift_spec[d], xb).real();
            Eigen::VectorXd err(n);
            for (int d = 0; d < n; ++d) err[d] = std::remainder(xa[d] - xstar[d], 2 * std::numbers::pi);
            if (err.cwiseAbs().maxCoeff() < 1e-13) break;
            xb -= err;
        }
        Vec za = emb_a.points.row(i).transpose();
        worst = std::max(worst, (ib.at(xb) - za).norm());
    }
    return worst;
}

/// Cross-chart coincidence check: solves the fibre in both charts, matches
/// chart-B parameters by driving the pulled-back normalized periods to the
/// base fibre's (zero), and reports the resampled Hausdorff distance.
inline OverlapRecord chart_overlap_compare(const LocalModel& model_a,
                                           const std::vector<int>& grid_shape,
                                           const SolverConfig& cfg, const OverlapConfig& ocfg) {
    const auto& part_a = model_a.part();
    const int n = part_a.n();
    PartitionedIndex part_b(n, ocfg.i_second_b);
    for (int k : part_a.i_second())
        if (!part_b.in_second(k))
            throw parameter_error("chart_overlap_compare: need I''_A subset of I''_B");

    // initial matching: c_k kept on J'', c_k = lambda_k r_k^2 on J''', r kept on J'
    Vec zr = Vec::Zero(n + 1);
    for (std::size_t j = 0; j < part_a.i_prime().size(); ++j)
        zr[part_a.i_prime()[j]] = model_a.params().r[j];
    ModelParams mp_b;
    mp_b.c.assign(part_b.i_second().size(), 0.0);
    for (std::size_t kpos = 0; kpos < part_b.i_second().size(); ++kpos) {
        int k = part_b.i_second()[kpos];
        if (part_a.in_second(k)) {
            mp_b.c[kpos] = model_a.c_of(k);
        } else {
            // lambda_k of the B-expansion evaluated at the A-fibre radii
            double lam = model_a.pot().lambda(part_b, k).value(zr);
            int jpos = 0;
            for (std::size_t j = 0; j < part_a.i_prime().size(); ++j)
                if (part_a.i_prime()[j] == k) jpos = static_cast<int>(j);
            mp_b.c[kpos] = lam * model_a.params().r[jpos] * model_a.params().r[jpos];
        }
    }
    for (std::size_t j = 0; j < part_b.i_prime().size(); ++j) {
        int k = part_b.i_prime()[j];
        for (std::size_t ja = 0; ja < part_a.i_prime().size(); ++ja)
            if (part_a.i_prime()[ja] == k) mp_b.r.push_back(model_a.params().r[ja]);
    }

    SlagSolver solver_a(model_a, grid_shape, cfg);
    auto steps_a = solver_a.newton_continuation(1.0);
    GraphEmbedding emb_a = solver_a.embed_graph(steps_a.back().h, 1.0);

    auto solve_b = [&](const ModelParams& mp) {
        LocalModel model_b(part_b, model_a.pot(), model_a.p(), model_a.family(), mp);
        SlagSolver solver_b(model_b, grid_shape, cfg);
        auto steps = solver_b.newton_continuation(1.0);
        return std::make_pair(std::make_shared<LocalModel>(model_b),
                              solver_b.embed_graph(steps.back().h, 1.0));
    };

    OverlapRecord rec;
    rec.i_second_b = ocfg.i_second_b;

    auto moduli_in_a = [&](const FibreEmbedding& emb, Eigen::MatrixXd* x_out = nullptr) {
        Eigen::MatrixXd y = pull_back_graph(solver_a, emb, 1.0, x_out);
        return solver_a.moduli_coordinate(y).coords;
    };

    // ablation record: the unrefined S8 matching
    {
        auto [mb, ge] = solve_b(mp_b);
        Eigen::MatrixXd xa;
        moduli_in_a(ge.emb, &xa);
        rec.distance_unrefined = embedding_distance(emb_a.emb, ge.emb, xa);
    }

    // moduli-matching Newton on the normalized B-parameters
    ModelParams mp_cur = mp_b;
    LocalModel model_b0(part_b, model_a.pot(), model_a.p(), model_a.family(), mp_cur);
    Eigen::VectorXd u = normalized_params(model_b0);
    std::shared_ptr<LocalModel> mb_final;
    std::optional<GraphEmbedding> ge_final;
    for (int it = 0; it < ocfg.max_iters; ++it) {
        ModelParams mp = params_from_normalized(model_b0, u);
        auto [mb, ge] = solve_b(mp);
        Eigen::MatrixXd xa;
        Eigen::VectorXd m = moduli_in_a(ge.emb, &xa);
        mb_final = mb;
        ge_final = ge;
        rec.matching_iterations = it + 1;
        if (m.cwiseAbs().maxCoeff() < ocfg.moduli_tol) break;
        // surrogate Jacobian: diag of scale ratios between the charts
        for (int slot = 0; slot < n; ++slot) {
            int coord;
            if (slot < static_cast<int>(part_b.i_second().size()) - 1)
                coord = part_b.i_second()[slot + 1];
            else
                coord = part_b.i_prime()[slot - (part_b.i_second().size() - 1)];
            double nb = mb->nu()[coord], na = model_a.nu()[coord];
            double jac = nb * nb / (na * na);
            u[slot] -= ocfg.damping * m[coord - 1] / jac;
        }
    }
    {
        Eigen::MatrixXd xa;
        moduli_in_a(ge_final->emb, &xa);
        rec.distance = embedding_distance(emb_a.emb, ge_final->emb, xa);
        rec.matched_params_b = u;
    }
    return rec;
}

/// Deterministic atlas export: one JSON index plus per-fibre CSV embeddings.
inline void export_atlas(const FibrationAtlas& atlas, const std::string& dir, bool force = false) {
    namespace fs = std::filesystem;
    fs::path root(dir);
    fs::path index = root / "index.json";
    if (fs::exists(index) && !force)
        throw std::runtime_error("export_atlas: " + index.string() +
                                 " exists; pass force to overwrite");
    fs::create_directories(root);

    auto fmt = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };

    json idx;
    idx["grid"] = atlas.grid_shape;
    idx["n"] = atlas.part.n();
    idx["i_second"] = atlas.part.i_second();
    idx["fibres"] = json::array();
    int fid = 0;
    for (const auto& rec : atlas.fibres) {
        json f;
        f["id"] = fid;
        f["normalized_params"] = std::vector<double>(rec.normalized.data(),
                                                     rec.normalized.data() + rec.normalized.size());
        f["c"] = rec.params.c;
        f["r"] = rec.params.r;
        f["solved"] = rec.solved;
        f["verified"] = rec.verified;
        if (!rec.error.empty()) f["error"] = rec.error;
        if (rec.solved) {
            f["residual"] = rec.residual;
            f["phase_residual"] = rec.phase_res;
            f["lagrangian_residual_variational"] = rec.lagr_var;
            f["lagrangian_residual_spectral"] = rec.lagr_spec;
            f["min_diag"] = rec.min_diag;
            f["sup_h"] = rec.sup_h;
            f["moduli"] = std::vector<double>(rec.moduli.data(),
                                              rec.moduli.data() + rec.moduli.size());
            char name[32];
            std::snprintf(name, sizeof name, "fibre_%03d.csv", fid);
            f["embedding_csv"] = name;

            std::ofstream csv(root / name);
            const auto& emb = *rec.emb;
            const int n = emb.n();
            csv << "# x_1..x_n, then Re z_k, Im z_k for k = 0..n\n";
            for (std::size_t i = 0; i < emb.grid.size(); ++i) {
                auto x = emb.grid.node(i);
                for (int d = 0; d < n; ++d) csv << fmt(x[d]) << ",";
                for (int k = 0; k <= n; ++k) {
                    csv << fmt(emb.points(i, k).real()) << "," << fmt(emb.points(i, k).imag());
                    csv << (k == n ? "\n" : ",");
                }
            }
        }
        idx["fibres"].push_back(std::move(f));
        ++fid;
    }
    idx["overlaps"] = json::array();
    for (const auto& ov : atlas.overlaps) {
        json o;
        o["i_second_b"] = ov.i_second_b;
        o["distance"] = ov.distance;
        o["distance_unrefined"] = ov.distance_unrefined;
        o["matching_iterations"] = ov.matching_iterations;
        o["matched_params_b"] = std::vector<double>(
            ov.matched_params_b.data(), ov.matched_params_b.data() + ov.matched_params_b.size());
        idx["overlaps"].push_back(std::move(o));
    }
    std::ofstream out(index);
    out << idx.dump(2) << "\n";
}

}  // namespace slagfib
