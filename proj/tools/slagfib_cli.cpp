// Command-line laboratory front end: builds local-model tori, runs the
// deformation solves, sweeps fibre parameters into an atlas, and runs the
// cross-chart coincidence and T-bound diagnostics.
//
// Exit codes: 0 success, 2 parameter error, 3 convergence failure,
// 4 verification failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "slagfib/config.hpp"
#include "slagfib/embedding.hpp"
#include "slagfib/fibration.hpp"
#include "slagfib/flows.hpp"
#include "slagfib/geometry.hpp"
#include "slagfib/solver.hpp"
#include "slagfib/tbound.hpp"

using namespace slagfib;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParam = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitVerification = 4;

void write_embedding_csv(const FibreEmbedding& emb, const std::string& path) {
    std::ofstream out(path);
    auto fmt = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    const int n = emb.n();
    out << "# x_1..x_n, then Re z_k, Im z_k for k = 0..n\n";
    for (std::size_t i = 0; i < emb.grid.size(); ++i) {
        auto x = emb.grid.node(i);
        for (int d = 0; d < n; ++d) out << fmt(x[d]) << ",";
        for (int k = 0; k <= n; ++k)
            out << fmt(emb.points(i, k).real()) << "," << fmt(emb.points(i, k).imag())
                << (k == n ? "\n" : ",");
    }
}

json embedding_json(const FibreEmbedding& emb, const LocalModel& model) {
    json j;
    j["grid"] = emb.grid.shape();
    j["winding"] = json::array();
    for (int r = 0; r < emb.winding.rows(); ++r) {
        std::vector<int> row;
        for (int c = 0; c < emb.winding.cols(); ++c) row.push_back(emb.winding(r, c));
        j["winding"].push_back(row);
    }
    j["r"] = model.params().r;
    j["c"] = model.params().c;
    j["t"] = model.family().t;
    return j;
}

int run_model_check(const LabConfig& cfg, const std::string& out_path) {
    LocalModel model = cfg.model();
    std::vector<int> coarse = cfg.grid_shape;
    for (int& nn : coarse) nn /= 2;

    FibreEmbedding fine = model_torus(model, cfg.grid_shape);
    FibreEmbedding half = model_torus(model, coarse);
    TwoForm form = omega_check_form(model);

    double scale = model.family().t * model.sup_p_scale();
    double resid = fine.residual_max(model, 0.0);
    double lagr_f = lagrangian_residual(fine, form);
    double lagr_c = lagrangian_residual(half, form);
    double phase_f = phase_residual(fine);
    double phase_c = phase_residual(half);

    std::cout << "hypersurface residual: " << resid << " (tolerance " << 1e-10 * scale << ")\n"
              << "lagrangian residual (omega_check): " << lagr_c << " -> " << lagr_f
              << " under refinement\n"
              << "phase residual: " << phase_c << " -> " << phase_f << " under refinement\n";
    if (!out_path.empty()) {
        write_embedding_csv(fine, out_path + ".csv");
        std::ofstream jf(out_path + ".json");
        json j = embedding_json(fine, model);
        j["lagrangian_residual"] = lagr_f;
        j["phase_residual"] = phase_f;
        jf << j.dump(2) << "\n";
    }
    bool ok = resid <= 1e-10 * scale && lagr_f <= 1e-6 && phase_f <= 1e-6;
    return ok ? kExitOk : kExitVerification;
}

int run_solve_fibre(const LabConfig& cfg, const std::string& out_path, double tol,
                    bool dump_chart) {
    LocalModel model = cfg.model();
    SolverConfig scfg = cfg.solver;
    if (tol > 0) scfg.newton_tol = tol;
    FibreRecord rec = solve_fibre(model, cfg.grid_shape, scfg, cfg.thresholds);
    if (!rec.solved) {
        std::cerr << "solve failed: " << rec.error << "\n";
        return kExitConvergence;
    }
    std::cout << "terminal residual: " << rec.residual << "\n"
              << "phase residual: " << rec.phase_res << "\n"
              << "lagrangian residual (variational / spectral): " << rec.lagr_var << " / "
              << rec.lagr_spec << "\n"
              << "deformation 1-form min diag: " << rec.min_diag << "\n"
              << "sup |h|: " << rec.sup_h << "\n";
    if (!out_path.empty()) {
        json j;
        j["residual"] = rec.residual;
        j["sup_h"] = rec.sup_h;
        j["h_values"] = std::vector<double>(rec.h.values.data(),
                                            rec.h.values.data() + rec.h.values.size());
        j["verification"] = {{"phase_residual", rec.phase_res},
                             {"lagrangian_residual_variational", rec.lagr_var},
                             {"lagrangian_residual_spectral", rec.lagr_spec},
                             {"min_diag", rec.min_diag}};
        j["moduli"] = std::vector<double>(rec.moduli.data(),
                                          rec.moduli.data() + rec.moduli.size());
        if (dump_chart) {
            DarbouxChart chart(model);
            json cj;
            for (int k : model.part().i_prime()) cj["C0"].push_back(chart.calibration(k));
            j["chart"] = cj;
        }
        std::ofstream out(out_path);
        out << j.dump(2) << "\n";
    }
    return rec.verified ? kExitOk : kExitVerification;
}

int run_sweep(const LabConfig& cfg, const std::string& out_dir, bool force) {
    if (cfg.sweep_deltas.empty()) {
        std::cerr << "config has no sweep.deltas\n";
        return kExitParam;
    }
    LocalModel base = cfg.model();
    FibrationAtlas atlas =
        sweep(base, cfg.sweep_deltas, cfg.grid_shape, cfg.solver, cfg.region, cfg.thresholds);
    int solved = 0, verified = 0, failed = 0;
    for (const auto& f : atlas.fibres) {
        solved += f.solved;
        verified += f.verified;
        failed += (!f.solved);
    }
    std::cout << "sweep: " << atlas.fibres.size() << " points, " << solved << " solved, "
              << verified << " verified, " << failed << " skipped/failed\n";
    if (solved >= 2)
        std::cout << "min pairwise fibre distance: " << min_pairwise_distance(atlas) << "\n";
    if (!out_dir.empty()) export_atlas(atlas, out_dir, force);
    if (failed == static_cast<int>(atlas.fibres.size())) return kExitConvergence;
    return (verified == solved) ? kExitOk : kExitVerification;
}

int run_overlap(const LabConfig& cfg, const std::string& out_path) {
    if (cfg.overlap_i_second_b.empty()) {
        std::cerr << "config has no overlap.i_second_b\n";
        return kExitParam;
    }
    OverlapConfig ocfg;
    ocfg.i_second_b = cfg.overlap_i_second_b;
    OverlapRecord rec = chart_overlap_compare(cfg.model(), cfg.grid_shape, cfg.solver, ocfg);
    std::cout << "overlap distance: " << rec.distance << " (unrefined " << rec.distance_unrefined
              << ", " << rec.matching_iterations << " matching iterations)\n";
    if (!out_path.empty()) {
        json j;
        j["distance"] = rec.distance;
        j["distance_unrefined"] = rec.distance_unrefined;
        j["matching_iterations"] = rec.matching_iterations;
        std::ofstream out(out_path);
        out << j.dump(2) << "\n";
    }
    return rec.distance <= 1e-6 ? kExitOk : kExitVerification;
}

int run_flow(const LabConfig& cfg, const std::string& kind, int steps,
             const std::string& trace_path) {
    LocalModel model = cfg.model();
    Flows flows(model, steps > 0 ? steps : cfg.solver.flow_steps);
    FibreEmbedding emb = model_torus(model, cfg.grid_shape);
    FamilyParams fam = model.family();

    FlowTrace trace;
    const int samples = 11;
    std::vector<Vec> pts(emb.grid.size());
    for (std::size_t i = 0; i < emb.grid.size(); ++i) pts[i] = emb.points.row(i).transpose();
    for (int si = 0; si < samples; ++si) {
        double s0 = (si == 0) ? 0.0 : (si - 1) / double(samples - 1);
        double s1 = si / double(samples - 1);
        if (si > 0) {
            parallel_for(
                pts.size(),
                [&](std::size_t i) {
                    if (kind == "varphi")
                        flows.varphi(pts[i], s0, s1);
                    else
                        flows.phi(pts[i], s0, s1);
                },
                cfg.solver.threads);
        }
        double resid = 0;
        fam.s = (kind == "varphi") ? 0.0 : s1;
        for (const auto& z : pts)
            resid = std::max(resid,
                             std::abs(hypersurface_residual(z, fam, model.p(), model.part())));
        trace.s_samples.push_back(s1);
        trace.residual_max.push_back(resid);
    }
    std::cout << "flow " << kind << ": terminal residual " << trace.residual_max.back() << "\n";
    if (!trace_path.empty()) {
        json j;
        j["kind"] = kind;
        j["s"] = trace.s_samples;
        j["residual_max"] = trace.residual_max;
        std::ofstream out(trace_path);
        out << j.dump(2) << "\n";
    }
    return kExitOk;
}

int run_tbound(const LabConfig& cfg, const std::string& out_path) {
    // envelope constants of the omega_check metric and the chart Jacobian
    // across a t-sequence, written as CSV
    std::ostringstream csv;
    csv << "t,metric_diag,metric_toric,metric_strong,jac_envelope\n";
    for (double t : {1e-2, 1e-3, 1e-4}) {
        LabConfig c2 = cfg;
        c2.family.t = t;
        LocalModel model = c2.model();
        DarbouxChart chart(model);
        FibreEmbedding emb = model_torus(model, {8, 8});
        const auto& part = model.part();
        const int n = part.n();
        double diag_e = 0, toric_e = 0, strong_e = 0, jac_e = 0;
        std::vector<int> I, J;
        for (int k = 1; k <= part.l(); ++k) {
            I.push_back(k - 1);
            J.push_back(k - 1);
        }
        for (std::size_t i = 0; i < emb.grid.size(); i += 3) {
            Vec z = emb.points.row(i).transpose();
            // metric matrix of omega_check on Y_t in the z_1..z_n frame
            Mat H = model.model_potential().hessian(z) - mu_hessian(model, z);
            Vec G = defining_gradient(z, 0.0, model.family().t, model.p(), model.part());
            Mat lift(n + 1, n);
            lift.setZero();
            for (int m = 1; m <= n; ++m) {
                lift(m, m - 1) = 1.0;
                lift(0, m - 1) = -(z[0] * G[m]) / (z[m] * G[0]);
            }
            Mat Gm = lift.adjoint() * H * lift;
            Vec zn = z.tail(n);
            TBoundReport rep = strong_tbound_decompose(Gm, zn, std::abs(z[0]), I, J);
            diag_e = std::max(diag_e, rep.diag_envelope);
            toric_e = std::max(toric_e, rep.toric_envelope);
            strong_e = std::max(strong_e, rep.strong_correction_norm);
            DarbouxBlocks B = chart.jacobian(z);
            for (int jj = 1; jj <= n; ++jj)
                for (int kk = 1; kk <= n; ++kk)
                    jac_e = std::max(jac_e, std::abs(B.y_u(jj - 1, kk - 1)) /
                                                std::min(std::norm(z[jj]), std::norm(z[kk])));
        }
        csv << t << "," << diag_e << "," << toric_e << "," << strong_e << "," << jac_e << "\n";
    }
    std::cout << csv.str();
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << csv.str();
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"slagfib: generalized special Lagrangian torus fibre laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    int threads = 0;
    unsigned seed = 0;
    bool force = false;
    app.add_option("--config", config_path, "configuration file (JSON)")->required();
    app.add_option("--out", out_path, "output path (file or directory)");
    app.add_option("--threads", threads, "worker threads (0 = hardware)");
    app.add_option("--seed", seed, "seed for randomized diagnostics");
    app.add_flag("--force", force, "overwrite existing outputs");

    auto* mc = app.add_subcommand("model-check", "build the model torus and verify it");
    auto* sf = app.add_subcommand("solve-fibre", "run the Newton continuation for one fibre");
    double tol = -1;
    int grid_n = 0;
    bool dump_chart = false;
    sf->add_option("--tol", tol, "terminal Newton tolerance");
    sf->add_option("--grid", grid_n, "grid size per axis");
    sf->add_flag("--dump-chart", dump_chart, "include chart calibration in the output");
    std::vector<double> r_opt, c_opt;
    sf->add_option("--r", r_opt, "fibre radii r_j (I' order)");
    sf->add_option("--c", c_opt, "fibre constants c_k (I'' order)");
    auto* sw = app.add_subcommand("sweep", "solve a parameter grid into an atlas");
    auto* ov = app.add_subcommand("overlap-check", "cross-chart coincidence check");
    auto* fl = app.add_subcommand("flow", "integrate one deformation flow over the model torus");
    std::string kind = "varphi";
    int steps = 0;
    std::string trace_path;
    fl->add_option("--kind", kind, "varphi|phi")->check(CLI::IsMember({"varphi", "phi"}));
    fl->add_option("--steps", steps, "integrator steps per unit s");
    fl->add_option("--dump-trace", trace_path, "write the flow trace JSON here");
    auto* dg = app.add_subcommand("diagnostics", "numerical diagnostics");
    auto* tb = dg->add_subcommand("tbound", "T-boundedness envelope constants vs t");
    dg->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        LabConfig cfg = load_config(config_path);
        if (threads > 0) cfg.solver.threads = threads;
        if (grid_n > 0) cfg.grid_shape.assign(cfg.n, grid_n);
        if (!r_opt.empty()) cfg.params.r = r_opt;
        if (!c_opt.empty()) cfg.params.c = c_opt;

        if (mc->parsed()) return run_model_check(cfg, out_path);
        if (sf->parsed()) return run_solve_fibre(cfg, out_path, tol, dump_chart);
        if (sw->parsed()) return run_sweep(cfg, out_path, force);
        if (ov->parsed()) return run_overlap(cfg, out_path);
        if (fl->parsed()) return run_flow(cfg, kind, steps, trace_path);
        if (dg->parsed() && tb->parsed()) return run_tbound(cfg, out_path);
        std::cerr << "no subcommand\n";
        return kExitParam;
    } catch (const parameter_error& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return kExitParam;
    } catch (const continuation_error& e) {
        std::cerr << "convergence failure: " << e.what()
                  << " (last converged s = " << e.last_converged_s << ")\n";
        return kExitConvergence;
    } catch (const convergence_error& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParam;
    }
}
