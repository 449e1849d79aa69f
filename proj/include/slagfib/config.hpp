#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "slagfib/fibration.hpp"
#include "slagfib/model.hpp"
#include "slagfib/solver.hpp"

namespace slagfib {

/// Configuration file schema (JSON): chart data (n, partition, potential and
/// defining-polynomial terms), family parameters, fibre parameters, grid
/// sizes, tolerances, region constants, sweep offsets and overlap setup.
struct LabConfig {
    int n = 2;
    std::vector<int> i_second{0, 1};
    ToricPotential pot;
    DefiningPolynomial p;
    FamilyParams family;
    ModelParams params;
    std::vector<int> grid_shape{16, 16};
    SolverConfig solver;
    RegionConstants region;
    VerificationThresholds thresholds;
    std::vector<std::vector<double>> sweep_deltas;
    std::vector<int> overlap_i_second_b;
    double tangent_delta = 0.05;

    PartitionedIndex partition() const { return PartitionedIndex(n, i_second); }
    LocalModel model() const {
        return LocalModel(partition(), pot, p, family, params);
    }
};

inline LabConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parameter_error("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;

    LabConfig cfg;
    cfg.n = j.at("n").get<int>();
    cfg.i_second = j.at("i_second").get<std::vector<int>>();

    ToricPotential::Terms pt;
    for (const auto& term : j.at("potential")) {
        auto powers = term.at("powers").get<std::vector<int>>();
        if (static_cast<int>(powers.size()) != cfg.n + 1)
            throw parameter_error("config: potential powers must have n+1 entries");
        pt[powers] += term.at("coeff").get<double>();
    }
    cfg.pot = ToricPotential(cfg.n + 1, std::move(pt));

    DefiningPolynomial::Terms dt;
    for (const auto& term : j.at("p")) {
        auto expo = term.at("exponents").get<std::vector<int>>();
        if (static_cast<int>(expo.size()) != cfg.n + 1)
            throw parameter_error("config: p exponents must have n+1 entries");
        dt[expo] += cplx(term.value("re", 0.0), term.value("im", 0.0));
    }
    cfg.p = DefiningPolynomial(cfg.n + 1, std::move(dt));

    cfg.family.t = j.at("t").get<double>();
    cfg.family.tau = j.value("tau", 0.1);
    cfg.params.r = j.at("r").get<std::vector<double>>();
    cfg.params.c = j.at("c").get<std::vector<double>>();

    if (j.contains("grid")) {
        if (j["grid"].is_array())
            cfg.grid_shape = j["grid"].get<std::vector<int>>();
        else
            cfg.grid_shape.assign(cfg.n, j["grid"].get<int>());
    }
    cfg.solver.flow_steps = j.value("flow_steps", 64);
    cfg.solver.newton_tol = j.value("newton_tol", 1e-9);
    cfg.solver.max_newton_iters = j.value("max_newton_iters", 8);
    cfg.solver.s_steps = j.value("s_steps", 11);
    cfg.solver.threads = j.value("threads", 0);

    if (j.contains("region")) {
        const auto& r = j["region"];
        cfg.region.eps_max = r.value("eps_max", cfg.region.eps_max);
        cfg.region.C = r.value("C", cfg.region.C);
        cfg.region.C2 = r.value("C2", cfg.region.C2);
        cfg.region.C3 = r.value("C3", cfg.region.C3);
        cfg.region.C4 = r.value("C4", cfg.region.C4);
    }
    if (j.contains("thresholds")) {
        const auto& t = j["thresholds"];
        cfg.thresholds.phase = t.value("phase", cfg.thresholds.phase);
        cfg.thresholds.lagrangian = t.value("lagrangian", cfg.thresholds.lagrangian);
        cfg.thresholds.min_diag = t.value("min_diag", cfg.thresholds.min_diag);
    }
    if (j.contains("sweep"))
        cfg.sweep_deltas = j["sweep"].at("deltas").get<std::vector<std::vector<double>>>();
    if (j.contains("overlap")) {
        cfg.overlap_i_second_b = j["overlap"].at("i_second_b").get<std::vector<int>>();
    }
    cfg.tangent_delta = j.value("tangent_delta", 0.05);
    return cfg;
}

}  // namespace slagfib
