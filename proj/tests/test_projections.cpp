#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sthdg/projections.hpp"
#include "test_support.hpp"

using namespace sthdg;
using namespace sthdg::testing;

namespace {
struct Fixture {
    SpatialMesh mesh;
    FaceTopology topo;
    SlabContext ctx;
    Fixture(int n, int ks, int kt)
        : mesh(build_uniform_mesh(n)), topo(build_face_topology(mesh)),
          ctx(build_slab_context(mesh, topo, ks, kt)) {}
};
} // namespace

TEST_CASE("temporal projection: polynomial identity and mean value") {
    // g in P_kt is reproduced
    auto g = [](double t) { return 2.0 - t + 0.5 * t * t; };
    Eigen::VectorXd c = project_time(g, 0.3, 0.5, 2);
    ReferenceBasis tb = interval_basis(2);
    for (double s : {-0.9, -0.2, 0.44, 1.0}) {
        Eigen::MatrixXd pt(1, 1);
        pt(0, 0) = s;
        Eigen::MatrixXd V = tb.values(pt);
        double got = 0.0;
        for (int m = 0; m <= 2; ++m) got += c(m) * V(m, 0);
        double t = 0.3 + 0.5 * (s + 1) / 2;
        CHECK(got == doctest::Approx(g(t)).epsilon(1e-13));
    }
    // g(t) = t on (0,1), kt = 0: the projection is the mean 1/2
    Eigen::VectorXd c0 = project_time([](double t) { return t; }, 0.0, 1.0, 0);
    CHECK(c0(0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("dg time projection: endpoint match and orthogonality") {
    double t0 = 0.25, dt = 0.5;
    auto eta = [](double t) { return std::sin(3 * t) + 0.2 * t; };
    for (int kt : {0, 1, 2, 3}) {
        Eigen::VectorXd p = dg_time_projection(eta, t0, dt, kt);
        // left endpoint match (t_n^+ value)
        double at_start = 0.0;
        for (int m = 0; m <= kt; ++m) at_start += (m % 2 == 0 ? 1.0 : -1.0) * p(m);
        CHECK(at_start == doctest::Approx(eta(t0)).epsilon(1e-12));
        // orthogonality of eta - p against P_{kt-1}: Legendre coefficients agree
        if (kt >= 1) {
            Eigen::VectorXd full = project_time(eta, t0, dt, kt - 1);
            for (int m = 0; m < kt; ++m) CHECK(p(m) == doctest::Approx(full(m)).epsilon(1e-12));
        }
        // identity on P_kt
        auto poly = [kt](double t) { return std::pow(t, std::min(kt, 2)); };
        Eigen::VectorXd pp = dg_time_projection(poly, t0, dt, kt);
        Eigen::VectorXd direct = project_time(poly, t0, dt, kt);
        CHECK((pp - direct).cwiseAbs().maxCoeff() <= 1e-12);
    }
    // kt = 0 gives the constant eta(t_n)
    Eigen::VectorXd p0 = dg_time_projection(eta, t0, dt, 0);
    CHECK(p0(0) == doctest::Approx(eta(t0)).epsilon(1e-13));
}

TEST_CASE("dg time projection commutes with discrete time derivatives in duality") {
    // int (d_t u) (P eta) dt = int (d_t u) eta dt for d_t u in P_{kt-1}
    double t0 = 0.0, dt = 1.0;
    int kt = 2;
    auto eta = [](double t) { return std::cos(2 * t) + t; };
    Eigen::VectorXd p = dg_time_projection(eta, t0, dt, kt);
    ReferenceBasis tb = interval_basis(kt);
    QuadratureRule r = quadrature(Cell::interval, 30);
    Eigen::MatrixXd V = tb.values(r.points);
    auto rng = seeded_rng(4);
    Eigen::VectorXd q = random_vector(rng, kt);  // coefficients of a P_{kt-1} function
    double with_p = 0.0, with_eta = 0.0;
    for (int iq = 0; iq < r.weights.size(); ++iq) {
        double s = r.points(iq, 0);
        double t = t0 + dt * (s + 1) / 2;
        double qv = 0.0, pv = 0.0;
        for (int m = 0; m < kt; ++m) qv += q(m) * V(m, iq);
        for (int m = 0; m <= kt; ++m) pv += p(m) * V(m, iq);
        with_p += r.weights(iq) * dt / 2 * qv * pv;
        with_eta += r.weights(iq) * dt / 2 * qv * eta(t);
    }
    CHECK(with_p == doctest::Approx(with_eta).epsilon(1e-12));
}

TEST_CASE("element and facet projections: identity on discrete data") {
    Fixture fx(2, 2, 0);
    auto g = [](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(x.x() * x.x(), x.x() * x.y() - 1.0);
    };
    Eigen::VectorXd u = project_element(fx.ctx, g);
    // idempotent: re-project the evaluated projection
    auto geval = [&](const Eigen::Vector2d& x) {
        int K = locate_element(fx.ctx, x);
        return evaluate_velocity(fx.ctx, u, FieldRole::velocity_snapshot, K, x).value;
    };
    Eigen::VectorXd u2 = project_element(fx.ctx, geval);
    CHECK((u2 - u).cwiseAbs().maxCoeff() <= 1e-12);

    // constants are exact
    Eigen::VectorXd uc = project_element(fx.ctx, [](const Eigen::Vector2d&) {
        return Eigen::Vector2d(3.0, -1.0);
    });
    Eigen::Vector2d xc(0.3, 0.1);
    Eigen::Vector2d val =
        evaluate_velocity(fx.ctx, uc, FieldRole::velocity_snapshot, locate_element(fx.ctx, xc), xc).value;
    CHECK(val(0) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(val(1) == doctest::Approx(-1.0).epsilon(1e-13));

    // facet projection: polynomial traces exact on interior faces, zero on boundary
    Eigen::VectorXd ub = project_facet(fx.ctx, g);
    for (int f : fx.ctx.faces->interior) {
        const Face& face = fx.ctx.faces->faces[f];
        for (double sf : {0.25, 0.7}) {
            Eigen::Vector2d x = face_point(*fx.ctx.mesh, face, sf);
            Eigen::MatrixXd pt(1, 1);
            pt(0, 0) = sf;
            Eigen::MatrixXd Fv = fx.ctx.basis_f.values(pt);
            Eigen::Vector2d got = Eigen::Vector2d::Zero();
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < fx.ctx.space.nFv; ++i)
                    got(c) += ub((f * 2 + c) * fx.ctx.space.nFv + i) * Fv(i, 0);
            CHECK((got - g(x)).norm() <= 1e-12);
        }
    }
    for (int f : fx.ctx.faces->boundary)
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < fx.ctx.space.nFv; ++i) CHECK(ub((f * 2 + c) * fx.ctx.space.nFv + i) == 0.0);
}

TEST_CASE("div projection: fixes the subspace, pointwise conformity, idempotency") {
    Fixture fx(2, 2, 0);
    DivProjector div(fx.ctx);
    auto rng = seeded_rng(31);

    Eigen::VectorXd g = random_vector(rng, fx.ctx.space.spatial_u());
    Eigen::VectorXd w = div.project_field(g);
    ConformityResidual c = conformity_residual(fx.ctx, w);
    double scale = w.cwiseAbs().maxCoeff();
    CHECK(c.max_divergence <= 1e-10 * scale);
    CHECK(c.max_interior_normal_jump <= 1e-10 * scale);
    CHECK(c.max_boundary_normal_trace <= 1e-10 * scale);

    // already divergence-free input is reproduced
    Eigen::VectorXd w2 = div.project_field(w);
    CHECK((w2 - w).cwiseAbs().maxCoeff() <= 1e-11 * scale);

    // B' w = 0: the discrete divergence-free definition
    SparseMat B = div.b_spatial();
    Eigen::VectorXd bw = B.transpose() * w;
    CHECK(bw.cwiseAbs().maxCoeff() <= 1e-10 * scale);

    // projection stability in L2
    Eigen::VectorXd mass = mass_diagonal(fx.ctx);
    double in_norm = std::sqrt(g.dot(mass.cwiseProduct(g)));
    double out_norm = std::sqrt(w.dot(mass.cwiseProduct(w)));
    CHECK(out_norm <= in_norm * (1.0 + 1e-12));
}

TEST_CASE("tensor test function: discrete mode reproduction, div-free pairing, rejection") {
    Fixture fx(2, 2, 1);
    const SlabSpace& sp = fx.ctx.space;
    DivProjector div(fx.ctx);
    double t0 = 0.0, dt = 0.5;

    // eta = 1 with an already-discrete solenoidal psi is reproduced
    auto rng = seeded_rng(77);
    Eigen::VectorXd wdisc = div.project_field(random_vector(rng, sp.spatial_u()));
    SmoothMode mode;
    mode.eta = [](double) { return 1.0; };
    mode.eta_dt = [](double) { return 0.0; };
    mode.psi = [&](const Eigen::Vector2d& x) {
        int K = locate_element(fx.ctx, x);
        return evaluate_velocity(fx.ctx, wdisc, FieldRole::velocity_snapshot, K, x).value;
    };
    mode.grad_psi = [&](const Eigen::Vector2d& x) {
        int K = locate_element(fx.ctx, x);
        return evaluate_velocity(fx.ctx, wdisc, FieldRole::velocity_snapshot, K, x).grad;
    };
    TensorTestFunction phi = build_tensor_test_function(fx.ctx, div, t0, dt, {mode});
    for (int i = 0; i < sp.spatial_u(); ++i) {
        CHECK(phi.pair(i * sp.nT) == doctest::Approx(wdisc(i)).epsilon(1e-10));
        for (int m = 1; m < sp.nT; ++m) CHECK(std::abs(phi.pair(i * sp.nT + m)) <= 1e-10);
    }

    // bump mode: element part annihilates the pressure coupling
    TensorTestFunction bump = build_tensor_test_function(fx.ctx, div, t0, dt, {bump_mode(1.0)});
    SparseMat B = div.b_spatial();
    double worst = 0.0;
    for (int m = 0; m < sp.nT; ++m) {
        Eigen::VectorXd um = mode_snapshot(sp, Eigen::VectorXd(bump.pair.head(
                                                  static_cast<long>(sp.spatial_u()) * sp.nT)),
                                           m);
        worst = std::max(worst, (B.transpose() * um).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-10);

    // non-solenoidal spatial factor is rejected
    CHECK_THROWS_AS(build_tensor_test_function(fx.ctx, div, t0, dt, {broken_mode(1.0)}), DataError);
}

TEST_CASE("projections are idempotent") {
    Fixture fx(2, 1, 1);
    DivProjector div(fx.ctx);
    Eigen::VectorXd w = div.project(bump_mode(1.0).psi);
    Eigen::VectorXd ww = div.project_field(w);
    CHECK((ww - w).cwiseAbs().maxCoeff() <= 1e-12 * (w.cwiseAbs().maxCoeff() + 1.0));

    auto eta = [](double t) { return std::exp(t); };
    Eigen::VectorXd c1 = project_time(eta, 0.0, 1.0, 2);
    ReferenceBasis tb = interval_basis(2);
    auto eval_c1 = [&](double t) {
        Eigen::MatrixXd pt(1, 1);
        pt(0, 0) = 2 * t - 1;
        Eigen::MatrixXd V = tb.values(pt);
        double v = 0.0;
        for (int m = 0; m <= 2; ++m) v += c1(m) * V(m, 0);
        return v;
    };
    Eigen::VectorXd c2 = project_time(eval_c1, 0.0, 1.0, 2);
    CHECK((c2 - c1).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("temporal projection sup-norm rate over tau halvings") {
    auto g = [](double t) { return std::sin(3.0 * t + 0.4); };
    for (int kt : {0, 1, 2}) {
        std::vector<double> taus, errs;
        ReferenceBasis tb = interval_basis(kt);
        for (int lvl = 0; lvl < 4; ++lvl) {
            double tau = 1.0 / (8 << lvl);
            Eigen::VectorXd c = project_time(g, 0.0, tau, kt);
            double worst = 0.0;
            for (int s = 0; s < 200; ++s) {
                double sc = -1.0 + 2.0 * (s + 0.5) / 200.0;
                Eigen::MatrixXd pt(1, 1);
                pt(0, 0) = sc;
                Eigen::MatrixXd V = tb.values(pt);
                double pv = 0.0;
                for (int m = 0; m <= kt; ++m) pv += c(m) * V(m, 0);
                worst = std::max(worst, std::abs(pv - g(tau * (sc + 1.0) / 2.0)));
            }
            taus.push_back(tau);
            errs.push_back(worst);
        }
        double order = 0.0;
        {
            // least-squares slope in log-log
            double mx = 0, my = 0;
            for (int i = 0; i < 4; ++i) {
                mx += std::log(taus[i]);
                my += std::log(errs[i]);
            }
            mx /= 4;
            my /= 4;
            double num = 0, den = 0;
            for (int i = 0; i < 4; ++i) {
                num += (std::log(taus[i]) - mx) * (std::log(errs[i]) - my);
                den += (std::log(taus[i]) - mx) * (std::log(taus[i]) - mx);
            }
            order = num / den;
        }
        CHECK(std::abs(order - (kt + 1)) <= 0.2);
    }
}
