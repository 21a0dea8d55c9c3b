#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

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

TEST_CASE("temporal theta matrix: closed form and quadratic identity") {
    for (int kt = 0; kt <= 3; ++kt) {
        Eigen::MatrixXd theta = time_theta_matrix(kt);
        // closed form: 1 - 2 [m < r and r - m odd]
        for (int r = 0; r <= kt; ++r)
            for (int m = 0; m <= kt; ++m) {
                double expect = (m < r && (r - m) % 2 == 1) ? -1.0 : 1.0;
                CHECK(theta(r, m) == doctest::Approx(expect).epsilon(1e-13));
            }
        // c' theta c = 1/2 v(1)^2 + 1/2 v(-1)^2 (integration by parts on one slab)
        auto rng = seeded_rng(kt + 1);
        for (int rep = 0; rep < 20; ++rep) {
            Eigen::VectorXd c = random_vector(rng, kt + 1);
            double vp = 0.0, vm = 0.0;
            for (int m = 0; m <= kt; ++m) {
                vp += c(m);
                vm += (m % 2 == 0 ? 1.0 : -1.0) * c(m);
            }
            double qf = c.dot(theta * c);
            CHECK(qf == doctest::Approx(0.5 * vp * vp + 0.5 * vm * vm).epsilon(1e-12));
        }
    }
}

TEST_CASE("a_h: symmetry, zero argument, affine conforming pair") {
    Fixture fx(2, 2, 0);
    double alpha = 8.0 * 2 * 2;
    SparseMat A = assemble_a_spatial(fx.ctx, alpha);
    // symmetry
    SparseMat D = SparseMat(A.transpose()) - A;
    double scale = 0.0;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMat::InnerIterator it(A, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
    double asym = 0.0;
    for (int k = 0; k < D.outerSize(); ++k)
        for (SparseMat::InnerIterator it(D, k); it; ++it) asym = std::max(asym, std::abs(it.value()));
    CHECK(asym <= 1e-12 * scale);

    // zero argument
    Eigen::VectorXd zu = Eigen::VectorXd::Zero(fx.ctx.space.spatial_u());
    Eigen::VectorXd zb = Eigen::VectorXd::Zero(fx.ctx.space.spatial_ubar());
    auto rng = seeded_rng(2);
    Eigen::VectorXd ru, rb;
    random_pair_snapshot(fx.ctx, rng, ru, rb);
    CHECK(std::abs(pair_quadratic(fx.ctx.space, A, zu, zb, ru, rb)) == 0.0);

    // u = (x, -y), ubar = trace u: facet terms vanish, value = int |grad u|^2 = 2
    auto g = [](const Eigen::Vector2d& x) { return Eigen::Vector2d(x.x(), -x.y()); };
    Eigen::VectorXd u = fit_velocity_snapshot(fx.ctx, g);
    Eigen::VectorXd ub = fit_facet_snapshot(fx.ctx, g, true);
    CHECK(pair_quadratic(fx.ctx.space, A, u, ub, u, ub) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(alpha - 32.0) == 0.0);
}

TEST_CASE("a_h assembled matches the direct-quadrature oracle") {
    for (auto [n, ks] : {std::pair{2, 1}, std::pair{2, 2}, std::pair{1, 3}}) {
        Fixture fx(n, ks, 0);
        double alpha = 8.0 * ks * ks;
        SparseMat A = assemble_a_spatial(fx.ctx, alpha);
        auto rng = seeded_rng(100 + ks);
        for (int rep = 0; rep < 5; ++rep) {
            Eigen::VectorXd u, ub, v, vb;
            random_pair_snapshot(fx.ctx, rng, u, ub);
            random_pair_snapshot(fx.ctx, rng, v, vb);
            double assembled = pair_quadratic(fx.ctx.space, A, u, ub, v, vb);
            double direct = oracle_a_h(fx.ctx, alpha, u, ub, v, vb);
            CHECK(assembled == doctest::Approx(direct).epsilon(1e-11));
        }
    }
    CHECK_THROWS_AS(assemble_a_spatial(Fixture(1, 1, 0).ctx, 0.0), std::invalid_argument);
}

TEST_CASE("o_h: zero field gives zero block, oracle agreement") {
    Fixture fx(2, 2, 0);
    Eigen::VectorXd zero_w = Eigen::VectorXd::Zero(fx.ctx.space.spatial_u());
    SparseMat O0 = assemble_o_spatial(fx.ctx, zero_w);
    double onorm = 0.0;
    for (int k = 0; k < O0.outerSize(); ++k)
        for (SparseMat::InnerIterator it(O0, k); it; ++it) onorm = std::max(onorm, std::abs(it.value()));
    CHECK(onorm == 0.0);

    auto rng = seeded_rng(200);
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd w = random_vector(rng, fx.ctx.space.spatial_u());
        Eigen::VectorXd u, ub, v, vb;
        random_pair_snapshot(fx.ctx, rng, u, ub);
        random_pair_snapshot(fx.ctx, rng, v, vb);
        SparseMat O = assemble_o_spatial(fx.ctx, w);
        double assembled = pair_quadratic(fx.ctx.space, O, v, vb, u, ub);  // rows test, cols trial
        double direct = oracle_o_h(fx.ctx, w, u, ub, v, vb);
        CHECK(assembled == doctest::Approx(direct).epsilon(1e-11));
    }
}

TEST_CASE("b_h: zero pressure, oracle agreement") {
    Fixture fx(2, 2, 0);
    const SlabSpace& sp = fx.ctx.space;
    SparseMat B = assemble_b_spatial(fx.ctx);
    auto rng = seeded_rng(300);
    Eigen::VectorXd v = random_vector(rng, sp.spatial_u());
    Eigen::VectorXd zp = Eigen::VectorXd::Zero(sp.spatial_pres());
    CHECK(std::abs(v.dot(B * zp)) == 0.0);
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd p = random_vector(rng, sp.spatial_p());
        Eigen::VectorXd pbar = random_vector(rng, sp.spatial_pbar());
        Eigen::VectorXd vv = random_vector(rng, sp.spatial_u());
        Eigen::VectorXd full(sp.spatial_pres());
        full.head(p.size()) = p;
        full.tail(pbar.size()) = pbar;
        double assembled = vv.dot(B * full);
        double direct = oracle_b_h(fx.ctx, p, pbar, vv);
        CHECK(assembled == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("time terms: kt=0 mass reduction, zero data, quadratic identity") {
    Fixture fx(2, 1, 0);
    const SlabSpace& sp = fx.ctx.space;
    SparseMat Mt;
    Eigen::VectorXd rhs;
    Eigen::VectorXd zero_minus = Eigen::VectorXd::Zero(sp.spatial_u());
    auto zero_f = [](const Eigen::Vector2d&, double) { return Eigen::Vector2d::Zero().eval(); };
    assemble_time_terms(fx.ctx, 0.0, 0.25, zero_minus, zero_f, Mt, rhs);
    CHECK(rhs.norm() == 0.0);
    // kt = 0: Mt is the spatial mass matrix (diagonal det J)
    Eigen::VectorXd mass = mass_diagonal(fx.ctx);
    for (int i = 0; i < sp.spatial_u(); ++i) CHECK(Mt.coeff(i, i) == doctest::Approx(mass(i)).epsilon(1e-14));

    // quadratic identity for kt = 2: v' Mt v = 1/2||v(-1)||^2 + 1/2||v(+1)||^2
    Fixture fx2(2, 1, 2);
    const SlabSpace& sp2 = fx2.ctx.space;
    SparseMat Mt2;
    Eigen::VectorXd rhs2, zm2 = Eigen::VectorXd::Zero(sp2.spatial_u());
    assemble_time_terms(fx2.ctx, 0.0, 0.3, zm2, zero_f, Mt2, rhs2);
    auto rng = seeded_rng(42);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(sp2.total);
    Eigen::VectorXd uslab = random_vector(rng, static_cast<long>(sp2.spatial_u()) * sp2.nT);
    x.segment(sp2.off_u, uslab.size()) = uslab;
    double qf = x.dot(Mt2 * x);
    Eigen::VectorXd mass2 = mass_diagonal(fx2.ctx);
    Eigen::VectorXd tp = trace_snapshot(sp2, uslab, -1);
    Eigen::VectorXd tm = trace_snapshot(sp2, uslab, +1);
    double expect = 0.5 * tp.dot(mass2.cwiseProduct(tp)) + 0.5 * tm.dot(mass2.cwiseProduct(tm));
    CHECK(qf == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("slab system blocks: A symmetry and dimension consistency") {
    Fixture fx(2, 2, 1);
    const SlabSpace& sp = fx.ctx.space;
    SparseMat A_sp = assemble_a_spatial(fx.ctx, 32.0);
    SparseMat B_sp = assemble_b_spatial(fx.ctx);
    auto f = [](const Eigen::Vector2d& x, double t) {
        return Eigen::Vector2d(std::sin(t) * x.x(), x.y());
    };
    Eigen::VectorXd um = Eigen::VectorXd::Zero(sp.spatial_u());
    SlabSystem sys = assemble_slab_system(fx.ctx, 0.0, 0.25, um, f, 0.01, 32.0, A_sp, B_sp, nullptr);
    CHECK(sys.A.rows() == sp.total);
    CHECK(sys.rhs.size() == sp.total);
    SparseMat D = SparseMat(sys.A.transpose()) - sys.A;
    double asym = 0.0, scale = 0.0;
    for (int k = 0; k < sys.A.outerSize(); ++k)
        for (SparseMat::InnerIterator it(sys.A, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
    for (int k = 0; k < D.outerSize(); ++k)
        for (SparseMat::InnerIterator it(D, k); it; ++it) asym = std::max(asym, std::abs(it.value()));
    CHECK(asym <= 1e-12 * scale);
}

TEST_CASE("slab-integrated o block matches snapshot assembly for constant-in-time w") {
    Fixture fx(2, 1, 1);
    const SlabSpace& sp = fx.ctx.space;
    auto rng = seeded_rng(77);
    Eigen::VectorXd w_snap = random_vector(rng, sp.spatial_u());
    Eigen::VectorXd w_slab = Eigen::VectorXd::Zero(static_cast<long>(sp.spatial_u()) * sp.nT);
    for (int i = 0; i < sp.spatial_u(); ++i) w_slab(i * sp.nT) = w_snap(i);
    double dt = 0.4;
    SparseMat O_slab = assemble_o_slab(fx.ctx, dt, w_slab);
    SparseMat O_sp = assemble_o_spatial(fx.ctx, w_snap);
    // constant-in-time pair fields: int o dt = dt * o_spatial
    Eigen::VectorXd u, ub, v, vb;
    random_pair_snapshot(fx.ctx, rng, u, ub);
    random_pair_snapshot(fx.ctx, rng, v, vb);
    Eigen::VectorXd up = Eigen::VectorXd::Zero(sp.total), vp = Eigen::VectorXd::Zero(sp.total);
    for (int i = 0; i < sp.spatial_u(); ++i) {
        up(sp.off_u + i * sp.nT) = u(i);
        vp(sp.off_u + i * sp.nT) = v(i);
    }
    for (int i = 0; i < sp.spatial_ubar(); ++i) {
        up(sp.off_ubar + i * sp.nT) = ub(i);
        vp(sp.off_ubar + i * sp.nT) = vb(i);
    }
    double slab_val = vp.dot(O_slab * up);
    double snap_val = dt * pair_quadratic(sp, O_sp, v, vb, u, ub);
    CHECK(slab_val == doctest::Approx(snap_val).epsilon(1e-11));
}

TEST_CASE("convection assembly rejects fields from another slab") {
    Fixture fx(1, 1, 0);
    DiscreteField w = zero_field(fx.ctx.space, FieldRole::element_velocity, 3);
    CHECK_THROWS_AS(assemble_o_slab(fx.ctx, 0.5, w, 2), std::invalid_argument);
    DiscreteField wrong_role = zero_field(fx.ctx.space, FieldRole::facet_velocity, 2);
    CHECK_THROWS_AS(assemble_o_slab(fx.ctx, 0.5, wrong_role, 2), std::invalid_argument);
    SparseMat O = assemble_o_slab(fx.ctx, 0.5, w, 3);
    CHECK(O.rows() == fx.ctx.space.total);
}

TEST_CASE("coercivity sampled over 100 random pairs stays positive under refinement") {
    for (int ks : {1, 2}) {
        double prev_min = 0.0;
        for (int n : {2, 4}) {
            Fixture fx(n, ks, 0);
            double alpha = 8.0 * ks * ks;
            SparseMat A = assemble_a_spatial(fx.ctx, alpha);
            SparseMat Nv = assemble_vnorm_spatial(fx.ctx);
            auto rng = seeded_rng(1234 + n + ks);
            double cmin = std::numeric_limits<double>::infinity();
            for (int rep = 0; rep < 100; ++rep) {
                Eigen::VectorXd u, ub;
                random_pair_snapshot(fx.ctx, rng, u, ub);
                double a = pair_quadratic(fx.ctx.space, A, u, ub, u, ub);
                double nv = pair_quadratic(fx.ctx.space, Nv, u, ub, u, ub);
                cmin = std::min(cmin, a / nv);
            }
            CHECK(cmin > 0.0);
            if (prev_min > 0.0) CHECK(cmin >= 0.4 * prev_min);  // stable, not collapsing
            prev_min = cmin;
        }
    }
}
