#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sthdg/liftings.hpp"
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

/// Evaluate a lifted (element vector) field at a reference point of element K.
Eigen::Vector2d eval_lifted(const SlabContext& ctx, const LiftedField& F, int K,
                            const Eigen::Vector2d& ref) {
    ReferenceBasis b = simplex_basis(F.degree);
    Eigen::MatrixXd pt(1, 2);
    pt.row(0) = ref.transpose();
    Eigen::MatrixXd V = b.values(pt);
    Eigen::Vector2d out = Eigen::Vector2d::Zero();
    for (int c = 0; c < 2; ++c)
        for (int j = 0; j < b.dim; ++j) out(c) += F.coeffs((static_cast<long>(K) * 2 + c) * b.dim + j) * V(j, 0);
    return out;
}
} // namespace

TEST_CASE("conforming pair lifts to zero") {
    Fixture fx(2, 2, 0);
    auto g = [](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(x.x() * x.y(), x.x() - x.y() * x.y());
    };
    Eigen::VectorXd u = fit_velocity_snapshot(fx.ctx, g);
    Eigen::VectorXd ub = fit_facet_snapshot(fx.ctx, g, true);
    for (int k : {2, 4}) {
        LiftingWorkspace ws = build_lifting_workspace(fx.ctx, k);
        for (int comp = 0; comp < 2; ++comp) {
            LiftedField R = spatial_lifting(fx.ctx, ws, u, ub, comp);
            CHECK(R.coeffs.cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("defining identity residual is tiny for random mismatches") {
    for (auto [n, ks] : {std::pair{2, 1}, std::pair{2, 2}}) {
        Fixture fx(n, ks, 0);
        auto rng = seeded_rng(40 + ks);
        for (int k : {ks, 2 * ks}) {
            LiftingWorkspace ws = build_lifting_workspace(fx.ctx, k);
            for (int rep = 0; rep < 5; ++rep) {
                Eigen::VectorXd u, ub;
                random_pair_snapshot(fx.ctx, rng, u, ub);
                for (int comp = 0; comp < 2; ++comp) {
                    LiftedField R = spatial_lifting(fx.ctx, ws, u, ub, comp);
                    CHECK(lifting_identity_residual(fx.ctx, ws, R, u, ub, comp) <= 1e-12);
                }
            }
        }
    }
}

TEST_CASE("lifting bound: ||R||^2 bounded by the scaled mismatch norm") {
    // C stable under refinement
    double prevC = 0.0;
    for (int n : {2, 4, 8}) {
        Fixture fx(n, 1, 0);
        LiftingWorkspace ws = build_lifting_workspace(fx.ctx, 1);
        auto rng = seeded_rng(99);
        double maxC = 0.0;
        for (int rep = 0; rep < 25; ++rep) {
            Eigen::VectorXd u, ub;
            random_pair_snapshot(fx.ctx, rng, u, ub);
            for (int comp = 0; comp < 2; ++comp) {
                LiftedField R = spatial_lifting(fx.ctx, ws, u, ub, comp);
                double lhs = lifted_inner(fx.ctx, R, R);
                // sum_K h_K^{-1} ||v - vbar||^2_{dK} for this component
                double rhs = 0.0;
                int nqe = static_cast<int>(fx.ctx.edge_rule.weights.size());
                for (int f = 0; f < fx.ctx.space.n_faces; ++f) {
                    const Face& face = fx.ctx.faces->faces[f];
                    for (int s = 0; s < (face.boundary() ? 1 : 2); ++s) {
                        int K = s == 0 ? face.left : face.right;
                        for (int q = 0; q < nqe; ++q) {
                            SideEval e = side_eval(fx.ctx, u, ub, f, s == 0, q);
                            double mu = e.value[comp] - e.facet[comp];
                            rhs += fx.ctx.edge_rule.weights(q) * face.length * mu * mu / fx.ctx.geo[K].hK;
                        }
                    }
                }
                if (rhs > 0) maxC = std::max(maxC, lhs / rhs);
            }
        }
        if (prevC > 0) CHECK(maxC <= 1.5 * prevC + 1.0);
        prevC = std::max(prevC, maxC);
        CHECK(maxC > 0.0);
    }
}

TEST_CASE("discrete gradient: conforming pair and global polynomial consistency") {
    Fixture fx(2, 2, 0);
    auto g = [](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(x.x() * x.x() + x.y(), 2 * x.x() * x.y());
    };
    Eigen::Matrix2d gexact;  // row c = grad g_c at probe point
    Eigen::VectorXd u = fit_velocity_snapshot(fx.ctx, g);
    Eigen::VectorXd ub = fit_facet_snapshot(fx.ctx, g, true);
    LiftingWorkspace ws = build_lifting_workspace(fx.ctx, 2);
    Eigen::Vector2d ref(0.21, 0.33);
    for (int comp = 0; comp < 2; ++comp) {
        LiftedField G = discrete_gradient(fx.ctx, ws, u, ub, comp);
        for (int K : {0, 3, 5}) {
            Eigen::Vector2d x = fx.ctx.geo[K].p0 + fx.ctx.geo[K].J * ref;
            gexact << 2 * x.x(), 1, 2 * x.y(), 2 * x.x();
            Eigen::Vector2d got = eval_lifted(fx.ctx, G, K, ref);
            CHECK((got - gexact.row(comp).transpose()).norm() <= 1e-12);
        }
    }
}

TEST_CASE("discrete gradient defining identity against the full degree-k basis") {
    Fixture fx(2, 2, 0);
    auto rng = seeded_rng(123);
    for (int k : {2, 4}) {
        LiftingWorkspace ws = build_lifting_workspace(fx.ctx, k);
        Eigen::VectorXd u, ub;
        random_pair_snapshot(fx.ctx, rng, u, ub);
        for (int comp = 0; comp < 2; ++comp) {
            LiftedField G = discrete_gradient(fx.ctx, ws, u, ub, comp);
            // int G . w = int grad_h v . w - sum int_dK (v - vbar) w.n for all
            // basis fields w: coefficient identity per element
            const SlabSpace& sp = fx.ctx.space;
            double worst = 0.0, scale = 1e-300;
            // independent right-hand side: quadrature per element/test function
            int nq = static_cast<int>(ws.vol_rule.weights.size());
            int nqe = static_cast<int>(fx.ctx.edge_rule.weights.size());
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(G.coeffs.size());
            for (int K = 0; K < sp.n_elems; ++K) {
                const ElementGeometry& ge = fx.ctx.geo[K];
                for (int q = 0; q < nq; ++q) {
                    Eigen::Vector2d gr = Eigen::Vector2d::Zero();
                    for (int i = 0; i < sp.nSv; ++i) {
                        Eigen::Vector2d rgr =
                            ge.Jinv.transpose() *
                            Eigen::Vector2d(ws.tab_v.grad_x(i, q), ws.tab_v.grad_y(i, q));
                        gr += u(sp.u_sp(K, comp, i)) * rgr;
                    }
                    for (int c = 0; c < 2; ++c)
                        for (int j = 0; j < ws.nP; ++j)
                            rhs((static_cast<long>(K) * 2 + c) * ws.nP + j) +=
                                ws.vol_rule.weights(q) * ge.det * gr(c) * ws.tab.values(j, q);
                }
            }
            for (int f = 0; f < sp.n_faces; ++f) {
                const Face& face = fx.ctx.faces->faces[f];
                for (int s = 0; s < (face.boundary() ? 1 : 2); ++s) {
                    bool left = s == 0;
                    int K = left ? face.left : face.right;
                    Eigen::Vector2d nrm = left ? face.normal : Eigen::Vector2d(-face.normal);
                    const Eigen::MatrixXd& lval = ws.side[left ? f : ws.side_stride + f].val;
                    for (int q = 0; q < nqe; ++q) {
                        SideEval e = side_eval(fx.ctx, u, ub, f, left, q);
                        double mu = e.value[comp] - e.facet[comp];
                        double wq = fx.ctx.edge_rule.weights(q) * face.length;
                        for (int c = 0; c < 2; ++c)
                            for (int j = 0; j < ws.nP; ++j)
                                rhs((static_cast<long>(K) * 2 + c) * ws.nP + j) -=
                                    wq * mu * lval(j, q) * nrm(c);
                    }
                }
            }
            for (int K = 0; K < sp.n_elems; ++K)
                for (int c = 0; c < 2; ++c)
                    for (int j = 0; j < ws.nP; ++j) {
                        long idx = (static_cast<long>(K) * 2 + c) * ws.nP + j;
                        double lhs = fx.ctx.geo[K].det * G.coeffs(idx);
                        worst = std::max(worst, std::abs(lhs - rhs(idx)));
                        scale = std::max(scale, std::abs(rhs(idx)));
                    }
            CHECK(worst / scale <= 1e-11);
        }
    }
}

TEST_CASE("time lifting: zero jump, kt=0 closed form, defining identity") {
    for (int kt : {0, 1, 2}) {
        Fixture fx(2, 1, kt);
        const SlabSpace& sp = fx.ctx.space;
        auto rng = seeded_rng(500 + kt);
        double dt = 0.3;
        Eigen::VectorXd u_slab = random_vector(rng, static_cast<long>(sp.spatial_u()) * sp.nT);

        // zero jump: feed the slab's own start trace
        Eigen::VectorXd u_plus = trace_snapshot(sp, u_slab, -1);
        Eigen::VectorXd R0 = time_lifting(sp, u_slab, u_plus, dt);
        CHECK(R0.cwiseAbs().maxCoeff() <= 1e-13);

        Eigen::VectorXd u_minus = random_vector(rng, sp.spatial_u());
        Eigen::VectorXd R = time_lifting(sp, u_slab, u_minus, dt);
        Eigen::VectorXd jump = u_plus - u_minus;
        if (kt == 0) {
            CHECK((R - jump / dt).cwiseAbs().maxCoeff() <= 1e-13 * jump.cwiseAbs().maxCoeff() / dt);
        }
        // defining identity: int (R, v) dt = ([u], v_n^+) for every temporal mode
        Eigen::VectorXd mass = mass_diagonal(fx.ctx);
        for (int m = 0; m <= kt; ++m) {
            Eigen::VectorXd Rm = mode_snapshot(sp, R, m);
            double tmass = dt / (2.0 * m + 1.0);
            double plus_val = (m % 2 == 0 ? 1.0 : -1.0);
            // test v = phi_i L_m for all i: vector identity
            Eigen::VectorXd lhs = tmass * mass.cwiseProduct(Rm);
            Eigen::VectorXd rhs = plus_val * mass.cwiseProduct(jump);
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rhs.cwiseAbs().maxCoeff() + 1e-14);
        }
        CHECK(time_lifting_fitted_scaling(sp, u_slab, u_minus, dt) == doctest::Approx(2.0 / dt).epsilon(1e-12));
        CHECK_THROWS_AS(time_lifting(sp, u_slab, Eigen::VectorXd::Zero(3), dt), std::invalid_argument);
    }
}

TEST_CASE("discrete time derivative reduces to the broken derivative for continuous fields") {
    Fixture fx(2, 1, 2);
    const SlabSpace& sp = fx.ctx.space;
    auto rng = seeded_rng(7);
    double dt = 0.5;
    Eigen::VectorXd u_slab = random_vector(rng, static_cast<long>(sp.spatial_u()) * sp.nT);
    Eigen::VectorXd u_minus = trace_snapshot(sp, u_slab, -1);  // continuous across t_n
    Eigen::VectorXd Dt = discrete_time_derivative(sp, u_slab, u_minus, dt);
    Eigen::VectorXd Bt = broken_time_derivative(sp, u_slab, dt);
    CHECK((Dt - Bt).cwiseAbs().maxCoeff() <= 1e-13);

    // broken derivative against finite differences at a sample point
    Eigen::Vector2d x(0.4, 0.3);
    int K = locate_element(fx.ctx, x);
    double s = 0.17, eps = 1e-6;
    VelocityEval up = evaluate_velocity(fx.ctx, u_slab, FieldRole::element_velocity, K, x, s + eps, dt);
    VelocityEval dn = evaluate_velocity(fx.ctx, u_slab, FieldRole::element_velocity, K, x, s - eps, dt);
    VelocityEval dv = evaluate_velocity(fx.ctx, Bt, FieldRole::element_velocity, K, x, s, dt);
    Eigen::Vector2d fd = (up.value - dn.value) / (2 * eps) * (2.0 / dt);
    CHECK((fd - dv.value).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("discrete time derivative of a div-conforming field is div-conforming") {
    Fixture fx(2, 2, 1);
    const SlabSpace& sp = fx.ctx.space;
    DivProjector div(fx.ctx);
    auto rng = seeded_rng(88);
    double dt = 0.25;
    Eigen::VectorXd u_slab = Eigen::VectorXd::Zero(static_cast<long>(sp.spatial_u()) * sp.nT);
    for (int m = 0; m < sp.nT; ++m) {
        Eigen::VectorXd w = div.project_field(random_vector(rng, sp.spatial_u()));
        for (int i = 0; i < sp.spatial_u(); ++i) u_slab(i * sp.nT + m) = w(i);
    }
    Eigen::VectorXd u_minus = div.project_field(random_vector(rng, sp.spatial_u()));
    Eigen::VectorXd Dt = discrete_time_derivative(sp, u_slab, u_minus, dt);
    for (int m = 0; m < sp.nT; ++m) {
        ConformityResidual c = conformity_residual(fx.ctx, mode_snapshot(sp, Dt, m));
        double scale = mode_snapshot(sp, Dt, m).cwiseAbs().maxCoeff() + 1.0;
        CHECK(c.max_divergence <= 1e-10 * scale);
        CHECK(c.max_interior_normal_jump <= 1e-10 * scale);
        CHECK(c.max_boundary_normal_trace <= 1e-10 * scale);
    }
}

TEST_CASE("time integration by parts over slabs with a per-slab polynomial weight") {
    // kt = 2 and eta = t(T - t): eta is in P_kt on every slab, so the lifting
    // reproduces the endpoint values exactly and the telescoping closes.
    int kt = 2, N = 4;
    Fixture fx(2, 1, kt);
    const SlabSpace& sp = fx.ctx.space;
    double T = 1.0;
    SpaceTimeLayout layout = uniform_layout(T, N);
    auto rng = seeded_rng(17);
    Eigen::VectorXd mass = mass_diagonal(fx.ctx);
    Eigen::VectorXd v = random_vector(rng, sp.spatial_u());  // fixed spatial test field

    std::vector<Eigen::VectorXd> slabs;
    for (int n = 0; n < N; ++n)
        slabs.push_back(random_vector(rng, static_cast<long>(sp.spatial_u()) * sp.nT));
    Eigen::VectorXd u0 = random_vector(rng, sp.spatial_u());

    auto eta = [T](double t) { return t * (T - t); };
    auto eta_dt = [T](double t) { return T - 2 * t; };

    QuadratureRule tr = quadrature(Cell::interval, 2 * kt + 4);
    Eigen::MatrixXd tv = interval_basis(kt).values(tr.points);

    double lhs = 0.0, rhs = 0.0;
    Eigen::VectorXd prev = u0;
    for (int n = 0; n < N; ++n) {
        double t0 = layout.time_levels(n), dt = layout.dt(n);
        Eigen::VectorXd Dt = discrete_time_derivative(sp, slabs[n], prev, dt);
        for (int q = 0; q < tr.weights.size(); ++q) {
            double t = t0 + dt * (tr.points(q, 0) + 1.0) / 2.0;
            Eigen::VectorXd dsnap = Eigen::VectorXd::Zero(sp.spatial_u());
            Eigen::VectorXd usnap = Eigen::VectorXd::Zero(sp.spatial_u());
            for (int i = 0; i < sp.spatial_u(); ++i)
                for (int m = 0; m <= kt; ++m) {
                    dsnap(i) += Dt(i * sp.nT + m) * tv(m, q);
                    usnap(i) += slabs[n](i * sp.nT + m) * tv(m, q);
                }
            double w = tr.weights(q) * dt / 2.0;
            lhs += w * eta(t) * v.dot(mass.cwiseProduct(dsnap));
            rhs -= w * eta_dt(t) * v.dot(mass.cwiseProduct(usnap));
        }
        prev = trace_snapshot(sp, slabs[n], +1);
    }
    // telescoping endpoint terms vanish because eta(0) = eta(T) = 0
    double scale = std::abs(lhs) + std::abs(rhs) + 1.0;
    CHECK(std::abs(lhs - rhs) <= 1e-9 * scale);
}
