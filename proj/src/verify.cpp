#include "sthdg/verify.hpp"

#include <cmath>
#include <random>

#include "sthdg/liftings.hpp"

namespace sthdg {

namespace {

Eigen::VectorXd random_uniform(std::mt19937_64& rng, long n) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) v(i) = unif(rng);
    return v;
}

void random_admissible_pair(const SlabContext& ctx, std::mt19937_64& rng, Eigen::VectorXd& u,
                            Eigen::VectorXd& ubar) {
    u = random_uniform(rng, ctx.space.spatial_u());
    ubar = random_uniform(rng, ctx.space.spatial_ubar());
    zero_boundary_facet_rows(ctx.space, ubar, false);
}

double quad_pair(const SlabSpace& sp, const SparseMat& M, const Eigen::VectorXd& u,
                 const Eigen::VectorXd& ub, const Eigen::VectorXd& v, const Eigen::VectorXd& vb) {
    Eigen::VectorXd a(sp.spatial_pair()), b(sp.spatial_pair());
    a.head(u.size()) = u;
    a.tail(ub.size()) = ub;
    b.head(v.size()) = v;
    b.tail(vb.size()) = vb;
    return a.dot(M * b);
}

/// Facet mismatch of one component from one side at an edge quadrature point.
double mismatch_at(const SlabContext& ctx, const Eigen::VectorXd& u, const Eigen::VectorXd& ub,
                   int f, bool left, int comp, int q) {
    const SlabSpace& sp = ctx.space;
    const Face& face = ctx.faces->faces[f];
    int K = left ? face.left : face.right;
    const Eigen::MatrixXd& val = left ? ctx.side_left[f].val : ctx.side_right[f].val;
    double v = 0.0;
    for (int i = 0; i < sp.nSv; ++i) v += u(sp.u_sp(K, comp, i)) * val(i, q);
    double vb = 0.0;
    for (int i = 0; i < sp.nFv; ++i) vb += ub((f * 2 + comp) * sp.nFv + i) * ctx.facet_val(i, q);
    return v - vb;
}

/// sum_K int_dK c(u-ubar).(v-vbar) with c = alpha/h_K (or 1/h_K for alpha<0).
double penalty_sum(const SlabContext& ctx, double alpha, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& ub, const Eigen::VectorXd& v, const Eigen::VectorXd& vb) {
    const SlabSpace& sp = ctx.space;
    double acc = 0.0;
    int nq = static_cast<int>(ctx.edge_rule.weights.size());
    for (int f = 0; f < sp.n_faces; ++f) {
        const Face& face = ctx.faces->faces[f];
        for (int s = 0; s < (face.boundary() ? 1 : 2); ++s) {
            int K = s == 0 ? face.left : face.right;
            double c = (alpha > 0 ? alpha : 1.0) / ctx.geo[K].hK;
            for (int q = 0; q < nq; ++q)
                for (int comp = 0; comp < 2; ++comp)
                    acc += ctx.edge_rule.weights(q) * face.length * c *
                           mismatch_at(ctx, u, ub, f, s == 0, comp, q) *
                           mismatch_at(ctx, v, vb, f, s == 0, comp, q);
        }
    }
    return acc;
}

/// w.n from one side at an edge quadrature point.
double wn_at(const SlabContext& ctx, const Eigen::VectorXd& w, int f, bool left, int q) {
    const SlabSpace& sp = ctx.space;
    const Face& face = ctx.faces->faces[f];
    int K = left ? face.left : face.right;
    const Eigen::MatrixXd& val = left ? ctx.side_left[f].val : ctx.side_right[f].val;
    Eigen::Vector2d n = left ? face.normal : Eigen::Vector2d(-face.normal);
    double acc = 0.0;
    for (int c = 0; c < 2; ++c) {
        double wc = 0.0;
        for (int i = 0; i < sp.nSv; ++i) wc += w(sp.u_sp(K, c, i)) * val(i, q);
        acc += wc * n(c);
    }
    return acc;
}

double rel(double diff, double a, double b) {
    double scale = std::max({std::abs(a), std::abs(b), 1e-30});
    return std::abs(diff) / scale;
}

} // namespace

double fitted_order(const std::vector<double>& h, const std::vector<double>& y) {
    double mx = 0.0, my = 0.0;
    int n = static_cast<int>(h.size());
    std::vector<double> lx(n), ly(n);
    for (int i = 0; i < n; ++i) {
        lx[i] = std::log(h[i]);
        ly[i] = std::log(std::max(y[i], 1e-300));
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    return num / den;
}

IdentityReport identity_suite(const SlabContext& ctx, uint64_t seed, int samples) {
    const SlabSpace& sp = ctx.space;
    IdentityReport rep;
    rep.samples = samples;
    rep.min_dissipation = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    double alpha = 8.0 * sp.ks * sp.ks;
    SparseMat A = assemble_a_spatial(ctx, alpha);
    DivProjector div(ctx);
    LiftingWorkspace ws1 = build_lifting_workspace(ctx, sp.ks);
    LiftingWorkspace ws2 = build_lifting_workspace(ctx, 2 * sp.ks);
    int nq2 = static_cast<int>(ws2.vol_rule.weights.size());
    int nqe = static_cast<int>(ctx.edge_rule.weights.size());

    for (int rep_i = 0; rep_i < samples; ++rep_i) {
        Eigen::VectorXd u, ub, v, vb;
        random_admissible_pair(ctx, rng, u, ub);
        random_admissible_pair(ctx, rng, v, vb);
        Eigen::VectorXd w = div.project_field(random_uniform(rng, sp.spatial_u()));

        // viscous form against its lifted rewriting
        double a1 = quad_pair(sp, A, u, ub, v, vb);
        double a2 = penalty_sum(ctx, alpha, u, ub, v, vb);
        for (int comp = 0; comp < 2; ++comp) {
            LiftedField Gu = discrete_gradient(ctx, ws1, u, ub, comp);
            LiftedField Gv = discrete_gradient(ctx, ws1, v, vb, comp);
            LiftedField Ru = spatial_lifting(ctx, ws1, u, ub, comp);
            LiftedField Rv = spatial_lifting(ctx, ws1, v, vb, comp);
            a2 += lifted_inner(ctx, Gu, Gv) - lifted_inner(ctx, Ru, Rv);
            rep.lifting_identity =
                std::max(rep.lifting_identity, lifting_identity_residual(ctx, ws1, Ru, u, ub, comp));
            LiftedField Ru2 = spatial_lifting(ctx, ws2, u, ub, comp);
            rep.lifting_identity =
                std::max(rep.lifting_identity, lifting_identity_residual(ctx, ws2, Ru2, u, ub, comp));
        }
        rep.visc_identity = std::max(rep.visc_identity, rel(a1 - a2, a1, a2));

        // convection form against its lifted rewriting (w discretely div-free)
        SparseMat O = assemble_o_spatial(ctx, w);
        double o1 = quad_pair(sp, O, v, vb, u, ub);
        double o2 = 0.0;
        for (int comp = 0; comp < 2; ++comp) {
            LiftedField Gu2 = discrete_gradient(ctx, ws2, u, ub, comp);
            for (int K = 0; K < sp.n_elems; ++K) {
                const ElementGeometry& g = ctx.geo[K];
                for (int q = 0; q < nq2; ++q) {
                    Eigen::Vector2d wval = Eigen::Vector2d::Zero();
                    double vval = 0.0, gdot = 0.0;
                    for (int i = 0; i < sp.nSv; ++i) {
                        for (int c = 0; c < 2; ++c)
                            wval(c) += w(sp.u_sp(K, c, i)) * ws2.tab_v.values(i, q);
                        vval += v(sp.u_sp(K, comp, i)) * ws2.tab_v.values(i, q);
                    }
                    for (int c = 0; c < 2; ++c) {
                        double Gc = 0.0;
                        for (int j = 0; j < ws2.nP; ++j)
                            Gc += Gu2.coeffs((static_cast<long>(K) * 2 + c) * ws2.nP + j) *
                                  ws2.tab.values(j, q);
                        gdot += wval(c) * Gc;
                    }
                    o2 += ws2.vol_rule.weights(q) * g.det * gdot * vval;
                }
            }
        }
        for (int f = 0; f < sp.n_faces; ++f) {
            const Face& face = ctx.faces->faces[f];
            for (int s = 0; s < (face.boundary() ? 1 : 2); ++s) {
                for (int q = 0; q < nqe; ++q) {
                    double wn = wn_at(ctx, w, f, s == 0, q);
                    double up = 0.5 * (wn + std::abs(wn));
                    for (int comp = 0; comp < 2; ++comp)
                        o2 += ctx.edge_rule.weights(q) * face.length * up *
                              mismatch_at(ctx, u, ub, f, s == 0, comp, q) *
                              mismatch_at(ctx, v, vb, f, s == 0, comp, q);
                }
            }
        }
        rep.conv_identity = std::max(rep.conv_identity, rel(o1 - o2, o1, o2));

        // dissipation identity at the diagonal
        double d1 = quad_pair(sp, O, v, vb, v, vb);
        double d2 = 0.0;
        for (int f = 0; f < sp.n_faces; ++f) {
            const Face& face = ctx.faces->faces[f];
            for (int s = 0; s < (face.boundary() ? 1 : 2); ++s)
                for (int q = 0; q < nqe; ++q) {
                    double wn = wn_at(ctx, w, f, s == 0, q);
                    for (int comp = 0; comp < 2; ++comp) {
                        double mu = mismatch_at(ctx, v, vb, f, s == 0, comp, q);
                        d2 += 0.5 * ctx.edge_rule.weights(q) * face.length * std::abs(wn) * mu * mu;
                    }
                }
        }
        rep.positivity_identity = std::max(rep.positivity_identity, rel(d1 - d2, d1, d2));
        rep.min_dissipation = std::min(rep.min_dissipation, d1);

        // time lifting defining identity (diagonal temporal mass)
        {
            Eigen::VectorXd u_slab = random_uniform(rng, static_cast<long>(sp.spatial_u()) * sp.nT);
            Eigen::VectorXd u_minus = random_uniform(rng, sp.spatial_u());
            double dt = 0.37;
            Eigen::VectorXd R = time_lifting(sp, u_slab, u_minus, dt);
            Eigen::VectorXd jump = trace_snapshot(sp, u_slab, -1) - u_minus;
            double worst = 0.0, scale = jump.cwiseAbs().maxCoeff() + 1e-30;
            for (int m = 0; m < sp.nT; ++m) {
                Eigen::VectorXd Rm = mode_snapshot(sp, R, m);
                double plus = m % 2 == 0 ? 1.0 : -1.0;
                worst = std::max(worst,
                                 (dt / (2.0 * m + 1.0) * Rm - plus * jump).cwiseAbs().maxCoeff());
            }
            rep.time_lifting_identity = std::max(rep.time_lifting_identity, worst / scale);
            rep.time_lifting_scaling = time_lifting_fitted_scaling(sp, u_slab, u_minus, dt) * dt / 2.0;
        }
    }

    // conforming pair short-circuit and gradient consistency (degree <= ks)
    {
        bool quad = sp.ks >= 2;
        auto g = [quad](const Eigen::Vector2d& x) {
            return quad ? Eigen::Vector2d(x.x() * x.y() + x.x(), x.y() - x.x() * x.x())
                        : Eigen::Vector2d(2.0 * x.x() - x.y(), x.x() + x.y());
        };
        auto grad_exact = [quad](const Eigen::Vector2d& x, int comp) {
            if (quad)
                return comp == 0 ? Eigen::Vector2d(x.y() + 1.0, x.x())
                                 : Eigen::Vector2d(-2.0 * x.x(), 1.0);
            return comp == 0 ? Eigen::Vector2d(2.0, -1.0) : Eigen::Vector2d(1.0, 1.0);
        };
        Eigen::VectorXd u = fit_velocity_snapshot(ctx, g);
        Eigen::VectorXd ub = fit_facet_snapshot(ctx, g, true);
        rep.conforming_facet_zero = std::abs(penalty_sum(ctx, -1.0, u, ub, u, ub));
        for (int comp = 0; comp < 2; ++comp) {
            LiftedField R = spatial_lifting(ctx, ws1, u, ub, comp);
            rep.conforming_facet_zero =
                std::max(rep.conforming_facet_zero, R.coeffs.cwiseAbs().maxCoeff());
            LiftedField G = discrete_gradient(ctx, ws1, u, ub, comp);
            int nq1 = static_cast<int>(ws1.vol_rule.weights.size());
            for (int K = 0; K < sp.n_elems; ++K) {
                for (int q = 0; q < nq1; q += 5) {
                    Eigen::Vector2d x =
                        ctx.geo[K].p0 + ctx.geo[K].J * ws1.vol_rule.points.row(q).transpose();
                    Eigen::Vector2d got = Eigen::Vector2d::Zero();
                    for (int c = 0; c < 2; ++c)
                        for (int j = 0; j < ws1.nP; ++j)
                            got(c) += G.coeffs((static_cast<long>(K) * 2 + c) * ws1.nP + j) *
                                      ws1.tab.values(j, q);
                    rep.gradient_consistency =
                        std::max(rep.gradient_consistency, (got - grad_exact(x, comp)).norm());
                }
            }
        }
    }
    return rep;
}

double min_coercivity_eigenvalue(const SlabContext& ctx, double alpha) {
    const SlabSpace& sp = ctx.space;
    SparseMat A = assemble_a_spatial(ctx, alpha);
    SparseMat Nv = assemble_vnorm_spatial(ctx);
    // free (admissible) pair dofs: everything but boundary facet rows
    std::vector<int> free;
    for (int i = 0; i < sp.spatial_u(); ++i) free.push_back(i);
    for (int f = 0; f < sp.n_faces; ++f)
        if (!sp.face_on_boundary[f])
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < sp.nFv; ++i) free.push_back(sp.ubar_sp(f, c, i));
    int nf = static_cast<int>(free.size());
    if (nf > 2500) throw CapabilityError("min_coercivity_eigenvalue: dense eigensolve capped at 2500 dofs");
    Eigen::MatrixXd Ad = Eigen::MatrixXd::Zero(nf, nf), Nd = Eigen::MatrixXd::Zero(nf, nf);
    std::vector<int> pos(sp.spatial_pair(), -1);
    for (int i = 0; i < nf; ++i) pos[free[i]] = i;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMat::InnerIterator it(A, k); it; ++it)
            if (pos[it.row()] >= 0 && pos[it.col()] >= 0) Ad(pos[it.row()], pos[it.col()]) += it.value();
    for (int k = 0; k < Nv.outerSize(); ++k)
        for (SparseMat::InnerIterator it(Nv, k); it; ++it)
            if (pos[it.row()] >= 0 && pos[it.col()] >= 0) Nd(pos[it.row()], pos[it.col()]) += it.value();
    Eigen::MatrixXd Asym = 0.5 * (Ad + Ad.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Asym, Nd);
    return es.eigenvalues().minCoeff();
}

std::vector<ConstantsLevel> constant_estimates(int base_n, int n_levels, int ks, int kt,
                                               uint64_t seed, int samples) {
    std::vector<ConstantsLevel> out;
    std::mt19937_64 rng(seed);
    for (int lvl = 0; lvl < n_levels; ++lvl) {
        int n = base_n << lvl;
        SpatialMesh mesh = build_uniform_mesh(n);
        FaceTopology topo = build_face_topology(mesh);
        SlabContext ctx = build_slab_context(mesh, topo, ks, kt);
        const SlabSpace& sp = ctx.space;
        ConstantsLevel lev;
        lev.n = n;
        lev.h = mesh_metrics(mesh, topo).h;
        double alpha = 8.0 * ks * ks;
        SparseMat A = assemble_a_spatial(ctx, alpha);
        SparseMat Nv = assemble_vnorm_spatial(ctx);
        SparseMat H1 = assemble_h1h_spatial(ctx);
        Eigen::VectorXd mass = mass_diagonal(ctx);
        LiftingWorkspace ws = build_lifting_workspace(ctx, ks);
        lev.coercivity = std::numeric_limits<double>::infinity();
        for (int s = 0; s < samples; ++s) {
            Eigen::VectorXd u, ub, v, vb;
            random_admissible_pair(ctx, rng, u, ub);
            random_admissible_pair(ctx, rng, v, vb);
            double nv_u = std::sqrt(std::max(quad_pair(sp, Nv, u, ub, u, ub), 1e-300));
            double nv_v = std::sqrt(std::max(quad_pair(sp, Nv, v, vb, v, vb), 1e-300));
            double l2 = std::sqrt(u.dot(mass.cwiseProduct(u)));
            double h1 = std::sqrt(std::max(u.dot(H1 * u), 0.0));
            lev.poincare = std::max(lev.poincare, l2 / nv_u);
            lev.h1_vs_v = std::max(lev.h1_vs_v, h1 / nv_u);
            lev.coercivity = std::min(lev.coercivity, quad_pair(sp, A, u, ub, u, ub) / (nv_u * nv_u));
            lev.boundedness =
                std::max(lev.boundedness, std::abs(quad_pair(sp, A, u, ub, v, vb)) / (nv_u * nv_v));
            SparseMat O = assemble_o_spatial(ctx, u);
            lev.convection_bound = std::max(
                lev.convection_bound, std::abs(quad_pair(sp, O, v, vb, u, ub)) / (l2 * nv_u * nv_v));
            for (int comp = 0; comp < 2; ++comp) {
                LiftedField R = spatial_lifting(ctx, ws, u, ub, comp);
                double mism = 0.0;
                int nqe = static_cast<int>(ctx.edge_rule.weights.size());
                for (int f = 0; f < sp.n_faces; ++f) {
                    const Face& face = ctx.faces->faces[f];
                    for (int side = 0; side < (face.boundary() ? 1 : 2); ++side) {
                        int K = side == 0 ? face.left : face.right;
                        for (int q = 0; q < nqe; ++q) {
                            double mu = mismatch_at(ctx, u, ub, f, side == 0, comp, q);
                            mism += ctx.edge_rule.weights(q) * face.length * mu * mu / ctx.geo[K].hK;
                        }
                    }
                }
                if (mism > 0)
                    lev.lifting_bound = std::max(lev.lifting_bound, lifted_inner(ctx, R, R) / mism);
            }
        }
        // dual-norm bound of the discrete time derivative, on a solved run
        {
            ManufacturedSolution tg = taylor_green(0.05);
            double T = 0.25;
            ProblemData data = problem_from_benchmark(tg, T);
            SolverConfig cfg;
            SpaceTimeLayout layout = uniform_layout(T, n);
            RunResult run = run_simulation(ctx, layout, data, cfg);
            if (run.completed) {
                DivProjector div(ctx);
                for (int s = 0; s < std::min(samples, 10); ++s) {
                    double num = 0.0, den = 0.0;
                    Eigen::VectorXd prev = run.initial_trace_snapshot;
                    for (int nsl = 0; nsl < layout.n_slabs(); ++nsl) {
                        double dt = layout.dt(nsl);
                        Eigen::VectorXd u_slab = run.states[nsl].element_velocity(sp);
                        Eigen::VectorXd Dt = discrete_time_derivative(sp, u_slab, prev, dt);
                        prev = run.states[nsl].outgoing_trace;
                        // random div-free test pair on this slab
                        Eigen::VectorXd vtest =
                            Eigen::VectorXd::Zero(static_cast<long>(sp.spatial_u()) * sp.nT);
                        for (int m = 0; m < sp.nT; ++m) {
                            Eigen::VectorXd wm = div.project_field(random_uniform(rng, sp.spatial_u()));
                            for (int i = 0; i < sp.spatial_u(); ++i) vtest(i * sp.nT + m) = wm(i);
                        }
                        Eigen::VectorXd vbar = random_uniform(rng, static_cast<long>(sp.spatial_ubar()) * sp.nT);
                        zero_boundary_facet_rows(sp, vbar, true);
                        for (int m = 0; m < sp.nT; ++m) {
                            Eigen::VectorXd Dm = mode_snapshot(sp, Dt, m);
                            Eigen::VectorXd vm = mode_snapshot(sp, vtest, m);
                            num += Dm.dot(mass.cwiseProduct(vm)) * dt / (2.0 * m + 1.0);
                        }
                        Eigen::VectorXd pairv(static_cast<long>(sp.spatial_pair()) * sp.nT);
                        pairv.head(vtest.size()) = vtest;
                        pairv.tail(vbar.size()) = vbar;
                        den += norm_v_slab_sq(ctx, dt, pairv);
                    }
                    lev.dual_bound = std::max(lev.dual_bound, std::abs(num) / std::sqrt(den));
                }
            }
        }
        out.push_back(lev);
    }
    return out;
}

namespace {

struct LevelBundle {
    std::unique_ptr<SpatialMesh> mesh;
    std::unique_ptr<FaceTopology> topo;
    std::unique_ptr<SlabContext> ctx;
    SpaceTimeLayout layout;
    RunResult run;
    int n = 0;
};

LevelBundle solve_level(const ManufacturedSolution& ms, int ks, int kt, double T, int n,
                        const SolverConfig& cfg) {
    LevelBundle b;
    b.n = n;
    b.mesh = std::make_unique<SpatialMesh>(build_uniform_mesh(n));
    b.topo = std::make_unique<FaceTopology>(build_face_topology(*b.mesh));
    b.ctx = std::make_unique<SlabContext>(build_slab_context(*b.mesh, *b.topo, ks, kt));
    b.layout = uniform_layout(T, n);
    ProblemData data = problem_from_benchmark(ms, T);
    b.run = run_simulation(*b.ctx, b.layout, data, cfg);
    if (!b.run.completed) throw ConfigError("refinement study: solver did not converge at n=" + std::to_string(n));
    return b;
}

/// Snapshot of the element velocity of a run at an arbitrary time.
Eigen::VectorXd snapshot_at_time(const SlabContext& ctx, const SpaceTimeLayout& layout,
                                 const RunResult& run, double t) {
    const SlabSpace& sp = ctx.space;
    int n = std::min(static_cast<int>((t - 0.0) / (layout.total_time() / layout.n_slabs())),
                     layout.n_slabs() - 1);
    while (n > 0 && t < layout.time_levels(n)) --n;
    while (n + 1 < layout.n_slabs() && t > layout.time_levels(n + 1)) ++n;
    double s = 2.0 * (t - layout.time_levels(n)) / layout.dt(n) - 1.0;
    Eigen::VectorXd tv = time_basis_values(sp.kt, s);
    Eigen::VectorXd u_slab = run.states[n].element_velocity(sp);
    Eigen::VectorXd snap = Eigen::VectorXd::Zero(sp.spatial_u());
    for (int i = 0; i < sp.spatial_u(); ++i)
        for (int m = 0; m < sp.nT; ++m) snap(i) += u_slab(i * sp.nT + m) * tv(m);
    return snap;
}

RefinementStudy refinement_study_impl(const ManufacturedSolution& ms, int ks, int kt, double T,
                                      int base_n, int levels, const SolverConfig& cfg,
                                      bool with_convergence, bool with_consistency) {
    RefinementStudy study;
    std::vector<LevelBundle> bundles;
    SmoothMode mode = bump_mode(T);
    QuadratureRule trule = quadrature(Cell::interval, 12);
    for (int lvl = 0; lvl < levels; ++lvl) {
        int n = base_n << lvl;
        bundles.push_back(solve_level(ms, ks, kt, T, n, cfg));
        LevelBundle& b = bundles.back();
        const SlabContext& ctx = *b.ctx;
        const SlabSpace& sp = ctx.space;
        StudyLevel lev;
        lev.n = n;
        lev.N = b.layout.n_slabs();
        lev.h = std::sqrt(2.0) / n;
        lev.tau = b.layout.tau();
        Eigen::MatrixXd tvals = interval_basis(kt).values(trule.points);
        int nq = static_cast<int>(ctx.vol_rule.weights.size());
        int nqe = static_cast<int>(ctx.edge_rule.weights.size());

        if (with_convergence) {
            double l2_sq = 0.0, tnorm_sq = 0.0;
            for (int nsl = 0; nsl < b.layout.n_slabs(); ++nsl) {
                double t0 = b.layout.time_levels(nsl), dt = b.layout.dt(nsl);
                Eigen::VectorXd u_slab = b.run.states[nsl].element_velocity(sp);
                Eigen::VectorXd ub_slab = b.run.states[nsl].velocity_pair(sp).tail(
                    static_cast<long>(sp.spatial_ubar()) * sp.nT);
                for (int tq = 0; tq < trule.weights.size(); ++tq) {
                    double t = t0 + dt * (trule.points(tq, 0) + 1.0) / 2.0;
                    double wt = trule.weights(tq) * dt / 2.0;
                    Eigen::VectorXd usnap = Eigen::VectorXd::Zero(sp.spatial_u());
                    Eigen::VectorXd bsnap = Eigen::VectorXd::Zero(sp.spatial_ubar());
                    for (int i = 0; i < sp.spatial_u(); ++i)
                        for (int m = 0; m < sp.nT; ++m) usnap(i) += u_slab(i * sp.nT + m) * tvals(m, tq);
                    for (int i = 0; i < sp.spatial_ubar(); ++i)
                        for (int m = 0; m < sp.nT; ++m) bsnap(i) += ub_slab(i * sp.nT + m) * tvals(m, tq);
                    for (int K = 0; K < sp.n_elems; ++K) {
                        const ElementGeometry& g = ctx.geo[K];
                        for (int q = 0; q < nq; ++q) {
                            Eigen::Vector2d x = g.p0 + g.J * ctx.vol_rule.points.row(q).transpose();
                            Eigen::Vector2d uh = Eigen::Vector2d::Zero();
                            Eigen::Matrix2d gh = Eigen::Matrix2d::Zero();
                            for (int c = 0; c < 2; ++c)
                                for (int i = 0; i < sp.nSv; ++i) {
                                    double coef = usnap(sp.u_sp(K, c, i));
                                    uh(c) += coef * ctx.tab_v.values(i, q);
                                    Eigen::Vector2d gr =
                                        g.Jinv.transpose() *
                                        Eigen::Vector2d(ctx.tab_v.grad_x(i, q), ctx.tab_v.grad_y(i, q));
                                    gh.row(c) += coef * gr.transpose();
                                }
                            double wq = ctx.vol_rule.weights(q) * g.det * wt;
                            l2_sq += wq * (ms.velocity(x, t) - uh).squaredNorm();
                            tnorm_sq += wq * (ms.velocity_grad(x, t) - gh).squaredNorm();
                        }
                    }
                    // the exact field has a continuous trace, so the error-pair
                    // mismatch equals the discrete mismatch
                    for (int f = 0; f < sp.n_faces; ++f) {
                        const Face& face = ctx.faces->faces[f];
                        for (int s = 0; s < (face.boundary() ? 1 : 2); ++s) {
                            int K = s == 0 ? face.left : face.right;
                            for (int q = 0; q < nqe; ++q)
                                for (int comp = 0; comp < 2; ++comp) {
                                    double mm = mismatch_at(ctx, usnap, bsnap, f, s == 0, comp, q);
                                    tnorm_sq += wt * ctx.edge_rule.weights(q) * face.length * mm * mm /
                                                ctx.geo[K].hK;
                                }
                        }
                    }
                }
            }
            lev.metrics["l2l2_error"] = std::sqrt(l2_sq);
            lev.metrics["tnorm_error"] = std::sqrt(tnorm_sq);

            if (lvl > 0) {
                const LevelBundle& coarse = bundles[lvl - 1];
                const SlabContext& cctx = *coarse.ctx;
                double inc_sq = 0.0;
                for (int nsl = 0; nsl < coarse.layout.n_slabs(); ++nsl) {
                    double t0 = coarse.layout.time_levels(nsl), dt = coarse.layout.dt(nsl);
                    for (int tq = 0; tq < trule.weights.size(); ++tq) {
                        double t = t0 + dt * (trule.points(tq, 0) + 1.0) / 2.0;
                        double wt = trule.weights(tq) * dt / 2.0;
                        Eigen::VectorXd snap_c = snapshot_at_time(cctx, coarse.layout, coarse.run, t);
                        Eigen::VectorXd snap_f = snapshot_at_time(ctx, b.layout, b.run, t);
                        for (int K = 0; K < cctx.space.n_elems; ++K) {
                            const ElementGeometry& g = cctx.geo[K];
                            for (int q = 0; q < cctx.vol_rule.weights.size(); ++q) {
                                Eigen::Vector2d x = g.p0 + g.J * cctx.vol_rule.points.row(q).transpose();
                                Eigen::Vector2d uc = Eigen::Vector2d::Zero();
                                for (int c = 0; c < 2; ++c)
                                    for (int i = 0; i < cctx.space.nSv; ++i)
                                        uc(c) += snap_c(cctx.space.u_sp(K, c, i)) * cctx.tab_v.values(i, q);
                                int Kf = locate_uniform(b.n, Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), x);
                                Eigen::Vector2d uf =
                                    evaluate_velocity(ctx, snap_f, FieldRole::velocity_snapshot, Kf, x).value;
                                inc_sq += wt * cctx.vol_rule.weights(q) * g.det * (uc - uf).squaredNorm();
                            }
                        }
                    }
                }
                lev.metrics["cauchy_increment"] = std::sqrt(inc_sq);
            }
        }

        if (with_consistency) {
            DivProjector div(ctx);
            double alpha = cfg.penalty(ks);
            SparseMat A_sp = assemble_a_spatial(ctx, alpha);
            double visc_acc = 0.0, conv_acc = 0.0, visc_exact = 0.0, conv_exact = 0.0;
            double visc_interp_acc = 0.0;
            for (int nsl = 0; nsl < b.layout.n_slabs(); ++nsl) {
                double t0 = b.layout.time_levels(nsl), dt = b.layout.dt(nsl);
                TensorTestFunction phi = build_tensor_test_function(ctx, div, t0, dt, {mode});
                Eigen::VectorXd uh_pair = b.run.states[nsl].velocity_pair(sp);
                visc_acc += pair_bilinear(sp, A_sp, dt, uh_pair, phi.pair);

                Eigen::VectorXd u_slab = b.run.states[nsl].element_velocity(sp);
                SparseMat O = assemble_o_slab(ctx, dt, u_slab);
                Eigen::VectorXd uh_full = Eigen::VectorXd::Zero(sp.total);
                uh_full.segment(sp.off_u, u_slab.size()) = u_slab;
                uh_full.segment(sp.off_ubar, static_cast<long>(sp.spatial_ubar()) * sp.nT) =
                    uh_pair.tail(static_cast<long>(sp.spatial_ubar()) * sp.nT);
                Eigen::VectorXd phi_full = Eigen::VectorXd::Zero(sp.total);
                phi_full.segment(sp.off_u, static_cast<long>(sp.spatial_u()) * sp.nT) =
                    phi.pair.head(static_cast<long>(sp.spatial_u()) * sp.nT);
                phi_full.segment(sp.off_ubar, static_cast<long>(sp.spatial_ubar()) * sp.nT) =
                    phi.pair.tail(static_cast<long>(sp.spatial_ubar()) * sp.nT);
                conv_acc += phi_full.dot(O * uh_full);

                // interpolated exact solution in place of u_h (viscous ablation)
                Eigen::VectorXd ui = fit_velocity_slab(ctx, t0, dt, ms.velocity);
                Eigen::VectorXd ubi = fit_facet_slab(ctx, t0, dt, ms.velocity);
                Eigen::VectorXd pair_i(static_cast<long>(sp.spatial_pair()) * sp.nT);
                pair_i.head(ui.size()) = ui;
                pair_i.tail(ubi.size()) = ubi;
                visc_interp_acc += pair_bilinear(sp, A_sp, dt, pair_i, phi.pair);

                for (int tq = 0; tq < trule.weights.size(); ++tq) {
                    double t = t0 + dt * (trule.points(tq, 0) + 1.0) / 2.0;
                    double wt = trule.weights(tq) * dt / 2.0;
                    double eta = mode.eta(t);
                    for (int K = 0; K < sp.n_elems; ++K) {
                        const ElementGeometry& g = ctx.geo[K];
                        for (int q = 0; q < ctx.vol_rule.weights.size(); ++q) {
                            Eigen::Vector2d x = g.p0 + g.J * ctx.vol_rule.points.row(q).transpose();
                            double wq = ctx.vol_rule.weights(q) * g.det * wt;
                            Eigen::Matrix2d gu = ms.velocity_grad(x, t);
                            Eigen::Matrix2d gphi = eta * mode.grad_psi(x);
                            visc_exact += wq * (gu.array() * gphi.array()).sum();
                            Eigen::Vector2d u = ms.velocity(x, t);
                            conv_exact += wq * (gu * u).dot(eta * mode.psi(x));
                        }
                    }
                }
            }
            lev.metrics["visc_residual"] = std::abs(visc_acc - visc_exact);
            lev.metrics["conv_residual"] = std::abs(conv_acc - conv_exact);
            lev.metrics["visc_residual_interp"] = std::abs(visc_interp_acc - visc_exact);
        }
        study.levels.push_back(std::move(lev));
    }

    std::vector<double> hs;
    for (const auto& lev : study.levels) hs.push_back(lev.h);
    auto fit = [&](const char* key) {
        std::vector<double> ys;
        for (const auto& lev : study.levels) ys.push_back(lev.metrics.at(key));
        study.orders[key] = fitted_order(hs, ys);
    };
    if (with_convergence) fit("l2l2_error");
    if (with_consistency) {
        fit("visc_residual");
        fit("conv_residual");
    }
    return study;
}

} // namespace

RefinementStudy convergence_study(const ManufacturedSolution& ms, int ks, int kt, double T,
                                  int base_n, int levels, const SolverConfig& cfg) {
    return refinement_study_impl(ms, ks, kt, T, base_n, levels, cfg, true, false);
}

RefinementStudy consistency_residuals(const ManufacturedSolution& ms, int ks, int kt, double T,
                                      int base_n, int levels, const SolverConfig& cfg) {
    return refinement_study_impl(ms, ks, kt, T, base_n, levels, cfg, false, true);
}

RefinementStudy joint_refinement_study(const ManufacturedSolution& ms, int ks, int kt, double T,
                                       int base_n, int levels, const SolverConfig& cfg) {
    return refinement_study_impl(ms, ks, kt, T, base_n, levels, cfg, true, true);
}

EnergyReport energy_inequality_report(const SlabContext& ctx, const SpaceTimeLayout& layout,
                                      const RunResult& run) {
    EnergyReport rep;
    rep.min_slack = std::numeric_limits<double>::infinity();
    if (run.ledger.empty()) return rep;
    double in0 = run.ledger.front().in_sq;
    double fcum = 0.0, gradcum = 0.0, visccum = 0.0, convcum = 0.0, jumpcum = 0.0;
    rep.monotone_decay = true;
    double prev = in0;
    double max_jump = 0.0, max_out = 0.0;
    for (const SlabLedger& led : run.ledger) {
        fcum += led.f2;
        gradcum += led.grad2;
        visccum += led.visc2;
        convcum += led.conv2;
        jumpcum += led.jump_sq;
        EnergyRow row;
        row.m = led.n;
        row.t = led.t_end;
        row.unorm_sq = led.out_sq;
        row.slack_lifted = in0 + fcum - led.out_sq - gradcum;
        row.slack_form = in0 + fcum - led.out_sq - visccum - convcum;
        row.cumulative_jump_sq = jumpcum;
        rep.rows.push_back(row);
        rep.min_slack = std::min(rep.min_slack, row.slack_lifted);
        double scale = std::abs(led.in_sq) + std::abs(led.f2) + std::abs(led.visc2) + 1e-30;
        rep.max_identity_residual = std::max(rep.max_identity_residual, std::abs(led.residual) / scale);
        if (led.out_sq > prev * (1.0 + 1e-12)) rep.monotone_decay = false;
        prev = led.out_sq;
        max_jump = std::max(max_jump, std::sqrt(led.jump_sq));
        max_out = std::max(max_out, std::sqrt(led.out_sq));
    }
    // sampled L-inf(L2) value and its trace-jump bound
    Eigen::VectorXd mass = mass_diagonal(ctx);
    for (int nsl = 0; nsl < layout.n_slabs(); ++nsl) {
        for (int s = 0; s < 20; ++s) {
            double t = layout.time_levels(nsl) + layout.dt(nsl) * (s + 0.5) / 20.0;
            Eigen::VectorXd snap = snapshot_at_time(ctx, layout, run, t);
            rep.linf_l2 = std::max(rep.linf_l2, std::sqrt(snap.dot(mass.cwiseProduct(snap))));
        }
    }
    rep.linf_l2_bound = max_out + max_jump + std::sqrt(in0);
    return rep;
}

std::vector<std::pair<double, double>> equicontinuity_probe(const SlabContext& ctx,
                                                            const SpaceTimeLayout& layout,
                                                            const RunResult& run) {
    std::vector<std::pair<double, double>> out;
    Eigen::VectorXd mass = mass_diagonal(ctx);
    double T = layout.total_time(), tau = layout.tau();
    for (double delta : {tau, 2 * tau, 4 * tau}) {
        if (delta >= T) continue;
        int nsamp = 160;
        double acc = 0.0;
        for (int s = 0; s < nsamp; ++s) {
            double t = delta + (T - delta) * (s + 0.5) / nsamp;
            Eigen::VectorXd a = snapshot_at_time(ctx, layout, run, t);
            Eigen::VectorXd b = snapshot_at_time(ctx, layout, run, t - delta);
            Eigen::VectorXd d = a - b;
            acc += (T - delta) / nsamp * d.dot(mass.cwiseProduct(d));
        }
        out.emplace_back(delta, acc);
    }
    return out;
}

RefinementStudy projection_rate_study(int ks, int kt, int base_n, int levels) {
    RefinementStudy study;
    SmoothMode mode = bump_mode(1.0);
    auto gtime = [](double t) { return std::sin(3.0 * t + 0.4); };
    for (int lvl = 0; lvl < levels; ++lvl) {
        int n = base_n << lvl;
        double tau = 1.0 / n;
        SpatialMesh mesh = build_uniform_mesh(n);
        FaceTopology topo = build_face_topology(mesh);
        SlabContext ctx = build_slab_context(mesh, topo, ks, kt);
        const SlabSpace& sp = ctx.space;
        StudyLevel lev;
        lev.n = n;
        lev.h = std::sqrt(2.0) / n;
        lev.tau = tau;

        // time projection in the sup norm over the slab (0, tau)
        {
            Eigen::VectorXd c = project_time(gtime, 0.0, tau, kt);
            ReferenceBasis tb = interval_basis(kt);
            double worst = 0.0;
            for (int s = 0; s < 200; ++s) {
                double sc = -1.0 + 2.0 * (s + 0.5) / 200.0;
                Eigen::MatrixXd pt(1, 1);
                pt(0, 0) = sc;
                Eigen::MatrixXd V = tb.values(pt);
                double pv = 0.0;
                for (int m = 0; m <= kt; ++m) pv += c(m) * V(m, 0);
                double t = tau * (sc + 1.0) / 2.0;
                worst = std::max(worst, std::abs(pv - gtime(t)));
            }
            lev.metrics["time_linf"] = worst;
        }

        // div projection of the smooth solenoidal bump
        DivProjector div(ctx);
        Eigen::VectorXd w = div.project(mode.psi);
        Eigen::VectorXd wbar = project_facet(ctx, mode.psi);
        Eigen::VectorXd welem = project_element(ctx, mode.psi);
        double l2_sq = 0.0, h1_sq = 0.0, linf = 0.0, gap_sq = 0.0, face_term_sq = 0.0;
        int nq = static_cast<int>(ctx.vol_rule.weights.size());
        for (int K = 0; K < sp.n_elems; ++K) {
            const ElementGeometry& g = ctx.geo[K];
            for (int q = 0; q < nq; ++q) {
                Eigen::Vector2d x = g.p0 + g.J * ctx.vol_rule.points.row(q).transpose();
                Eigen::Vector2d wh = Eigen::Vector2d::Zero();
                Eigen::Matrix2d gh = Eigen::Matrix2d::Zero();
                for (int c = 0; c < 2; ++c)
                    for (int i = 0; i < sp.nSv; ++i) {
                        double coef = w(sp.u_sp(K, c, i));
                        wh(c) += coef * ctx.tab_v.values(i, q);
                        Eigen::Vector2d gr = g.Jinv.transpose() *
                                             Eigen::Vector2d(ctx.tab_v.grad_x(i, q), ctx.tab_v.grad_y(i, q));
                        gh.row(c) += coef * gr.transpose();
                    }
                double wq = ctx.vol_rule.weights(q) * g.det;
                Eigen::Vector2d err = mode.psi(x) - wh;
                l2_sq += wq * err.squaredNorm();
                h1_sq += wq * (err.squaredNorm() + (mode.grad_psi(x) - gh).squaredNorm());
                linf = std::max(linf, err.cwiseAbs().maxCoeff());
            }
            // vertices for the sup norm
            for (int vtx = 0; vtx < 3; ++vtx) {
                Eigen::Vector2d x = ctx.mesh->vertices.row(ctx.mesh->triangles(K, vtx));
                Eigen::Vector2d ref = to_reference(g, x);
                Eigen::MatrixXd pt(1, 2);
                pt.row(0) = ref.transpose();
                Eigen::MatrixXd V = ctx.basis_v.values(pt);
                Eigen::Vector2d wh = Eigen::Vector2d::Zero();
                for (int c = 0; c < 2; ++c)
                    for (int i = 0; i < sp.nSv; ++i) wh(c) += w(sp.u_sp(K, c, i)) * V(i, 0);
                linf = std::max(linf, (mode.psi(x) - wh).cwiseAbs().maxCoeff());
            }
        }
        int nqe = static_cast<int>(ctx.edge_rule.weights.size());
        for (int f = 0; f < sp.n_faces; ++f) {
            const Face& face = ctx.faces->faces[f];
            for (int s = 0; s < (face.boundary() ? 1 : 2); ++s) {
                int K = s == 0 ? face.left : face.right;
                Eigen::Vector2d nrm = s == 0 ? face.normal : Eigen::Vector2d(-face.normal);
                for (int q = 0; q < nqe; ++q) {
                    Eigen::Vector2d x = face_point(*ctx.mesh, face, ctx.edge_rule.points(q, 0));
                    double w_gap = 0.0, fterm = 0.0;
                    for (int comp = 0; comp < 2; ++comp) {
                        double gap = mismatch_at(ctx, w, wbar, f, s == 0, comp, q);
                        w_gap += gap * gap;
                        // (psi - Pi_h psi).n for the element projection
                        double pe = 0.0;
                        const Eigen::MatrixXd& val = s == 0 ? ctx.side_left[f].val : ctx.side_right[f].val;
                        for (int i = 0; i < sp.nSv; ++i) pe += welem(sp.u_sp(K, comp, i)) * val(i, q);
                        fterm += (mode.psi(x)(comp) - pe) * nrm(comp);
                    }
                    gap_sq += ctx.edge_rule.weights(q) * face.length * w_gap / ctx.geo[K].hK;
                    face_term_sq += ctx.edge_rule.weights(q) * face.length * fterm * fterm;
                }
            }
        }
        lev.metrics["div_l2"] = std::sqrt(l2_sq);
        lev.metrics["div_h1"] = std::sqrt(h1_sq);
        lev.metrics["div_linf"] = linf;
        lev.metrics["facet_gap_sq"] = gap_sq;
        lev.metrics["face_term_sq"] = face_term_sq;
        study.levels.push_back(std::move(lev));
    }
    for (const char* key : {"div_l2", "div_h1", "div_linf", "facet_gap_sq", "face_term_sq"}) {
        std::vector<double> hs, ys;
        for (const auto& lev : study.levels) {
            hs.push_back(lev.h);
            ys.push_back(lev.metrics.at(key));
        }
        study.orders[key] = fitted_order(hs, ys);
    }
    {
        std::vector<double> taus, ys;
        for (const auto& lev : study.levels) {
            taus.push_back(lev.tau);
            ys.push_back(lev.metrics.at("time_linf"));
        }
        study.orders["time_linf"] = fitted_order(taus, ys);
    }
    return study;
}

RefinementStudy test_function_study(int ks, int kt, double T, int base_n, int levels) {
    RefinementStudy study;
    SmoothMode mode = bump_mode(T);
    for (int lvl = 0; lvl < levels; ++lvl) {
        int n = base_n << lvl;
        SpatialMesh mesh = build_uniform_mesh(n);
        FaceTopology topo = build_face_topology(mesh);
        SlabContext ctx = build_slab_context(mesh, topo, ks, kt);
        const SlabSpace& sp = ctx.space;
        SpaceTimeLayout layout = uniform_layout(T, n);
        DivProjector div(ctx);
        LiftingWorkspace ws = build_lifting_workspace(ctx, ks);
        double linf = 0.0, grad_sq = 0.0, num = 0.0, den = 0.0;
        for (int nsl = 0; nsl < layout.n_slabs(); ++nsl) {
            double t0 = layout.time_levels(nsl), dt = layout.dt(nsl);
            TensorTestFunction phi = build_tensor_test_function(ctx, div, t0, dt, {mode});
            Eigen::VectorXd u_slab = phi.pair.head(static_cast<long>(sp.spatial_u()) * sp.nT);
            Eigen::VectorXd ub_slab = phi.pair.tail(static_cast<long>(sp.spatial_ubar()) * sp.nT);
            // sup-norm error on a dense sample (quadrature points x 200 times)
            for (int s = 0; s < 200; ++s) {
                double t = t0 + dt * (s + 0.5) / 200.0;
                double sc = 2.0 * (t - t0) / dt - 1.0;
                Eigen::VectorXd tv = time_basis_values(kt, sc);
                Eigen::VectorXd snap = Eigen::VectorXd::Zero(sp.spatial_u());
                for (int i = 0; i < sp.spatial_u(); ++i)
                    for (int m = 0; m < sp.nT; ++m) snap(i) += u_slab(i * sp.nT + m) * tv(m);
                for (int K = 0; K < sp.n_elems; ++K) {
                    const ElementGeometry& g = ctx.geo[K];
                    for (int q = 0; q < ctx.vol_rule.weights.size(); ++q) {
                        Eigen::Vector2d x = g.p0 + g.J * ctx.vol_rule.points.row(q).transpose();
                        Eigen::Vector2d ph = Eigen::Vector2d::Zero();
                        for (int c = 0; c < 2; ++c)
                            for (int i = 0; i < sp.nSv; ++i)
                                ph(c) += snap(sp.u_sp(K, c, i)) * ctx.tab_v.values(i, q);
                        Eigen::Vector2d exact = mode.eta(t) * mode.psi(x);
                        linf = std::max(linf, (exact - ph).cwiseAbs().maxCoeff());
                    }
                }
            }
            // int || G(Pi phi) - grad phi ||^2 dt via temporal quadrature
            QuadratureRule tr = quadrature(Cell::interval, 2 * kt + 6);
            Eigen::MatrixXd tv = interval_basis(kt).values(tr.points);
            for (int tq = 0; tq < tr.weights.size(); ++tq) {
                double t = t0 + dt * (tr.points(tq, 0) + 1.0) / 2.0;
                double wt = tr.weights(tq) * dt / 2.0;
                Eigen::VectorXd snap = Eigen::VectorXd::Zero(sp.spatial_u());
                Eigen::VectorXd bsnap = Eigen::VectorXd::Zero(sp.spatial_ubar());
                for (int i = 0; i < sp.spatial_u(); ++i)
                    for (int m = 0; m < sp.nT; ++m) snap(i) += u_slab(i * sp.nT + m) * tv(m, tq);
                for (int i = 0; i < sp.spatial_ubar(); ++i)
                    for (int m = 0; m < sp.nT; ++m) bsnap(i) += ub_slab(i * sp.nT + m) * tv(m, tq);
                for (int comp = 0; comp < 2; ++comp) {
                    LiftedField G = discrete_gradient(ctx, ws, snap, bsnap, comp);
                    for (int K = 0; K < sp.n_elems; ++K) {
                        const ElementGeometry& g = ctx.geo[K];
                        for (int q = 0; q < ws.vol_rule.weights.size(); ++q) {
                            Eigen::Vector2d x = g.p0 + g.J * ws.vol_rule.points.row(q).transpose();
                            Eigen::Vector2d Gv = Eigen::Vector2d::Zero();
                            for (int c = 0; c < 2; ++c)
                                for (int j = 0; j < ws.nP; ++j)
                                    Gv(c) += G.coeffs((static_cast<long>(K) * 2 + c) * ws.nP + j) *
                                             ws.tab.values(j, q);
                            Eigen::Vector2d exact =
                                mode.eta(t) * mode.grad_psi(x).row(comp).transpose();
                            grad_sq += wt * ws.vol_rule.weights(q) * g.det * (Gv - exact).squaredNorm();
                        }
                    }
                }
            }
            // stability ratio of the projected pair
            num += norm_v_slab_sq(ctx, dt, phi.pair);
            for (int tq = 0; tq < tr.weights.size(); ++tq) {
                double t = t0 + dt * (tr.points(tq, 0) + 1.0) / 2.0;
                double wt = tr.weights(tq) * dt / 2.0;
                double eta = mode.eta(t);
                for (int K = 0; K < sp.n_elems; ++K) {
                    const ElementGeometry& g = ctx.geo[K];
                    for (int q = 0; q < ctx.vol_rule.weights.size(); ++q) {
                        Eigen::Vector2d x = g.p0 + g.J * ctx.vol_rule.points.row(q).transpose();
                        den += wt * ctx.vol_rule.weights(q) * g.det *
                               (eta * mode.grad_psi(x)).squaredNorm();
                    }
                }
            }
        }
        StudyLevel lev;
        lev.n = n;
        lev.N = layout.n_slabs();
        lev.h = std::sqrt(2.0) / n;
        lev.tau = layout.tau();
        lev.metrics["phi_linf_err"] = linf;
        lev.metrics["grad_l2_err"] = std::sqrt(grad_sq);
        lev.metrics["stability_ratio"] = num / den;
        study.levels.push_back(std::move(lev));
    }
    return study;
}

} // namespace sthdg
