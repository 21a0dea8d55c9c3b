#include "sthdg/solver.hpp"

#include <cmath>

#include "sthdg/liftings.hpp"

namespace sthdg {

ProblemData problem_from_benchmark(const ManufacturedSolution& m, double T) {
    ProblemData d;
    d.nu = m.nu;
    d.f = m.force;
    d.u0 = m.initial;
    d.T = T;
    d.convection = m.convection;
    d.steady_discrete_start = m.steady_discrete_start;
    return d;
}

Eigen::VectorXd SlabState::velocity_pair(const SlabSpace& sp) const {
    Eigen::VectorXd pair(static_cast<long>(sp.spatial_pair()) * sp.nT);
    pair.head(static_cast<long>(sp.spatial_u()) * sp.nT) =
        solution.segment(sp.off_u, static_cast<long>(sp.spatial_u()) * sp.nT);
    pair.tail(static_cast<long>(sp.spatial_ubar()) * sp.nT) =
        solution.segment(sp.off_ubar, static_cast<long>(sp.spatial_ubar()) * sp.nT);
    return pair;
}

Eigen::VectorXd SlabState::element_velocity(const SlabSpace& sp) const {
    return solution.segment(sp.off_u, static_cast<long>(sp.spatial_u()) * sp.nT);
}

SlabOperators build_slab_operators(const SlabContext& ctx, double alpha) {
    SlabOperators ops;
    ops.A_sp = assemble_a_spatial(ctx, alpha);
    ops.B_sp = assemble_b_spatial(ctx);
    ops.Nv_sp = assemble_vnorm_spatial(ctx);
    return ops;
}

Eigen::VectorXd initial_trace(const SlabContext&, const DivProjector& div,
                              const ProblemData& data) {
    return div.project(data.u0);
}

Eigen::VectorXd solve_sparse(const SparseMat& K, const Eigen::VectorXd& rhs) {
    Eigen::SparseLU<SparseMat> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success) throw ConfigError("solve_sparse: singular linear system");
    return lu.solve(rhs);
}

Eigen::VectorXd solve_steady_stokes(const SlabContext& ctx, const SlabOperators& ops, double nu,
                                    const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& f) {
    const SlabSpace& sp = ctx.space;
    int n_pair = sp.spatial_pair(), n_pres = sp.spatial_pres();
    int total = n_pair + n_pres + 1;
    std::vector<Triplet> trip;
    for (int k = 0; k < ops.A_sp.outerSize(); ++k)
        for (SparseMat::InnerIterator it(ops.A_sp, k); it; ++it)
            trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), nu * it.value());
    for (int k = 0; k < ops.B_sp.outerSize(); ++k)
        for (SparseMat::InnerIterator it(ops.B_sp, k); it; ++it) {
            trip.emplace_back(static_cast<int>(it.row()), n_pair + static_cast<int>(it.col()), it.value());
            trip.emplace_back(n_pair + static_cast<int>(it.col()), static_cast<int>(it.row()), -it.value());
        }
    for (int K = 0; K < sp.n_elems; ++K) {
        double v = ctx.geo[K].det / std::sqrt(2.0);
        trip.emplace_back(n_pair + sp.p_sp(K, 0), total - 1, v);
        trip.emplace_back(total - 1, n_pair + sp.p_sp(K, 0), v);
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(total);
    Eigen::VectorXd moments = mass_diagonal(ctx).cwiseProduct(fit_velocity_snapshot(ctx, f));
    rhs.head(sp.spatial_u()) = moments;
    // boundary facet rows
    std::vector<uint8_t> constrained(total, 0);
    for (int fidx = 0; fidx < sp.n_faces; ++fidx)
        if (sp.face_on_boundary[fidx])
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < sp.nFv; ++i) constrained[sp.ubar_sp(fidx, c, i)] = 1;
    std::vector<Triplet> kept;
    kept.reserve(trip.size() + total);
    for (const auto& t : trip)
        if (!constrained[t.row()] && !constrained[t.col()]) kept.push_back(t);
    for (int d = 0; d < total; ++d)
        if (constrained[d]) {
            kept.emplace_back(d, d, 1.0);
            rhs(d) = 0.0;
        }
    SparseMat K(total, total);
    K.setFromTriplets(kept.begin(), kept.end());
    return solve_sparse(K, rhs);
}

namespace {

/// Constant-in-time extension of a snapshot into an element-velocity slab
/// field (mode 0 only).
Eigen::VectorXd extend_constant(const SlabSpace& sp, const Eigen::VectorXd& snap) {
    Eigen::VectorXd slab = Eigen::VectorXd::Zero(static_cast<long>(sp.spatial_u()) * sp.nT);
    for (int i = 0; i < sp.spatial_u(); ++i) slab(i * sp.nT) = snap(i);
    return slab;
}

} // namespace

SlabState picard_solve_slab(const SlabContext& ctx, const SlabOperators& ops,
                            const Eigen::VectorXd& u_minus, double t0, double dt,
                            const ProblemData& data, const SolverConfig& config) {
    config.validate();
    const SlabSpace& sp = ctx.space;
    double alpha = config.penalty(sp.ks);
    SlabSystem sys = assemble_slab_system(ctx, t0, dt, u_minus, data.f, data.nu, alpha, ops.A_sp,
                                          ops.B_sp, nullptr);
    SlabState state;
    state.solution = Eigen::VectorXd::Zero(sp.total);

    Eigen::VectorXd w = extend_constant(sp, u_minus);
    SparseMat empty(sp.total, sp.total);
    for (int it = 0; it < config.max_picard; ++it) {
        SparseMat O = data.convection ? assemble_o_slab(ctx, dt, w) : empty;
        Eigen::VectorXd rhs = sys.rhs;
        SparseMat K = combined_constrained_matrix(ctx, sys, O, rhs);
        Eigen::VectorXd sol =
            config.static_condensation ? solve_condensed(ctx, K, rhs) : solve_sparse(K, rhs);
        state.solution = sol;
        state.picard_iters = it + 1;

        Eigen::VectorXd u_new = state.element_velocity(sp);
        if (!data.convection) {
            state.converged = true;
            state.picard_residual = 0.0;
            state.residual_history.push_back(0.0);
            break;
        }
        // fixed-point residual: ||| u_new - w |||-integrated, relative
        Eigen::VectorXd diff_pair = Eigen::VectorXd::Zero(static_cast<long>(sp.spatial_pair()) * sp.nT);
        diff_pair.head(u_new.size()) = u_new - w;
        double dnorm = std::sqrt(std::max(0.0, pair_bilinear(sp, ops.Nv_sp, dt, diff_pair, diff_pair)));
        Eigen::VectorXd new_pair = state.velocity_pair(sp);
        double unorm = std::sqrt(std::max(0.0, pair_bilinear(sp, ops.Nv_sp, dt, new_pair, new_pair)));
        double rel = unorm > 0.0 ? dnorm / unorm : dnorm;
        state.picard_residual = rel;
        state.residual_history.push_back(rel);
        if (rel <= config.picard_tol) {
            state.converged = true;
            break;
        }
        w = config.damping * u_new + (1.0 - config.damping) * w;
    }
    state.outgoing_trace = trace_snapshot(sp, state.element_velocity(sp), +1);

    // nonlinear discrete residual at the final iterate
    {
        SparseMat O = data.convection ? assemble_o_slab(ctx, dt, state.element_velocity(sp)) : empty;
        Eigen::VectorXd rhs = sys.rhs;
        SparseMat K = combined_constrained_matrix(ctx, sys, O, rhs);
        double scale = rhs.norm();
        state.discrete_residual = (rhs - K * state.solution).norm() / (scale > 0.0 ? scale : 1.0);
    }
    return state;
}

RunResult run_simulation(const SlabContext& ctx, const SpaceTimeLayout& layout,
                         const ProblemData& data, const SolverConfig& config) {
    data.validate();
    config.validate();
    const SlabSpace& sp = ctx.space;
    SlabOperators ops = build_slab_operators(ctx, config.penalty(sp.ks));
    DivProjector div(ctx);

    RunResult out;
    Eigen::VectorXd u_minus;
    if (data.steady_discrete_start) {
        Eigen::VectorXd steady = solve_steady_stokes(ctx, ops, data.nu,
                                                     [&](const Eigen::Vector2d& x) { return data.f(x, 0.0); });
        u_minus = steady.head(sp.spatial_u());
    } else {
        u_minus = initial_trace(ctx, div, data);
    }
    out.initial_trace_snapshot = u_minus;

    Eigen::VectorXd mass = mass_diagonal(ctx);
    auto l2sq = [&](const Eigen::VectorXd& snap) { return snap.dot(mass.cwiseProduct(snap)); };

    LiftingWorkspace lift_ws = build_lifting_workspace(ctx, sp.ks);
    for (int n = 0; n < layout.n_slabs(); ++n) {
        double t0 = layout.time_levels(n), dt = layout.dt(n);
        SlabState st = picard_solve_slab(ctx, ops, u_minus, t0, dt, data, config);
        st.slab = n;

        SlabLedger led;
        led.n = n;
        led.t_end = layout.time_levels(n + 1);
        led.picard_iters = st.picard_iters;
        led.picard_residual = st.picard_residual;
        Eigen::VectorXd u_slab = st.element_velocity(sp);
        Eigen::VectorXd pair = st.velocity_pair(sp);
        led.in_sq = l2sq(u_minus);
        led.out_sq = l2sq(st.outgoing_trace);
        Eigen::VectorXd jump = trace_snapshot(sp, u_slab, -1) - u_minus;
        led.jump_sq = l2sq(jump);
        led.visc2 = 2.0 * data.nu * pair_bilinear(sp, ops.A_sp, dt, pair, pair);
        if (data.convection) {
            SparseMat O = assemble_o_slab(ctx, dt, u_slab);
            Eigen::VectorXd full = Eigen::VectorXd::Zero(sp.total);
            full.segment(sp.off_u, u_slab.size()) = u_slab;
            full.segment(sp.off_ubar, static_cast<long>(sp.spatial_ubar()) * sp.nT) =
                pair.tail(static_cast<long>(sp.spatial_ubar()) * sp.nT);
            led.conv2 = 2.0 * full.dot(O * full);
        }
        // 2 int (f, u) dt: f-part of the rhs dotted with the solution
        {
            Eigen::VectorXd rhs_trace = Eigen::VectorXd::Zero(sp.total);
            for (int K = 0; K < sp.n_elems; ++K) {
                double det = ctx.geo[K].det;
                for (int c = 0; c < 2; ++c)
                    for (int i = 0; i < sp.nSv; ++i) {
                        double val = det * u_minus(sp.u_sp(K, c, i));
                        for (int m = 0; m < sp.nT; ++m)
                            rhs_trace(sp.u_dof(K, c, i, m)) += (m % 2 == 0 ? 1.0 : -1.0) * val;
                    }
            }
            SparseMat Mt;
            Eigen::VectorXd rhs_full;
            assemble_time_terms(ctx, t0, dt, u_minus, data.f, Mt, rhs_full);
            Eigen::VectorXd fpart = rhs_full - rhs_trace;
            Eigen::VectorXd full_sol = Eigen::VectorXd::Zero(sp.total);
            full_sol.segment(sp.off_u, u_slab.size()) = u_slab;
            led.f2 = 2.0 * fpart.dot(full_sol);
        }
        led.residual = led.out_sq + led.jump_sq + led.visc2 + led.conv2 - led.in_sq - led.f2;
        // 2 nu int sum_i ||G_h(u_i)||^2 dt for the energy-inequality slack
        {
            double acc = 0.0;
            for (int m = 0; m < sp.nT; ++m) {
                Eigen::VectorXd um = mode_snapshot(sp, u_slab, m);
                Eigen::VectorXd ubm = mode_snapshot_facet(
                    sp, Eigen::VectorXd(pair.tail(static_cast<long>(sp.spatial_ubar()) * sp.nT)), m);
                for (int comp = 0; comp < 2; ++comp) {
                    LiftedField G = discrete_gradient(ctx, lift_ws, um, ubm, comp);
                    acc += lifted_inner(ctx, G, G) * dt / (2.0 * m + 1.0);
                }
            }
            led.grad2 = 2.0 * data.nu * acc;
        }
        // conformity of the solved velocity at temporal quadrature points
        for (int tq = 0; tq < ctx.time_rule.points.rows(); ++tq) {
            Eigen::VectorXd snap = Eigen::VectorXd::Zero(sp.spatial_u());
            for (int spi = 0; spi < sp.spatial_u(); ++spi)
                for (int m = 0; m < sp.nT; ++m)
                    snap(spi) += u_slab(spi * sp.nT + m) * ctx.time_val(m, tq);
            ConformityResidual c = conformity_residual(ctx, snap);
            led.conformity.max_divergence = std::max(led.conformity.max_divergence, c.max_divergence);
            led.conformity.max_interior_normal_jump =
                std::max(led.conformity.max_interior_normal_jump, c.max_interior_normal_jump);
            led.conformity.max_boundary_normal_trace =
                std::max(led.conformity.max_boundary_normal_trace, c.max_boundary_normal_trace);
        }

        out.states.push_back(std::move(st));
        out.ledger.push_back(led);
        if (!out.states.back().converged) {
            out.failed_slab = n;
            return out;
        }
        u_minus = out.states.back().outgoing_trace;
    }
    out.completed = true;
    return out;
}

Eigen::VectorXd solve_condensed(const SlabContext& ctx, const SparseMat& K,
                                const Eigen::VectorXd& rhs) {
    const SlabSpace& sp = ctx.space;
    int n_elem_dofs = sp.off_ubar;  // element velocity + element pressure blocks
    int n_glob = sp.total - n_elem_dofs;
    int per_u = 2 * sp.nSv * sp.nT;
    int per_p = sp.nSp * sp.nT;
    int per_elem = per_u + per_p;

    auto elem_of = [&](int d) -> int {
        if (d < sp.off_p) return d / per_u;
        if (d < sp.off_ubar) return (d - sp.off_p) / per_p;
        return -1;
    };
    auto local_of = [&](int d, int K_) -> int {
        if (d < sp.off_p) return d - K_ * per_u;
        return per_u + (d - sp.off_p - K_ * per_p);
    };

    int nel = sp.n_elems;
    std::vector<Eigen::MatrixXd> D(nel, Eigen::MatrixXd::Zero(per_elem, per_elem));
    // sparse couplings element <-> global, stored per element
    std::vector<std::vector<std::array<double, 3>>> Et(nel), Ft(nel);  // (local, gcol/grow, val)
    std::vector<Triplet> gg;

    for (int k = 0; k < K.outerSize(); ++k)
        for (SparseMat::InnerIterator it(K, k); it; ++it) {
            int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
            int er = elem_of(r), ec = elem_of(c);
            if (er >= 0 && ec >= 0) {
                if (er != ec) throw ConfigError("solve_condensed: unexpected cross-element coupling");
                D[er](local_of(r, er), local_of(c, ec)) += it.value();
            } else if (er >= 0) {
                Et[er].push_back({static_cast<double>(local_of(r, er)),
                                  static_cast<double>(c - n_elem_dofs), it.value()});
            } else if (ec >= 0) {
                Ft[ec].push_back({static_cast<double>(r - n_elem_dofs),
                                  static_cast<double>(local_of(c, ec)), it.value()});
            } else {
                gg.emplace_back(r - n_elem_dofs, c - n_elem_dofs, it.value());
            }
        }

    Eigen::VectorXd rhs_g = rhs.tail(n_glob);
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> Dlu;
    Dlu.reserve(nel);
    std::vector<Eigen::VectorXd> Dinv_b(nel);
    for (int e = 0; e < nel; ++e) {
        Dlu.emplace_back(D[e]);
        Eigen::VectorXd be(per_elem);
        be.head(per_u) = rhs.segment(static_cast<long>(e) * per_u, per_u);
        be.tail(per_p) = rhs.segment(sp.off_p + static_cast<long>(e) * per_p, per_p);
        Dinv_b[e] = Dlu[e].solve(be);
    }

    // Schur complement S = K_GG - sum_e F_e D_e^{-1} E_e, densified per element
    for (int e = 0; e < nel; ++e) {
        if (Et[e].empty() || Ft[e].empty()) continue;
        std::vector<int> cols, rows;
        for (const auto& t : Et[e]) cols.push_back(static_cast<int>(t[1]));
        for (const auto& t : Ft[e]) rows.push_back(static_cast<int>(t[0]));
        std::sort(cols.begin(), cols.end());
        cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        std::vector<int> colpos(n_glob, -1), rowpos(n_glob, -1);
        for (size_t i = 0; i < cols.size(); ++i) colpos[cols[i]] = static_cast<int>(i);
        for (size_t i = 0; i < rows.size(); ++i) rowpos[rows[i]] = static_cast<int>(i);
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(per_elem, cols.size());
        for (const auto& t : Et[e]) E(static_cast<int>(t[0]), colpos[static_cast<int>(t[1])]) += t[2];
        Eigen::MatrixXd F = Eigen::MatrixXd::Zero(rows.size(), per_elem);
        for (const auto& t : Ft[e]) F(rowpos[static_cast<int>(t[0])], static_cast<int>(t[1])) += t[2];
        Eigen::MatrixXd DinvE = Dlu[e].solve(E);
        Eigen::MatrixXd S_e = F * DinvE;
        for (size_t r = 0; r < rows.size(); ++r)
            for (size_t j = 0; j < cols.size(); ++j)
                if (S_e(r, j) != 0.0) gg.emplace_back(rows[r], cols[j], -S_e(r, j));
        Eigen::VectorXd rb = F * Dinv_b[e];
        for (size_t r = 0; r < rows.size(); ++r) rhs_g(rows[r]) -= rb(r);
    }
    SparseMat S(n_glob, n_glob);
    S.setFromTriplets(gg.begin(), gg.end());
    Eigen::VectorXd y = solve_sparse(S, rhs_g);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(sp.total);
    x.tail(n_glob) = y;
    for (int e = 0; e < nel; ++e) {
        Eigen::VectorXd Ey = Eigen::VectorXd::Zero(per_elem);
        for (const auto& t : Et[e])
            Ey(static_cast<int>(t[0])) += t[2] * y(static_cast<int>(t[1]));
        Eigen::VectorXd xe = Dinv_b[e] - Dlu[e].solve(Ey);
        x.segment(static_cast<long>(e) * per_u, per_u) = xe.head(per_u);
        x.segment(sp.off_p + static_cast<long>(e) * per_p, per_p) = xe.tail(per_p);
    }
    return x;
}

} // namespace sthdg
