#include "sthdg/liftings.hpp"

#include <cmath>

namespace sthdg {

LiftingWorkspace build_lifting_workspace(const SlabContext& ctx, int k) {
    LiftingWorkspace ws;
    ws.k = k;
    ws.basis = simplex_basis(k);
    ws.nP = ws.basis.dim;
    int exact = std::max(2 * k, 2 * k + ctx.space.ks);  // products with velocity fields stay exact
    ws.vol_rule = quadrature(Cell::triangle, exact);
    ws.tab = tabulate(ws.basis, ws.vol_rule.points);
    ws.tab_v = tabulate(ctx.basis_v, ws.vol_rule.points);
    int nf = ctx.faces->n_faces();
    ws.side.resize(2 * nf);
    ws.side_stride = nf;
    for (int f = 0; f < nf; ++f) {
        Tabulation tl = tabulate(ws.basis, ctx.face_ref_points(f, true));
        ws.side[f] = {tl.values, tl.grad_x, tl.grad_y};
        if (!ctx.faces->faces[f].boundary()) {
            Tabulation tr = tabulate(ws.basis, ctx.face_ref_points(f, false));
            ws.side[nf + f] = {tr.values, tr.grad_x, tr.grad_y};
        }
    }
    return ws;
}

namespace {

/// Mismatch (v_comp - vbar_comp) from one side of a face at every edge
/// quadrature point.
Eigen::VectorXd side_mismatch(const SlabContext& ctx, const Eigen::VectorXd& u_snap,
                              const Eigen::VectorXd& ubar_snap, int f, bool left, int comp) {
    const SlabSpace& sp = ctx.space;
    const Face& face = ctx.faces->faces[f];
    int K = left ? face.left : face.right;
    const Eigen::MatrixXd& val = left ? ctx.side_left[f].val : ctx.side_right[f].val;
    int nq = static_cast<int>(ctx.edge_rule.weights.size());
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(nq);
    for (int q = 0; q < nq; ++q) {
        double v = 0.0;
        for (int i = 0; i < sp.nSv; ++i) v += u_snap(sp.u_sp(K, comp, i)) * val(i, q);
        double vb = 0.0;
        for (int i = 0; i < sp.nFv; ++i) vb += ubar_snap((f * 2 + comp) * sp.nFv + i) * ctx.facet_val(i, q);
        mu(q) = v - vb;
    }
    return mu;
}

} // namespace

LiftedField spatial_lifting(const SlabContext& ctx, const LiftingWorkspace& ws,
                            const Eigen::VectorXd& u_snap, const Eigen::VectorXd& ubar_snap, int comp) {
    const SlabSpace& sp = ctx.space;
    LiftedField R;
    R.degree = ws.k;
    R.coeffs = Eigen::VectorXd::Zero(static_cast<long>(sp.n_elems) * 2 * ws.nP);
    int nq = static_cast<int>(ctx.edge_rule.weights.size());
    for (int f = 0; f < sp.n_faces; ++f) {
        const Face& face = ctx.faces->faces[f];
        for (int side = 0; side < (face.boundary() ? 1 : 2); ++side) {
            bool left = side == 0;
            int K = left ? face.left : face.right;
            Eigen::Vector2d n = left ? face.normal : Eigen::Vector2d(-face.normal);
            const Eigen::MatrixXd& lval = ws.side[left ? f : ws.side_stride + f].val;
            Eigen::VectorXd mu = side_mismatch(ctx, u_snap, ubar_snap, f, left, comp);
            double inv_det = 1.0 / ctx.geo[K].det;  // local mass solve: ref mass is identity
            for (int j = 0; j < ws.nP; ++j) {
                double acc = 0.0;
                for (int q = 0; q < nq; ++q)
                    acc += ctx.edge_rule.weights(q) * face.length * mu(q) * lval(j, q);
                for (int c = 0; c < 2; ++c)
                    R.coeffs((static_cast<long>(K) * 2 + c) * ws.nP + j) += acc * n(c) * inv_det;
            }
        }
    }
    return R;
}

LiftedField discrete_gradient(const SlabContext& ctx, const LiftingWorkspace& ws,
                              const Eigen::VectorXd& u_snap, const Eigen::VectorXd& ubar_snap, int comp) {
    const SlabSpace& sp = ctx.space;
    LiftedField G = spatial_lifting(ctx, ws, u_snap, ubar_snap, comp);
    G.coeffs = -G.coeffs;
    int nq = static_cast<int>(ws.vol_rule.weights.size());
    for (int K = 0; K < sp.n_elems; ++K) {
        const ElementGeometry& g = ctx.geo[K];
        for (int q = 0; q < nq; ++q) {
            Eigen::Vector2d grad = Eigen::Vector2d::Zero();
            for (int i = 0; i < sp.nSv; ++i) {
                double coef = u_snap(sp.u_sp(K, comp, i));
                grad += coef * (g.Jinv.transpose() *
                                Eigen::Vector2d(ws.tab_v.grad_x(i, q), ws.tab_v.grad_y(i, q)));
            }
            double wq = ws.vol_rule.weights(q);  // projection 1/det cancels the volume det
            for (int c = 0; c < 2; ++c)
                for (int j = 0; j < ws.nP; ++j)
                    G.coeffs((static_cast<long>(K) * 2 + c) * ws.nP + j) += wq * grad(c) * ws.tab.values(j, q);
        }
    }
    return G;
}

double lifted_inner(const SlabContext& ctx, const LiftedField& a, const LiftedField& b) {
    if (a.degree != b.degree) throw std::invalid_argument("lifted_inner: degree mismatch");
    int nP = triangle_space_dim(a.degree);
    double acc = 0.0;
    for (int K = 0; K < ctx.space.n_elems; ++K) {
        double blk = 0.0;
        for (int c = 0; c < 2; ++c)
            for (int j = 0; j < nP; ++j)
                blk += a.coeffs((static_cast<long>(K) * 2 + c) * nP + j) *
                       b.coeffs((static_cast<long>(K) * 2 + c) * nP + j);
        acc += ctx.geo[K].det * blk;
    }
    return acc;
}

double lifting_identity_residual(const SlabContext& ctx, const LiftingWorkspace& ws,
                                 const LiftedField& R, const Eigen::VectorXd& u_snap,
                                 const Eigen::VectorXd& ubar_snap, int comp) {
    // With orthonormal bases the defining identity reads, for test function
    // (c, j) on element K:  det * R_{K,c,j} = sum_{F in dK} int_F mu phi_j n_c.
    const SlabSpace& sp = ctx.space;
    int nq = static_cast<int>(ctx.edge_rule.weights.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(R.coeffs.size());
    double scale = 0.0;
    for (int f = 0; f < sp.n_faces; ++f) {
        const Face& face = ctx.faces->faces[f];
        for (int side = 0; side < (face.boundary() ? 1 : 2); ++side) {
            bool left = side == 0;
            int K = left ? face.left : face.right;
            Eigen::Vector2d n = left ? face.normal : Eigen::Vector2d(-face.normal);
            const Eigen::MatrixXd& lval = ws.side[left ? f : ws.side_stride + f].val;
            Eigen::VectorXd mu = side_mismatch(ctx, u_snap, ubar_snap, f, left, comp);
            for (int j = 0; j < ws.nP; ++j) {
                double acc = 0.0;
                for (int q = 0; q < nq; ++q)
                    acc += ctx.edge_rule.weights(q) * face.length * mu(q) * lval(j, q);
                for (int c = 0; c < 2; ++c) rhs((static_cast<long>(K) * 2 + c) * ws.nP + j) += acc * n(c);
                scale = std::max(scale, std::abs(acc));
            }
        }
    }
    double worst = 0.0;
    for (int K = 0; K < sp.n_elems; ++K)
        for (int c = 0; c < 2; ++c)
            for (int j = 0; j < ws.nP; ++j) {
                long idx = (static_cast<long>(K) * 2 + c) * ws.nP + j;
                worst = std::max(worst, std::abs(ctx.geo[K].det * R.coeffs(idx) - rhs(idx)));
            }
    return worst / std::max(scale, 1e-300);
}

Eigen::VectorXd time_lifting(const SlabSpace& space, const Eigen::VectorXd& u_slab,
                             const Eigen::VectorXd& u_minus, double dt) {
    if (u_minus.size() != space.spatial_u())
        throw std::invalid_argument("time_lifting: incoming trace missing or mis-sized");
    Eigen::VectorXd jump = trace_snapshot(space, u_slab, -1) - u_minus;
    Eigen::VectorXd R = Eigen::VectorXd::Zero(u_slab.size());
    // diagonal temporal mass: R_r = (-1)^r (2r+1)/dt [u]_n
    for (int sp = 0; sp < space.spatial_u(); ++sp)
        for (int r = 0; r < space.nT; ++r) {
            double sign = r % 2 == 0 ? 1.0 : -1.0;
            R(sp * space.nT + r) = sign * (2.0 * r + 1.0) / dt * jump(sp);
        }
    return R;
}

Eigen::VectorXd broken_time_derivative(const SlabSpace& space, const Eigen::VectorXd& u_slab, double dt) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(u_slab.size());
    // L_m' = sum over j < m with m - j odd of (2j+1) L_j, chain rule 2/dt
    for (int sp = 0; sp < space.spatial_u(); ++sp)
        for (int j = 0; j < space.nT; ++j) {
            double acc = 0.0;
            for (int m = j + 1; m < space.nT; m += 2) acc += u_slab(sp * space.nT + m);
            d(sp * space.nT + j) = acc * (2.0 * j + 1.0) * 2.0 / dt;
        }
    return d;
}

Eigen::VectorXd discrete_time_derivative(const SlabSpace& space, const Eigen::VectorXd& u_slab,
                                         const Eigen::VectorXd& u_minus, double dt) {
    return broken_time_derivative(space, u_slab, dt) + time_lifting(space, u_slab, u_minus, dt);
}

double time_lifting_fitted_scaling(const SlabSpace& space, const Eigen::VectorXd& u_slab,
                                   const Eigen::VectorXd& u_minus, double dt) {
    Eigen::VectorXd R = time_lifting(space, u_slab, u_minus, dt);
    Eigen::VectorXd jump = trace_snapshot(space, u_slab, -1) - u_minus;
    // representation sum with unit-normalized Legendre: mode r coefficient
    // (jump/2)(-1)^r (2r+1)
    Eigen::VectorXd S = Eigen::VectorXd::Zero(R.size());
    for (int sp = 0; sp < space.spatial_u(); ++sp)
        for (int r = 0; r < space.nT; ++r) {
            double sign = r % 2 == 0 ? 1.0 : -1.0;
            S(sp * space.nT + r) = 0.5 * jump(sp) * sign * (2.0 * r + 1.0);
        }
    double ss = S.squaredNorm();
    if (ss == 0.0) return 0.0;
    return R.dot(S) / ss;
}

} // namespace sthdg
