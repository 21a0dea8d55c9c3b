#include "sthdg/spaces.hpp"

#include <cmath>

namespace sthdg {

SlabSpace build_slab_space(const SpatialMesh& mesh, const FaceTopology& faces, int ks, int kt) {
    if (ks < 1) throw std::invalid_argument("build_slab_space: ks >= 1 required (pressure degree ks-1)");
    if (kt < 0) throw std::invalid_argument("build_slab_space: kt >= 0 required");
    SlabSpace s;
    s.ks = ks;
    s.kt = kt;
    s.nT = kt + 1;
    s.n_elems = mesh.n_triangles();
    s.n_faces = faces.n_faces();
    s.nSv = triangle_space_dim(ks);
    s.nSp = triangle_space_dim(ks - 1);
    s.nFv = ks + 1;
    s.nFp = ks + 1;
    s.off_u = 0;
    s.off_p = s.off_u + s.n_elems * 2 * s.nSv * s.nT;
    s.off_ubar = s.off_p + s.n_elems * s.nSp * s.nT;
    s.off_pbar = s.off_ubar + s.n_faces * 2 * s.nFv * s.nT;
    s.off_lambda = s.off_pbar + s.n_faces * s.nFp * s.nT;
    s.total = s.off_lambda + s.nT;
    s.face_on_boundary.resize(s.n_faces);
    for (int f = 0; f < s.n_faces; ++f) s.face_on_boundary[f] = faces.faces[f].boundary() ? 1 : 0;
    return s;
}

int field_length(const SlabSpace& space, FieldRole role) {
    switch (role) {
    case FieldRole::element_velocity: return space.spatial_u() * space.nT;
    case FieldRole::facet_velocity: return space.spatial_ubar() * space.nT;
    case FieldRole::element_pressure: return space.spatial_p() * space.nT;
    case FieldRole::facet_pressure: return space.spatial_pbar() * space.nT;
    case FieldRole::velocity_pair: return space.spatial_pair() * space.nT;
    case FieldRole::velocity_snapshot: return space.spatial_u();
    }
    return 0;
}

DiscreteField zero_field(const SlabSpace& space, FieldRole role, int slab) {
    return DiscreteField{slab, role, Eigen::VectorXd::Zero(field_length(space, role))};
}

Eigen::MatrixXd SlabContext::face_ref_points(int f, bool left_side) const {
    const Face& face = faces->faces[f];
    int K = left_side ? face.left : face.right;
    const ElementGeometry& g = geo[K];
    int nq = static_cast<int>(edge_rule.points.rows());
    Eigen::MatrixXd ref(nq, 2);
    for (int q = 0; q < nq; ++q) {
        Eigen::Vector2d x = face_point(*mesh, face, edge_rule.points(q, 0));
        ref.row(q) = to_reference(g, x).transpose();
    }
    return ref;
}

SlabContext build_slab_context(const SpatialMesh& mesh, const FaceTopology& faces, int ks, int kt,
                               int vol_exactness, int edge_exactness, int time_exactness) {
    SlabContext ctx;
    ctx.mesh = &mesh;
    ctx.faces = &faces;
    ctx.geo = build_geometry(mesh);
    ctx.space = build_slab_space(mesh, faces, ks, kt);
    ctx.basis_v = simplex_basis(ks);
    ctx.basis_p = simplex_basis(ks - 1);
    ctx.basis_f = edge_basis(ks);
    ctx.basis_t = interval_basis(kt);
    if (vol_exactness < 0) vol_exactness = 3 * ks + 2;
    if (edge_exactness < 0) edge_exactness = 3 * ks + 2;
    if (time_exactness < 0) time_exactness = 3 * kt + 2;
    ctx.vol_rule = quadrature(Cell::triangle, vol_exactness);
    ctx.tab_v = tabulate(ctx.basis_v, ctx.vol_rule.points);
    ctx.tab_p = tabulate(ctx.basis_p, ctx.vol_rule.points);
    ctx.edge_rule = quadrature(Cell::edge, edge_exactness);
    ctx.facet_val = ctx.basis_f.values(ctx.edge_rule.points);
    ctx.side_left.resize(faces.n_faces());
    ctx.side_right.resize(faces.n_faces());
    for (int f = 0; f < faces.n_faces(); ++f) {
        Eigen::MatrixXd refL = ctx.face_ref_points(f, true);
        Tabulation tl = tabulate(ctx.basis_v, refL);
        ctx.side_left[f] = {tl.values, tl.grad_x, tl.grad_y};
        if (!faces.faces[f].boundary()) {
            Eigen::MatrixXd refR = ctx.face_ref_points(f, false);
            Tabulation tr = tabulate(ctx.basis_v, refR);
            ctx.side_right[f] = {tr.values, tr.grad_x, tr.grad_y};
        }
    }
    ctx.time_rule = quadrature(Cell::interval, time_exactness);
    ctx.time_val = ctx.basis_t.values(ctx.time_rule.points);
    return ctx;
}

Eigen::VectorXd time_basis_values(int kt, double s) {
    Eigen::MatrixXd pt(1, 1);
    pt(0, 0) = s;
    return interval_basis(kt).values(pt).col(0);
}

Eigen::VectorXd mode_snapshot(const SlabSpace& space, const Eigen::VectorXd& slab_u, int m) {
    Eigen::VectorXd snap(space.spatial_u());
    for (int sp = 0; sp < space.spatial_u(); ++sp) snap(sp) = slab_u(sp * space.nT + m);
    return snap;
}

Eigen::VectorXd mode_snapshot_facet(const SlabSpace& space, const Eigen::VectorXd& slab_field, int m) {
    // accepts either a facet-velocity slab vector or the facet block of a pair
    int nsp = space.spatial_ubar();
    int base = static_cast<int>(slab_field.size()) - nsp * space.nT;
    Eigen::VectorXd snap(nsp);
    for (int sp = 0; sp < nsp; ++sp) snap(sp) = slab_field(base + sp * space.nT + m);
    return snap;
}

Eigen::VectorXd trace_snapshot(const SlabSpace& space, const Eigen::VectorXd& slab_u, int side) {
    Eigen::VectorXd snap = Eigen::VectorXd::Zero(space.spatial_u());
    for (int m = 0; m < space.nT; ++m) {
        double w = side > 0 ? 1.0 : (m % 2 == 0 ? 1.0 : -1.0);
        for (int sp = 0; sp < space.spatial_u(); ++sp) snap(sp) += w * slab_u(sp * space.nT + m);
    }
    return snap;
}

VelocityEval evaluate_velocity(const SlabContext& ctx, const Eigen::VectorXd& coeffs, FieldRole role,
                               int K, const Eigen::Vector2d& x, double s, double dt) {
    if (role != FieldRole::element_velocity && role != FieldRole::velocity_pair &&
        role != FieldRole::velocity_snapshot)
        throw std::invalid_argument("evaluate_velocity: field has no element velocity block");
    const SlabSpace& sp = ctx.space;
    const ElementGeometry& g = ctx.geo[K];
    Eigen::Vector2d ref = to_reference(g, x);
    const double tol = 1e-12;
    if (ref.x() < -tol || ref.y() < -tol || ref.x() + ref.y() > 1.0 + tol)
        throw std::domain_error("evaluate_velocity: point outside element");
    Eigen::MatrixXd pt(1, 2);
    pt.row(0) = ref.transpose();
    Eigen::MatrixXd V = ctx.basis_v.values(pt);
    Eigen::MatrixXd Gx, Gy;
    ctx.basis_v.gradients(pt, Gx, Gy);

    bool snapshot = role == FieldRole::velocity_snapshot;
    int nT = snapshot ? 1 : sp.nT;
    Eigen::VectorXd tv = snapshot ? Eigen::VectorXd::Ones(1) : time_basis_values(sp.kt, s);
    Eigen::VectorXd tdv = Eigen::VectorXd::Zero(nT);
    if (!snapshot && sp.kt >= 1) {
        Eigen::MatrixXd spt(1, 1);
        spt(0, 0) = s;
        Eigen::MatrixXd d, unused;
        ctx.basis_t.gradients(spt, d, unused);
        for (int m = 0; m < nT; ++m) tdv(m) = d(m, 0) * 2.0 / dt;
    }

    VelocityEval out;
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < sp.nSv; ++i) {
            double tc = 0.0, tdc = 0.0;
            for (int m = 0; m < nT; ++m) {
                double coef = coeffs((static_cast<long>(K * 2 + c) * sp.nSv + i) * nT + m);
                tc += coef * tv(m);
                tdc += coef * tdv(m);
            }
            out.value(c) += tc * V(i, 0);
            Eigen::Vector2d ref_grad(Gx(i, 0), Gy(i, 0));
            out.grad.row(c) += tc * (g.Jinv.transpose() * ref_grad).transpose();
            out.time_deriv(c) += tdc * V(i, 0);
        }
    }
    return out;
}

FaceValues face_values(const SlabContext& ctx, const Eigen::VectorXd& pair_coeffs, int f, double sf,
                       double s) {
    const SlabSpace& sp = ctx.space;
    const Face& face = ctx.faces->faces[f];
    Eigen::VectorXd tv = time_basis_values(sp.kt, s);
    Eigen::MatrixXd ppt(1, 1);
    ppt(0, 0) = sf;
    Eigen::MatrixXd FV = ctx.basis_f.values(ppt);

    auto elem_value = [&](int K) {
        Eigen::Vector2d x = face_point(*ctx.mesh, face, sf);
        Eigen::Vector2d ref = to_reference(ctx.geo[K], x);
        Eigen::MatrixXd pt(1, 2);
        pt.row(0) = ref.transpose();
        Eigen::MatrixXd V = ctx.basis_v.values(pt);
        Eigen::Vector2d v = Eigen::Vector2d::Zero();
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < sp.nSv; ++i)
                for (int m = 0; m < sp.nT; ++m)
                    v(c) += pair_coeffs((static_cast<long>(K * 2 + c) * sp.nSv + i) * sp.nT + m) * tv(m) * V(i, 0);
        return v;
    };
    Eigen::Vector2d vbar = Eigen::Vector2d::Zero();
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < sp.nFv; ++i)
            for (int m = 0; m < sp.nT; ++m)
                vbar(c) += pair_coeffs(sp.spatial_u() * sp.nT + ((static_cast<long>(f) * 2 + c) * sp.nFv + i) * sp.nT + m) *
                           tv(m) * FV(i, 0);

    FaceValues out;
    Eigen::Vector2d vL = elem_value(face.left);
    if (face.boundary()) {
        out.jump = vL;
        out.average = vL;
        out.mismatch_left = vL - vbar;
        out.mismatch_right.setZero();
    } else {
        Eigen::Vector2d vR = elem_value(face.right);
        out.jump = vL - vR;
        out.average = 0.5 * (vL + vR);
        out.mismatch_left = vL - vbar;
        out.mismatch_right = vR - vbar;
    }
    return out;
}

double l2_norm_snapshot(const SlabContext& ctx, const Eigen::VectorXd& u_snap) {
    const SlabSpace& sp = ctx.space;
    double acc = 0.0;
    for (int K = 0; K < sp.n_elems; ++K) {
        double blk = 0.0;
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < sp.nSv; ++i) {
                double v = u_snap(sp.u_sp(K, c, i));
                blk += v * v;
            }
        acc += ctx.geo[K].det * blk;
    }
    return std::sqrt(acc);
}

namespace {

/// sum_K int_K |grad v|^2 for an element velocity snapshot.
double grad_sq(const SlabContext& ctx, const Eigen::VectorXd& u_snap) {
    const SlabSpace& sp = ctx.space;
    int nq = static_cast<int>(ctx.vol_rule.weights.size());
    double acc = 0.0;
    for (int K = 0; K < sp.n_elems; ++K) {
        const ElementGeometry& g = ctx.geo[K];
        for (int q = 0; q < nq; ++q) {
            Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < sp.nSv; ++i) {
                    double coef = u_snap(sp.u_sp(K, c, i));
                    Eigen::Vector2d rg(ctx.tab_v.grad_x(i, q), ctx.tab_v.grad_y(i, q));
                    grad.row(c) += coef * (g.Jinv.transpose() * rg).transpose();
                }
            acc += ctx.vol_rule.weights(q) * g.det * grad.squaredNorm();
        }
    }
    return acc;
}

Eigen::Vector2d side_value(const SlabContext& ctx, const Eigen::VectorXd& u_snap, int f, bool left,
                           int q) {
    const SlabSpace& sp = ctx.space;
    const Face& face = ctx.faces->faces[f];
    int K = left ? face.left : face.right;
    const Eigen::MatrixXd& val = left ? ctx.side_left[f].val : ctx.side_right[f].val;
    Eigen::Vector2d v = Eigen::Vector2d::Zero();
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < sp.nSv; ++i) v(c) += u_snap(sp.u_sp(K, c, i)) * val(i, q);
    return v;
}

Eigen::Vector2d facet_value(const SlabContext& ctx, const Eigen::VectorXd& ubar_snap, int f, int q) {
    const SlabSpace& sp = ctx.space;
    Eigen::Vector2d v = Eigen::Vector2d::Zero();
    int base = (f * 2) * sp.nFv;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < sp.nFv; ++i) v(c) += ubar_snap(base + c * sp.nFv + i) * ctx.facet_val(i, q);
    return v;
}

} // namespace

double norm_1h_snapshot(const SlabContext& ctx, const Eigen::VectorXd& u_snap) {
    double acc = grad_sq(ctx, u_snap);
    int nq = static_cast<int>(ctx.edge_rule.weights.size());
    for (int f = 0; f < ctx.faces->n_faces(); ++f) {
        const Face& face = ctx.faces->faces[f];
        double jsum = 0.0;
        for (int q = 0; q < nq; ++q) {
            Eigen::Vector2d jump = side_value(ctx, u_snap, f, true, q);
            if (!face.boundary()) jump -= side_value(ctx, u_snap, f, false, q);
            jsum += ctx.edge_rule.weights(q) * jump.squaredNorm();
        }
        // (1/h_F) int_F |jump|^2 with h_F = |F|: the lengths cancel
        acc += jsum;
    }
    return std::sqrt(acc);
}

double norm_v_snapshot(const SlabContext& ctx, const Eigen::VectorXd& u_snap,
                       const Eigen::VectorXd& ubar_snap) {
    double acc = grad_sq(ctx, u_snap);
    int nq = static_cast<int>(ctx.edge_rule.weights.size());
    for (int f = 0; f < ctx.faces->n_faces(); ++f) {
        const Face& face = ctx.faces->faces[f];
        for (int q = 0; q < nq; ++q) {
            Eigen::Vector2d vbar = facet_value(ctx, ubar_snap, f, q);
            Eigen::Vector2d mL = side_value(ctx, u_snap, f, true, q) - vbar;
            acc += ctx.edge_rule.weights(q) * face.length * mL.squaredNorm() / ctx.geo[face.left].hK;
            if (!face.boundary()) {
                Eigen::Vector2d mR = side_value(ctx, u_snap, f, false, q) - vbar;
                acc += ctx.edge_rule.weights(q) * face.length * mR.squaredNorm() / ctx.geo[face.right].hK;
            }
        }
    }
    return std::sqrt(acc);
}

double norm_v_slab_sq(const SlabContext& ctx, double dt, const Eigen::VectorXd& pair_slab) {
    const SlabSpace& sp = ctx.space;
    Eigen::VectorXd u_slab = pair_slab.head(sp.spatial_u() * sp.nT);
    Eigen::VectorXd ub_slab = pair_slab.tail(sp.spatial_ubar() * sp.nT);
    double acc = 0.0;
    for (int m = 0; m < sp.nT; ++m) {
        double nm = norm_v_snapshot(ctx, mode_snapshot(sp, u_slab, m), mode_snapshot_facet(sp, ub_slab, m));
        acc += nm * nm * dt / (2.0 * m + 1.0);
    }
    return acc;
}

double norm_1h_slab_sq(const SlabContext& ctx, double dt, const Eigen::VectorXd& u_slab) {
    const SlabSpace& sp = ctx.space;
    double acc = 0.0;
    for (int m = 0; m < sp.nT; ++m) {
        double nm = norm_1h_snapshot(ctx, mode_snapshot(sp, u_slab, m));
        acc += nm * nm * dt / (2.0 * m + 1.0);
    }
    return acc;
}

double l2_slab_sq(const SlabContext& ctx, double dt, const Eigen::VectorXd& u_slab) {
    const SlabSpace& sp = ctx.space;
    double acc = 0.0;
    for (int m = 0; m < sp.nT; ++m) {
        double nm = l2_norm_snapshot(ctx, mode_snapshot(sp, u_slab, m));
        acc += nm * nm * dt / (2.0 * m + 1.0);
    }
    return acc;
}

Eigen::VectorXd fit_velocity_snapshot(const SlabContext& ctx,
                                      const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& g) {
    const SlabSpace& sp = ctx.space;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(sp.spatial_u());
    int nq = static_cast<int>(ctx.vol_rule.weights.size());
    for (int K = 0; K < sp.n_elems; ++K) {
        const ElementGeometry& ge = ctx.geo[K];
        for (int q = 0; q < nq; ++q) {
            Eigen::Vector2d x = ge.p0 + ge.J * ctx.vol_rule.points.row(q).transpose();
            Eigen::Vector2d v = g(x);
            double w = ctx.vol_rule.weights(q);
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < sp.nSv; ++i) out(sp.u_sp(K, c, i)) += w * v(c) * ctx.tab_v.values(i, q);
        }
        // reference mass is the identity, physical mass is det * I
    }
    return out;
}

Eigen::VectorXd fit_velocity_slab(const SlabContext& ctx, double t0, double dt,
                                  const std::function<Eigen::Vector2d(const Eigen::Vector2d&, double)>& g) {
    const SlabSpace& sp = ctx.space;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(sp.spatial_u() * sp.nT);
    int ntq = static_cast<int>(ctx.time_rule.weights.size());
    for (int tq = 0; tq < ntq; ++tq) {
        double s = ctx.time_rule.points(tq, 0);
        double t = t0 + dt * (s + 1.0) / 2.0;
        Eigen::VectorXd snap = fit_velocity_snapshot(ctx, [&](const Eigen::Vector2d& x) { return g(x, t); });
        // L2(I_n) projection: c_m = (2m+1)/dt * int g L_m dt, absorbed per point
        for (int m = 0; m < sp.nT; ++m) {
            double w = ctx.time_rule.weights(tq) * ctx.time_val(m, tq) * (2.0 * m + 1.0) / 2.0;
            for (int spi = 0; spi < sp.spatial_u(); ++spi) out(spi * sp.nT + m) += w * snap(spi);
        }
    }
    return out;
}

Eigen::VectorXd fit_facet_snapshot(const SlabContext& ctx,
                                   const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& g,
                                   bool include_boundary) {
    const SlabSpace& sp = ctx.space;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(sp.spatial_ubar());
    int nq = static_cast<int>(ctx.edge_rule.weights.size());
    for (int f = 0; f < sp.n_faces; ++f) {
        if (sp.face_on_boundary[f] && !include_boundary) continue;  // constrained to zero
        const Face& face = ctx.faces->faces[f];
        for (int q = 0; q < nq; ++q) {
            Eigen::Vector2d x = face_point(*ctx.mesh, face, ctx.edge_rule.points(q, 0));
            Eigen::Vector2d v = g(x);
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < sp.nFv; ++i)
                    out((f * 2 + c) * sp.nFv + i) += ctx.edge_rule.weights(q) * v(c) * ctx.facet_val(i, q);
        }
    }
    return out;  // orthonormal on (0,1): mass on F is |F| I, projection divides |F| and integral has |F|
}

Eigen::VectorXd fit_facet_slab(const SlabContext& ctx, double t0, double dt,
                               const std::function<Eigen::Vector2d(const Eigen::Vector2d&, double)>& g) {
    const SlabSpace& sp = ctx.space;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(sp.spatial_ubar() * sp.nT);
    int ntq = static_cast<int>(ctx.time_rule.weights.size());
    for (int tq = 0; tq < ntq; ++tq) {
        double s = ctx.time_rule.points(tq, 0);
        double t = t0 + dt * (s + 1.0) / 2.0;
        Eigen::VectorXd snap = fit_facet_snapshot(ctx, [&](const Eigen::Vector2d& x) { return g(x, t); });
        for (int m = 0; m < sp.nT; ++m) {
            double w = ctx.time_rule.weights(tq) * ctx.time_val(m, tq) * (2.0 * m + 1.0) / 2.0;
            for (int spi = 0; spi < sp.spatial_ubar(); ++spi) out(spi * sp.nT + m) += w * snap(spi);
        }
    }
    return out;
}

void zero_boundary_facet_rows(const SlabSpace& space, Eigen::VectorXd& ubar, bool slab_layout) {
    int nT = slab_layout ? space.nT : 1;
    for (int f = 0; f < space.n_faces; ++f) {
        if (!space.face_on_boundary[f]) continue;
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < space.nFv; ++i)
                for (int m = 0; m < nT; ++m) ubar(((f * 2 + c) * space.nFv + i) * nT + m) = 0.0;
    }
}

} // namespace sthdg
