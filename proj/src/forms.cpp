#include "sthdg/forms.hpp"

#include <cmath>

#include "sthdg/concurrency.hpp"

namespace sthdg {

Eigen::MatrixXd time_theta_matrix(int kt) {
    int nT = kt + 1;
    ReferenceBasis tb = interval_basis(kt);
    QuadratureRule r = quadrature(Cell::interval, 2 * kt + 1);
    Eigen::MatrixXd V = tb.values(r.points);
    Eigen::MatrixXd D, unused;
    tb.gradients(r.points, D, unused);
    Eigen::MatrixXd theta(nT, nT);
    for (int rr = 0; rr < nT; ++rr)
        for (int m = 0; m < nT; ++m) {
            double ibp = 0.0;
            for (int q = 0; q < r.weights.size(); ++q) ibp += r.weights(q) * V(m, q) * D(rr, q);
            theta(rr, m) = tb.endpoint_value(m, +1) * tb.endpoint_value(rr, +1) - ibp;
        }
    return theta;
}

Eigen::VectorXd time_mass_diagonal(int kt, double dt) {
    Eigen::VectorXd d(kt + 1);
    for (int m = 0; m <= kt; ++m) d(m) = dt / (2.0 * m + 1.0);
    return d;
}

namespace {

/// Physical gradient of velocity basis function i at volume point q.
inline Eigen::Vector2d phys_grad(const ElementGeometry& g, const Tabulation& tab, int i, int q) {
    return g.Jinv.transpose() * Eigen::Vector2d(tab.grad_x(i, q), tab.grad_y(i, q));
}

struct FaceSideData {
    int K = -1;
    Eigen::Vector2d normal;  // outward from K
    const Eigen::MatrixXd* val = nullptr;
    const Eigen::MatrixXd* gx = nullptr;
    const Eigen::MatrixXd* gy = nullptr;
};

/// Both element sides of a face (one for boundary faces).
inline int face_sides(const SlabContext& ctx, int f, FaceSideData side[2]) {
    const Face& face = ctx.faces->faces[f];
    side[0] = {face.left, face.normal, &ctx.side_left[f].val, &ctx.side_left[f].gx,
               &ctx.side_left[f].gy};
    if (face.boundary()) return 1;
    side[1] = {face.right, -face.normal, &ctx.side_right[f].val, &ctx.side_right[f].gx,
               &ctx.side_right[f].gy};
    return 2;
}

/// Merge per-worker triplet buffers in worker order (deterministic for a
/// fixed worker count).
std::vector<Triplet> merge_buffers(std::vector<std::vector<Triplet>>& buf) {
    std::vector<Triplet> out;
    size_t total = 0;
    for (auto& b : buf) total += b.size();
    out.reserve(total);
    for (auto& b : buf) out.insert(out.end(), b.begin(), b.end());
    return out;
}

} // namespace

SparseMat assemble_a_spatial(const SlabContext& ctx, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("assemble_a_spatial: alpha must be positive");
    const SlabSpace& sp = ctx.space;
    int nworkers = worker_count();
    std::vector<std::vector<Triplet>> buf(nworkers + 1);

    int nq = static_cast<int>(ctx.vol_rule.weights.size());
    parallel_for(sp.n_elems, [&](int begin, int end, int w) {
        auto& trip = buf[w];
        for (int K = begin; K < end; ++K) {
            const ElementGeometry& g = ctx.geo[K];
            Eigen::MatrixXd local = Eigen::MatrixXd::Zero(sp.nSv, sp.nSv);
            for (int q = 0; q < nq; ++q) {
                double wq = ctx.vol_rule.weights(q) * g.det;
                for (int i = 0; i < sp.nSv; ++i) {
                    Eigen::Vector2d gi = phys_grad(g, ctx.tab_v, i, q);
                    for (int j = 0; j < sp.nSv; ++j)
                        local(i, j) += wq * gi.dot(phys_grad(g, ctx.tab_v, j, q));
                }
            }
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < sp.nSv; ++i)
                    for (int j = 0; j < sp.nSv; ++j)
                        if (local(i, j) != 0.0)
                            trip.emplace_back(sp.u_sp(K, c, i), sp.u_sp(K, c, j), local(i, j));
        }
    });

    // facet terms, one visit per face covering both sides
    auto& ftrip = buf[nworkers];
    int nqe = static_cast<int>(ctx.edge_rule.weights.size());
    for (int f = 0; f < sp.n_faces; ++f) {
        FaceSideData side[2];
        int ns = face_sides(ctx, f, side);
        const Face& face = ctx.faces->faces[f];
        for (int s = 0; s < ns; ++s) {
            const FaceSideData& sd = side[s];
            const ElementGeometry& g = ctx.geo[sd.K];
            double pen = alpha / g.hK;
            int nu = sp.nSv, nf = sp.nFv;
            // side-local dof order: [element trace i | facet i]
            Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(nu + nf, nu + nf);
            for (int q = 0; q < nqe; ++q) {
                double wq = ctx.edge_rule.weights(q) * face.length;
                Eigen::VectorXd tr(nu + nf);                          // factors of (u - ubar)
                Eigen::VectorXd dn = Eigen::VectorXd::Zero(nu + nf);  // normal-derivative factors
                for (int i = 0; i < nu; ++i) {
                    tr(i) = (*sd.val)(i, q);
                    Eigen::Vector2d gr =
                        g.Jinv.transpose() * Eigen::Vector2d((*sd.gx)(i, q), (*sd.gy)(i, q));
                    dn(i) = sd.normal.dot(gr);
                }
                for (int i = 0; i < nf; ++i) tr(nu + i) = -ctx.facet_val(i, q);
                // alpha/hK (u-ubar)(v-vbar) - (u-ubar) dn v - dn u (v-vbar)
                loc += wq * (pen * tr * tr.transpose() - tr * dn.transpose() - dn * tr.transpose());
            }
            auto dof = [&](int a, int c) {
                return a < nu ? sp.u_sp(sd.K, c, a) : sp.ubar_sp(f, c, a - nu);
            };
            for (int c = 0; c < 2; ++c)
                for (int a = 0; a < nu + nf; ++a)
                    for (int b = 0; b < nu + nf; ++b)
                        if (loc(a, b) != 0.0) ftrip.emplace_back(dof(a, c), dof(b, c), loc(a, b));
        }
    }

    std::vector<Triplet> trip = merge_buffers(buf);
    SparseMat A(sp.spatial_pair(), sp.spatial_pair());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

SparseMat assemble_vnorm_spatial(const SlabContext& ctx) {
    const SlabSpace& sp = ctx.space;
    std::vector<Triplet> trip;
    int nq = static_cast<int>(ctx.vol_rule.weights.size());
    for (int K = 0; K < sp.n_elems; ++K) {
        const ElementGeometry& g = ctx.geo[K];
        Eigen::MatrixXd local = Eigen::MatrixXd::Zero(sp.nSv, sp.nSv);
        for (int q = 0; q < nq; ++q) {
            double wq = ctx.vol_rule.weights(q) * g.det;
            for (int i = 0; i < sp.nSv; ++i) {
                Eigen::Vector2d gi = phys_grad(g, ctx.tab_v, i, q);
                for (int j = 0; j < sp.nSv; ++j) local(i, j) += wq * gi.dot(phys_grad(g, ctx.tab_v, j, q));
            }
        }
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < sp.nSv; ++i)
                for (int j = 0; j < sp.nSv; ++j)
                    if (local(i, j) != 0.0) trip.emplace_back(sp.u_sp(K, c, i), sp.u_sp(K, c, j), local(i, j));
    }
    int nqe = static_cast<int>(ctx.edge_rule.weights.size());
    for (int f = 0; f < sp.n_faces; ++f) {
        FaceSideData side[2];
        int ns = face_sides(ctx, f, side);
        const Face& face = ctx.faces->faces[f];
        for (int s = 0; s < ns; ++s) {
            const FaceSideData& sd = side[s];
            int nu = sp.nSv, nf = sp.nFv;
            Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(nu + nf, nu + nf);
            for (int q = 0; q < nqe; ++q) {
                double wq = ctx.edge_rule.weights(q) * face.length / ctx.geo[sd.K].hK;
                Eigen::VectorXd tr(nu + nf);
                for (int i = 0; i < nu; ++i) tr(i) = (*sd.val)(i, q);
                for (int i = 0; i < nf; ++i) tr(nu + i) = -ctx.facet_val(i, q);
                loc += wq * tr * tr.transpose();
            }
            auto dof = [&](int a, int c) { return a < nu ? sp.u_sp(sd.K, c, a) : sp.ubar_sp(f, c, a - nu); };
            for (int c = 0; c < 2; ++c)
                for (int a = 0; a < nu + nf; ++a)
                    for (int b = 0; b < nu + nf; ++b)
                        if (loc(a, b) != 0.0) trip.emplace_back(dof(a, c), dof(b, c), loc(a, b));
        }
    }
    SparseMat N(sp.spatial_pair(), sp.spatial_pair());
    N.setFromTriplets(trip.begin(), trip.end());
    return N;
}

SparseMat assemble_h1h_spatial(const SlabContext& ctx) {
    const SlabSpace& sp = ctx.space;
    std::vector<Triplet> trip;
    int nq = static_cast<int>(ctx.vol_rule.weights.size());
    for (int K = 0; K < sp.n_elems; ++K) {
        const ElementGeometry& g = ctx.geo[K];
        for (int q = 0; q < nq; ++q) {
            double wq = ctx.vol_rule.weights(q) * g.det;
            for (int i = 0; i < sp.nSv; ++i) {
                Eigen::Vector2d gi = phys_grad(g, ctx.tab_v, i, q);
                for (int j = 0; j < sp.nSv; ++j) {
                    double v = wq * gi.dot(phys_grad(g, ctx.tab_v, j, q));
                    if (v != 0.0)
                        for (int c = 0; c < 2; ++c) trip.emplace_back(sp.u_sp(K, c, i), sp.u_sp(K, c, j), v);
                }
            }
        }
    }
    int nqe = static_cast<int>(ctx.edge_rule.weights.size());
    for (int f = 0; f < sp.n_faces; ++f) {
        FaceSideData side[2];
        int ns = face_sides(ctx, f, side);
        // jump factors: +1 from left, -1 from right; boundary jump = trace.
        // 1/h_F cancels against |F| since h_F = |F|.
        for (int sa = 0; sa < ns; ++sa)
            for (int sb = 0; sb < ns; ++sb) {
                double sign = (sa == sb) ? 1.0 : -1.0;
                Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(sp.nSv, sp.nSv);
                for (int q = 0; q < nqe; ++q)
                    for (int i = 0; i < sp.nSv; ++i)
                        for (int j = 0; j < sp.nSv; ++j)
                            loc(i, j) += ctx.edge_rule.weights(q) * (*side[sa].val)(i, q) * (*side[sb].val)(j, q);
                for (int c = 0; c < 2; ++c)
                    for (int i = 0; i < sp.nSv; ++i)
                        for (int j = 0; j < sp.nSv; ++j)
                            if (loc(i, j) != 0.0)
                                trip.emplace_back(sp.u_sp(side[sa].K, c, i), sp.u_sp(side[sb].K, c, j),
                                                  sign * loc(i, j));
            }
    }
    SparseMat N(sp.spatial_u(), sp.spatial_u());
    N.setFromTriplets(trip.begin(), trip.end());
    return N;
}

Eigen::VectorXd mass_diagonal(const SlabContext& ctx) {
    const SlabSpace& sp = ctx.space;
    Eigen::VectorXd d(sp.spatial_u());
    for (int K = 0; K < sp.n_elems; ++K)
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < sp.nSv; ++i) d(sp.u_sp(K, c, i)) = ctx.geo[K].det;
    return d;
}

SparseMat assemble_b_spatial(const SlabContext& ctx) {
    const SlabSpace& sp = ctx.space;
    std::vector<Triplet> trip;
    int nq = static_cast<int>(ctx.vol_rule.weights.size());
    for (int K = 0; K < sp.n_elems; ++K) {
        const ElementGeometry& g = ctx.geo[K];
        for (int q = 0; q < nq; ++q) {
            double wq = ctx.vol_rule.weights(q) * g.det;
            for (int i = 0; i < sp.nSv; ++i) {
                Eigen::Vector2d gi = phys_grad(g, ctx.tab_v, i, q);
                for (int j = 0; j < sp.nSp; ++j) {
                    double pj = ctx.tab_p.values(j, q);
                    for (int c = 0; c < 2; ++c) {
                        double v = -wq * pj * gi(c);
                        if (v != 0.0) trip.emplace_back(sp.u_sp(K, c, i), sp.p_sp(K, j), v);
                    }
                }
            }
        }
    }
    int nqe = static_cast<int>(ctx.edge_rule.weights.size());
    for (int f = 0; f < sp.n_faces; ++f) {
        FaceSideData side[2];
        int ns = face_sides(ctx, f, side);
        const Face& face = ctx.faces->faces[f];
        for (int s = 0; s < ns; ++s) {
            const FaceSideData& sd = side[s];
            for (int q = 0; q < nqe; ++q) {
                double wq = ctx.edge_rule.weights(q) * face.length;
                for (int i = 0; i < sp.nSv; ++i) {
                    double vi = (*sd.val)(i, q);
                    for (int j = 0; j < sp.nFp; ++j) {
                        double pj = ctx.facet_val(j, q);
                        for (int c = 0; c < 2; ++c) {
                            double v = wq * vi * sd.normal(c) * pj;
                            if (v != 0.0) trip.emplace_back(sp.u_sp(sd.K, c, i), sp.pbar_sp(f, j), v);
                        }
                    }
                }
            }
        }
    }
    SparseMat B(sp.spatial_u(), sp.spatial_pres());
    B.setFromTriplets(trip.begin(), trip.end());
    return B;
}

SparseMat assemble_o_spatial(const SlabContext& ctx, const Eigen::VectorXd& w_snap) {
    const SlabSpace& sp = ctx.space;
    if (w_snap.size() != sp.spatial_u())
        throw std::invalid_argument("assemble_o_spatial: w must be an element-velocity snapshot");
    std::vector<Triplet> trip;
    int nq = static_cast<int>(ctx.vol_rule.weights.size());
    for (int K = 0; K < sp.n_elems; ++K) {
        const ElementGeometry& g = ctx.geo[K];
        // -int_K u (x) w : grad v = -int phi_i (w . grad phi_j), per component
        Eigen::MatrixXd local = Eigen::MatrixXd::Zero(sp.nSv, sp.nSv);  // (v-dof j, u-dof i)
        for (int q = 0; q < nq; ++q) {
            double wq = ctx.vol_rule.weights(q) * g.det;
            Eigen::Vector2d wval = Eigen::Vector2d::Zero();
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < sp.nSv; ++i) wval(c) += w_snap(sp.u_sp(K, c, i)) * ctx.tab_v.values(i, q);
            for (int j = 0; j < sp.nSv; ++j) {
                double wdg = wval.dot(phys_grad(g, ctx.tab_v, j, q));
                for (int i = 0; i < sp.nSv; ++i) local(j, i) -= wq * ctx.tab_v.values(i, q) * wdg;
            }
        }
        for (int c = 0; c < 2; ++c)
            for (int j = 0; j < sp.nSv; ++j)
                for (int i = 0; i < sp.nSv; ++i)
                    if (local(j, i) != 0.0) trip.emplace_back(sp.u_sp(K, c, j), sp.u_sp(K, c, i), local(j, i));
    }
    int nqe = static_cast<int>(ctx.edge_rule.weights.size());
    for (int f = 0; f < sp.n_faces; ++f) {
        FaceSideData side[2];
        int ns = face_sides(ctx, f, side);
        const Face& face = ctx.faces->faces[f];
        for (int s = 0; s < ns; ++s) {
            const FaceSideData& sd = side[s];
            int nu = sp.nSv, nf = sp.nFv;
            Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(nu + nf, nu + nf);  // (v-dof, u-dof)
            for (int q = 0; q < nqe; ++q) {
                double wn = 0.0;  // w . n from this side's trace
                for (int c = 0; c < 2; ++c) {
                    double wc = 0.0;
                    for (int i = 0; i < nu; ++i) wc += w_snap(sp.u_sp(sd.K, c, i)) * (*sd.val)(i, q);
                    wn += wc * sd.normal(c);
                }
                double wq = ctx.edge_rule.weights(q) * face.length;
                // 1/2 (w.n)(u + ubar).(v - vbar) + 1/2 |w.n| (u - ubar).(v - vbar)
                Eigen::VectorXd uf(nu + nf), vf(nu + nf);
                for (int i = 0; i < nu; ++i) {
                    uf(i) = 0.5 * (wn + std::abs(wn)) * (*sd.val)(i, q);
                    vf(i) = (*sd.val)(i, q);
                }
                for (int i = 0; i < nf; ++i) {
                    uf(nu + i) = 0.5 * (wn - std::abs(wn)) * ctx.facet_val(i, q);
                    vf(nu + i) = -ctx.facet_val(i, q);
                }
                loc += wq * vf * uf.transpose();
            }
            auto dof = [&](int a, int c) { return a < nu ? sp.u_sp(sd.K, c, a) : sp.ubar_sp(f, c, a - nu); };
            for (int c = 0; c < 2; ++c)
                for (int a = 0; a < nu + nf; ++a)
                    for (int b = 0; b < nu + nf; ++b)
                        if (loc(a, b) != 0.0) trip.emplace_back(dof(a, c), dof(b, c), loc(a, b));
        }
    }
    SparseMat O(sp.spatial_pair(), sp.spatial_pair());
    O.setFromTriplets(trip.begin(), trip.end());
    return O;
}

void expand_pair_operator(const SlabSpace& space, const SparseMat& spatial,
                          const Eigen::MatrixXd& W, std::vector<Triplet>& out) {
    for (int k = 0; k < spatial.outerSize(); ++k)
        for (SparseMat::InnerIterator it(spatial, k); it; ++it)
            for (int b = 0; b < space.nT; ++b)
                for (int a = 0; a < space.nT; ++a) {
                    double v = it.value() * W(b, a);
                    if (v != 0.0)
                        out.emplace_back(space.pair_slab_dof(static_cast<int>(it.row()), b),
                                         space.pair_slab_dof(static_cast<int>(it.col()), a), v);
                }
}

void assemble_time_terms(const SlabContext& ctx, double t0, double dt,
                         const Eigen::VectorXd& u_minus_snapshot, const ForceField& f,
                         SparseMat& Mt, Eigen::VectorXd& rhs) {
    const SlabSpace& sp = ctx.space;
    Eigen::MatrixXd theta = time_theta_matrix(sp.kt);
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(sp.spatial_u()) * sp.nT * sp.nT);
    for (int K = 0; K < sp.n_elems; ++K) {
        double det = ctx.geo[K].det;
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < sp.nSv; ++i)
                for (int r = 0; r < sp.nT; ++r)
                    for (int m = 0; m < sp.nT; ++m)
                        trip.emplace_back(sp.u_dof(K, c, i, r), sp.u_dof(K, c, i, m), det * theta(r, m));
    }
    Mt = SparseMat(sp.total, sp.total);
    Mt.setFromTriplets(trip.begin(), trip.end());

    rhs = Eigen::VectorXd::Zero(sp.total);
    // (u_n^-, v_n^+): the mode-m test trace at the slab start is (-1)^m
    for (int K = 0; K < sp.n_elems; ++K) {
        double det = ctx.geo[K].det;
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < sp.nSv; ++i) {
                double val = det * u_minus_snapshot(sp.u_sp(K, c, i));
                for (int m = 0; m < sp.nT; ++m)
                    rhs(sp.u_dof(K, c, i, m)) += (m % 2 == 0 ? 1.0 : -1.0) * val;
            }
    }
    // int_{I_n} (f, v) dt with f sampled at temporal quadrature points
    int ntq = static_cast<int>(ctx.time_rule.weights.size());
    int nq = static_cast<int>(ctx.vol_rule.weights.size());
    for (int tq = 0; tq < ntq; ++tq) {
        double s = ctx.time_rule.points(tq, 0);
        double t = t0 + dt * (s + 1.0) / 2.0;
        double wt = ctx.time_rule.weights(tq) * dt / 2.0;
        for (int K = 0; K < sp.n_elems; ++K) {
            const ElementGeometry& g = ctx.geo[K];
            for (int q = 0; q < nq; ++q) {
                Eigen::Vector2d x = g.p0 + g.J * ctx.vol_rule.points.row(q).transpose();
                Eigen::Vector2d fv;
                try {
                    fv = f(x, t);
                } catch (const std::exception& e) {
                    throw DataError(std::string("assemble_time_terms: body force not evaluable: ") + e.what());
                }
                double wq = ctx.vol_rule.weights(q) * g.det * wt;
                for (int c = 0; c < 2; ++c)
                    for (int i = 0; i < sp.nSv; ++i) {
                        double base = wq * fv(c) * ctx.tab_v.values(i, q);
                        for (int m = 0; m < sp.nT; ++m)
                            rhs(sp.u_dof(K, c, i, m)) += base * ctx.time_val(m, tq);
                    }
            }
        }
    }
}

SparseMat assemble_o_slab(const SlabContext& ctx, double dt, const Eigen::VectorXd& w_slab) {
    const SlabSpace& sp = ctx.space;
    if (w_slab.size() != static_cast<long>(sp.spatial_u()) * sp.nT)
        throw std::invalid_argument("assemble_o_slab: w must be an element-velocity slab field");
    std::vector<Triplet> trip;
    int ntq = static_cast<int>(ctx.time_rule.weights.size());
    for (int tq = 0; tq < ntq; ++tq) {
        Eigen::VectorXd w_snap = Eigen::VectorXd::Zero(sp.spatial_u());
        for (int spi = 0; spi < sp.spatial_u(); ++spi)
            for (int m = 0; m < sp.nT; ++m) w_snap(spi) += w_slab(spi * sp.nT + m) * ctx.time_val(m, tq);
        SparseMat Osp = assemble_o_spatial(ctx, w_snap);
        Eigen::MatrixXd W(sp.nT, sp.nT);
        double wt = ctx.time_rule.weights(tq) * dt / 2.0;
        for (int b = 0; b < sp.nT; ++b)
            for (int a = 0; a < sp.nT; ++a) W(b, a) = wt * ctx.time_val(b, tq) * ctx.time_val(a, tq);
        expand_pair_operator(sp, Osp, W, trip);
    }
    SparseMat O(sp.total, sp.total);
    O.setFromTriplets(trip.begin(), trip.end());
    return O;
}

SparseMat assemble_o_slab(const SlabContext& ctx, double dt, const DiscreteField& w, int slab) {
    if (w.role != FieldRole::element_velocity)
        throw std::invalid_argument("assemble_o_slab: w must be an element velocity field");
    if (w.slab != slab) throw std::invalid_argument("assemble_o_slab: w lives on a different slab");
    return assemble_o_slab(ctx, dt, w.coeffs);
}

SlabSystem assemble_slab_system(const SlabContext& ctx, double t0, double dt,
                                const Eigen::VectorXd& u_minus_snapshot, const ForceField& f,
                                double nu, double alpha, const SparseMat& A_sp,
                                const SparseMat& B_sp, const Eigen::VectorXd* w_slab) {
    const SlabSpace& sp = ctx.space;
    SlabSystem sys;
    sys.alpha = alpha;
    sys.nu = nu;
    sys.dt = dt;
    sys.t0 = t0;

    Eigen::VectorXd tmass = time_mass_diagonal(sp.kt, dt);
    {
        std::vector<Triplet> trip;
        Eigen::MatrixXd W = Eigen::MatrixXd::Zero(sp.nT, sp.nT);
        for (int m = 0; m < sp.nT; ++m) W(m, m) = tmass(m);
        expand_pair_operator(sp, A_sp, W, trip);
        sys.A = SparseMat(sp.total, sp.total);
        sys.A.setFromTriplets(trip.begin(), trip.end());
    }
    {
        std::vector<Triplet> tb, tbt, tc;
        for (int k = 0; k < B_sp.outerSize(); ++k)
            for (SparseMat::InnerIterator it(B_sp, k); it; ++it)
                for (int m = 0; m < sp.nT; ++m) {
                    int ru = sp.pair_slab_dof(static_cast<int>(it.row()), m);
                    int cp = sp.pres_slab_dof(static_cast<int>(it.col()), m);
                    tb.emplace_back(ru, cp, it.value() * tmass(m));
                    tbt.emplace_back(cp, ru, -it.value() * tmass(m));
                }
        // int_Omega p_m dx = 0 per mode: only the constant pressure mode of
        // element K integrates nontrivially, to det/sqrt(2)
        for (int K = 0; K < sp.n_elems; ++K) {
            double v = ctx.geo[K].det / std::sqrt(2.0);
            for (int m = 0; m < sp.nT; ++m) {
                tc.emplace_back(sp.lambda_dof(m), sp.p_dof(K, 0, m), v);
                tc.emplace_back(sp.p_dof(K, 0, m), sp.lambda_dof(m), v);
            }
        }
        sys.B = SparseMat(sp.total, sp.total);
        sys.B.setFromTriplets(tb.begin(), tb.end());
        sys.Bt = SparseMat(sp.total, sp.total);
        sys.Bt.setFromTriplets(tbt.begin(), tbt.end());
        sys.C = SparseMat(sp.total, sp.total);
        sys.C.setFromTriplets(tc.begin(), tc.end());
    }
    assemble_time_terms(ctx, t0, dt, u_minus_snapshot, f, sys.Mt, sys.rhs);
    if (w_slab)
        sys.O = assemble_o_slab(ctx, dt, *w_slab);
    else
        sys.O = SparseMat(sp.total, sp.total);
    return sys;
}

SparseMat combined_constrained_matrix(const SlabContext& ctx, const SlabSystem& sys,
                                      const SparseMat& O, Eigen::VectorXd& rhs) {
    const SlabSpace& sp = ctx.space;
    std::vector<uint8_t> constrained(sp.total, 0);
    for (int f = 0; f < sp.n_faces; ++f)
        if (sp.face_on_boundary[f])
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < sp.nFv; ++i)
                    for (int m = 0; m < sp.nT; ++m) constrained[sp.ubar_dof(f, c, i, m)] = 1;

    SparseMat K = sys.Mt + sys.nu * sys.A + O + sys.B + sys.Bt + sys.C;
    std::vector<Triplet> trip;
    trip.reserve(K.nonZeros() + sp.total);
    for (int k = 0; k < K.outerSize(); ++k)
        for (SparseMat::InnerIterator it(K, k); it; ++it) {
            if (constrained[it.row()] || constrained[it.col()]) continue;
            trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        }
    for (int d = 0; d < sp.total; ++d)
        if (constrained[d]) {
            trip.emplace_back(d, d, 1.0);
            rhs(d) = 0.0;
        }
    SparseMat out(sp.total, sp.total);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

double pair_bilinear(const SlabSpace& space, const SparseMat& spatial, double dt,
                     const Eigen::VectorXd& pair_a, const Eigen::VectorXd& pair_b) {
    double acc = 0.0;
    for (int m = 0; m < space.nT; ++m) {
        Eigen::VectorXd am(space.spatial_pair()), bm(space.spatial_pair());
        for (int spi = 0; spi < space.spatial_pair(); ++spi) {
            am(spi) = pair_a(spi * space.nT + m);
            bm(spi) = pair_b(spi * space.nT + m);
        }
        acc += (am.dot(spatial * bm)) * dt / (2.0 * m + 1.0);
    }
    return acc;
}

} // namespace sthdg
