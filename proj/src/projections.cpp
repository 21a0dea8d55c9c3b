#include "sthdg/projections.hpp"

#include <cmath>

namespace sthdg {

Eigen::VectorXd project_time(const std::function<double(double)>& g, double t0, double dt, int kt,
                             int quad_exactness) {
    QuadratureRule r = quadrature(Cell::interval, quad_exactness);
    ReferenceBasis tb = interval_basis(kt);
    Eigen::MatrixXd V = tb.values(r.points);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(kt + 1);
    for (int q = 0; q < r.weights.size(); ++q) {
        double t = t0 + dt * (r.points(q, 0) + 1.0) / 2.0;
        double gv = g(t);
        for (int m = 0; m <= kt; ++m) c(m) += r.weights(q) * gv * V(m, q) * (2.0 * m + 1.0) / 2.0;
    }
    return c;
}

Eigen::VectorXd project_element(const SlabContext& ctx,
                                const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& g) {
    return fit_velocity_snapshot(ctx, g);
}

Eigen::VectorXd project_facet(const SlabContext& ctx,
                              const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& g) {
    return fit_facet_snapshot(ctx, g);
}

Eigen::VectorXd dg_time_projection(const std::function<double(double)>& eta, double t0, double dt,
                                   int kt, int quad_exactness) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(kt + 1);
    if (kt >= 1) {
        Eigen::VectorXd full = project_time(eta, t0, dt, kt - 1, quad_exactness);
        p.head(kt) = full;
    }
    // left endpoint match fixes the last coefficient: p(t_n) = eta(t_n)
    double target = eta(t0);
    double partial = 0.0;
    for (int m = 0; m < kt; ++m) partial += (m % 2 == 0 ? 1.0 : -1.0) * p(m);
    p(kt) = (kt % 2 == 0 ? 1.0 : -1.0) * (target - partial);
    return p;
}

DivProjector::DivProjector(const SlabContext& ctx) : ctx_(&ctx) {
    const SlabSpace& sp = ctx.space;
    B_sp_ = assemble_b_spatial(ctx);
    n_u_ = sp.spatial_u();
    n_q_ = sp.spatial_pres();
    int total = n_u_ + n_q_ + 1;
    std::vector<Triplet> trip;
    Eigen::VectorXd mass = mass_diagonal(ctx);
    for (int i = 0; i < n_u_; ++i) trip.emplace_back(i, i, mass(i));
    for (int k = 0; k < B_sp_.outerSize(); ++k)
        for (SparseMat::InnerIterator it(B_sp_, k); it; ++it) {
            trip.emplace_back(static_cast<int>(it.row()), n_u_ + static_cast<int>(it.col()), it.value());
            trip.emplace_back(n_u_ + static_cast<int>(it.col()), static_cast<int>(it.row()), it.value());
        }
    for (int K = 0; K < sp.n_elems; ++K) {
        double v = ctx.geo[K].det / std::sqrt(2.0);
        trip.emplace_back(n_u_ + sp.p_sp(K, 0), total - 1, v);
        trip.emplace_back(total - 1, n_u_ + sp.p_sp(K, 0), v);
    }
    SparseMat S(total, total);
    S.setFromTriplets(trip.begin(), trip.end());
    lu_ = std::make_unique<Eigen::SparseLU<SparseMat>>();
    lu_->compute(S);
    if (lu_->info() != Eigen::Success)
        throw ConfigError("DivProjector: singular saddle system (broken mean constraint?)");
}

Eigen::VectorXd DivProjector::project_moments(const Eigen::VectorXd& moments) const {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_u_ + n_q_ + 1);
    rhs.head(n_u_) = moments;
    Eigen::VectorXd sol = lu_->solve(rhs);
    return sol.head(n_u_);
}

Eigen::VectorXd DivProjector::project(const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& g) const {
    Eigen::VectorXd fit = fit_velocity_snapshot(*ctx_, g);
    Eigen::VectorXd mass = mass_diagonal(*ctx_);
    return project_moments(mass.cwiseProduct(fit));
}

Eigen::VectorXd DivProjector::project_field(const Eigen::VectorXd& u_snap) const {
    Eigen::VectorXd mass = mass_diagonal(*ctx_);
    return project_moments(mass.cwiseProduct(u_snap));
}

ConformityResidual conformity_residual(const SlabContext& ctx, const Eigen::VectorXd& u_snap) {
    const SlabSpace& sp = ctx.space;
    ConformityResidual out;
    int nq = static_cast<int>(ctx.vol_rule.weights.size());
    for (int K = 0; K < sp.n_elems; ++K) {
        const ElementGeometry& g = ctx.geo[K];
        for (int q = 0; q < nq; ++q) {
            double div = 0.0;
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < sp.nSv; ++i) {
                    Eigen::Vector2d gr = g.Jinv.transpose() *
                                         Eigen::Vector2d(ctx.tab_v.grad_x(i, q), ctx.tab_v.grad_y(i, q));
                    div += u_snap(sp.u_sp(K, c, i)) * gr(c);
                }
            out.max_divergence = std::max(out.max_divergence, std::abs(div));
        }
    }
    int nqe = static_cast<int>(ctx.edge_rule.weights.size());
    for (int f = 0; f < sp.n_faces; ++f) {
        const Face& face = ctx.faces->faces[f];
        for (int q = 0; q < nqe; ++q) {
            auto normal_component = [&](int K, const Eigen::MatrixXd& val) {
                double un = 0.0;
                for (int c = 0; c < 2; ++c) {
                    double uc = 0.0;
                    for (int i = 0; i < sp.nSv; ++i) uc += u_snap(sp.u_sp(K, c, i)) * val(i, q);
                    un += uc * face.normal(c);
                }
                return un;
            };
            double unL = normal_component(face.left, ctx.side_left[f].val);
            if (face.boundary())
                out.max_boundary_normal_trace = std::max(out.max_boundary_normal_trace, std::abs(unL));
            else {
                double unR = normal_component(face.right, ctx.side_right[f].val);
                out.max_interior_normal_jump = std::max(out.max_interior_normal_jump, std::abs(unL - unR));
            }
        }
    }
    return out;
}

SmoothMode bump_mode(double T) {
    SmoothMode m;
    double c = 16.0 / (T * T);
    m.eta = [c, T](double t) { double q = t * (T - t); return c * c * q * q; };
    m.eta_dt = [c, T](double t) { double q = t * (T - t); return 2.0 * c * c * q * (T - 2.0 * t); };
    m.psi = [](const Eigen::Vector2d& x) {
        double g = x.x() * (1 - x.x()), h = x.y() * (1 - x.y());
        double gp = 1 - 2 * x.x(), hp = 1 - 2 * x.y();
        return Eigen::Vector2d(128.0 * g * g * h * hp, -128.0 * g * gp * h * h);
    };
    m.grad_psi = [](const Eigen::Vector2d& x) {
        double g = x.x() * (1 - x.x()), h = x.y() * (1 - x.y());
        double gp = 1 - 2 * x.x(), hp = 1 - 2 * x.y();
        Eigen::Matrix2d J;
        J(0, 0) = 256.0 * g * gp * h * hp;
        J(0, 1) = 128.0 * g * g * (hp * hp - 2.0 * h);
        J(1, 0) = -128.0 * (gp * gp - 2.0 * g) * h * h;
        J(1, 1) = -256.0 * g * gp * h * hp;
        return J;
    };
    return m;
}

SmoothMode broken_mode(double T) {
    SmoothMode m = bump_mode(T);
    m.psi = [](const Eigen::Vector2d& x) { return Eigen::Vector2d(x.x() * x.x(), x.y()); };
    m.grad_psi = [](const Eigen::Vector2d& x) {
        Eigen::Matrix2d J;
        J << 2 * x.x(), 0, 0, 1;
        return J;
    };
    return m;
}

TensorTestFunction build_tensor_test_function(const SlabContext& ctx, const DivProjector& div,
                                              double t0, double dt,
                                              const std::vector<SmoothMode>& modes) {
    const SlabSpace& sp = ctx.space;
    TensorTestFunction out;
    out.pair = Eigen::VectorXd::Zero(static_cast<long>(sp.spatial_pair()) * sp.nT);
    for (const SmoothMode& mode : modes) {
        // solenoidality check at volume quadrature points
        for (int K = 0; K < sp.n_elems; ++K) {
            const ElementGeometry& g = ctx.geo[K];
            for (int q = 0; q < ctx.vol_rule.weights.size(); q += 3) {
                Eigen::Vector2d x = g.p0 + g.J * ctx.vol_rule.points.row(q).transpose();
                double d = mode.grad_psi(x).trace();
                if (std::abs(d) > 1e-8)
                    throw DataError("build_tensor_test_function: psi is not solenoidal");
            }
        }
        Eigen::VectorXd eta_c = project_time(mode.eta, t0, dt, sp.kt);
        Eigen::VectorXd w = div.project(mode.psi);
        Eigen::VectorXd wbar = project_facet(ctx, mode.psi);
        for (int spi = 0; spi < sp.spatial_u(); ++spi)
            for (int m = 0; m < sp.nT; ++m) out.pair(spi * sp.nT + m) += w(spi) * eta_c(m);
        for (int spi = 0; spi < sp.spatial_ubar(); ++spi)
            for (int m = 0; m < sp.nT; ++m)
                out.pair((sp.spatial_u() + spi) * sp.nT + m) += wbar(spi) * eta_c(m);
    }
    return out;
}

} // namespace sthdg
