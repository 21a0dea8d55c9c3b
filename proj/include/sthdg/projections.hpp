#pragma once

#include <Eigen/SparseLU>
#include <memory>

#include "sthdg/forms.hpp"

namespace sthdg {

/// L2(I_n)-orthogonal projection of a scalar callable onto P_kt(I_n), as
/// Legendre coefficients on the slab [t0, t0+dt].
Eigen::VectorXd project_time(const std::function<double(double)>& g, double t0, double dt, int kt,
                             int quad_exactness = 24);

/// Element-wise L2 projection onto P_ks(K)^2 (spatial snapshot).
Eigen::VectorXd project_element(const SlabContext& ctx,
                                const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& g);

/// Face-by-face L2(F) projection onto P_ks(F)^2, zero on boundary faces.
/// The input must have well-defined face traces (callables are sampled on the
/// faces themselves).
Eigen::VectorXd project_facet(const SlabContext& ctx,
                              const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& g);

/// DG time projection: the unique p in P_kt(I_n) with p(t_n) = eta(t_n) and
/// int (eta - p) q dt = 0 for all q in P_{kt-1}(I_n).
Eigen::VectorXd dg_time_projection(const std::function<double(double)>& eta, double t0, double dt,
                                   int kt, int quad_exactness = 24);

/// Factored saddle-point solver for the L2 projection onto the discretely
/// divergence-free subspace V_h^div.
class DivProjector {
public:
    explicit DivProjector(const SlabContext& ctx);

    /// Project from velocity moments (g, phi_i)_K (element-velocity layout).
    Eigen::VectorXd project_moments(const Eigen::VectorXd& moments) const;
    /// Project a spatial callable.
    Eigen::VectorXd project(const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& g) const;
    /// Project an element-velocity spatial snapshot.
    Eigen::VectorXd project_field(const Eigen::VectorXd& u_snap) const;

    const SparseMat& b_spatial() const { return B_sp_; }

private:
    const SlabContext* ctx_;
    SparseMat B_sp_;
    std::unique_ptr<Eigen::SparseLU<SparseMat>> lu_;
    int n_u_ = 0, n_q_ = 0;
};

/// Pointwise divergence / normal-continuity diagnostics of an element
/// velocity snapshot, maxima over quadrature points.
struct ConformityResidual {
    double max_divergence = 0.0;
    double max_interior_normal_jump = 0.0;
    double max_boundary_normal_trace = 0.0;
};
ConformityResidual conformity_residual(const SlabContext& ctx, const Eigen::VectorXd& u_snap);

/// One tensor-product mode: smooth temporal factor eta and solenoidal spatial
/// factor psi with its analytic gradient.
struct SmoothMode {
    std::function<double(double)> eta;
    std::function<double(double)> eta_dt;
    std::function<Eigen::Vector2d(const Eigen::Vector2d&)> psi;
    std::function<Eigen::Matrix2d(const Eigen::Vector2d&)> grad_psi;  // row c = grad psi_c
};

/// curl of the polynomial bump 64 [x(1-x)y(1-y)]^2 on the unit square with
/// temporal bump (4 t (T-t)/T^2)^2: smooth, solenoidal, vanishing at the
/// space-time boundary.
SmoothMode bump_mode(double T);
/// A deliberately non-solenoidal mode (negative control for the builder).
SmoothMode broken_mode(double T);

/// Discrete tensor test function on one slab: (Pi phi, Pibar phi) as a
/// velocity-pair slab field.
struct TensorTestFunction {
    Eigen::VectorXd pair;  // velocity_pair slab coefficients
};

/// Projects sum_k eta_k psi_k; rejects psi with sampled divergence beyond
/// 1e-8 (DataError).
TensorTestFunction build_tensor_test_function(const SlabContext& ctx, const DivProjector& div,
                                              double t0, double dt,
                                              const std::vector<SmoothMode>& modes);

} // namespace sthdg
