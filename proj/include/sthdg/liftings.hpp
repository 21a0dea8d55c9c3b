#pragma once

#include "sthdg/spaces.hpp"

namespace sthdg {

/// Element-space vector field of degree k produced by a lifting or discrete
/// gradient; coefficient layout (K*2 + c)*dim P_k + j.
struct LiftedField {
    int degree = 0;
    int slab = 0;
    Eigen::VectorXd coeffs;
};

/// Tabulations for lifting into P_k (k is ks or 2 ks).
struct LiftingWorkspace {
    int k = 0;
    ReferenceBasis basis;      // simplex basis of degree k
    int nP = 0;
    QuadratureRule vol_rule;   // exact for products of two degree-k fields
    Tabulation tab;            // lifting basis at vol points
    Tabulation tab_v;          // velocity basis (degree ks) at vol points
    std::vector<SlabContext::SideTab> side;  // lifting basis at face points, left then right
    int side_stride = 0;                     // faces count; right side at f + stride
};

LiftingWorkspace build_lifting_workspace(const SlabContext& ctx, int k);

/// Global spatial lifting of the element-facet mismatch of component `comp`:
/// R in P_k(K)^2 per element with
///   sum_K int_K R . w = sum_K int_{dK} (v_i - vbar_i) w . n   for all w of degree k.
/// Inputs are spatial snapshots.
LiftedField spatial_lifting(const SlabContext& ctx, const LiftingWorkspace& ws,
                            const Eigen::VectorXd& u_snap, const Eigen::VectorXd& ubar_snap, int comp);

/// Discrete gradient G_h^k(v_i, vbar_i) = grad_h v_i - R_h^k(v_i - vbar_i).
LiftedField discrete_gradient(const SlabContext& ctx, const LiftingWorkspace& ws,
                              const Eigen::VectorXd& u_snap, const Eigen::VectorXd& ubar_snap, int comp);

/// L2 inner product of two lifted fields over Omega (exact, orthonormal bases).
double lifted_inner(const SlabContext& ctx, const LiftedField& a, const LiftedField& b);

/// Residual of the defining identity of R against every degree-k test field,
/// max over elements/test functions, relative to the data scale.
double lifting_identity_residual(const SlabContext& ctx, const LiftingWorkspace& ws,
                                 const LiftedField& R, const Eigen::VectorXd& u_snap,
                                 const Eigen::VectorXd& ubar_snap, int comp);

/// Time lifting R^{kt}(u) on one slab: solves
///   int_{I_n} (R, v) dt = ([u]_n, v_n^+)  for all v in P_kt(I_n; V_h).
/// `u_minus` is the incoming trace (spatial snapshot); returns an
/// element-velocity slab field.
Eigen::VectorXd time_lifting(const SlabSpace& space, const Eigen::VectorXd& u_slab,
                             const Eigen::VectorXd& u_minus, double dt);

/// Broken time derivative of an element-velocity slab field.
Eigen::VectorXd broken_time_derivative(const SlabSpace& space, const Eigen::VectorXd& u_slab, double dt);

/// Discrete time derivative D_t^{kt}(u) = broken derivative + time lifting.
Eigen::VectorXd discrete_time_derivative(const SlabSpace& space, const Eigen::VectorXd& u_slab,
                                         const Eigen::VectorXd& u_minus, double dt);

/// Fitted scaling gamma between the computed lifting and the representation
/// sum ((u_n^+ - u_n^-)/2) sum_m (-1)^m (2m+1) L_m built with unit-normalized
/// Legendre polynomials. Reports how the mapped polynomials must be scaled
/// for the printed formula to reproduce the defining solve (gamma = 2/dt).
double time_lifting_fitted_scaling(const SlabSpace& space, const Eigen::VectorXd& u_slab,
                                   const Eigen::VectorXd& u_minus, double dt);

} // namespace sthdg
