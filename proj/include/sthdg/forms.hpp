#pragma once

#include <Eigen/Sparse>
#include <functional>

#include "sthdg/spaces.hpp"

namespace sthdg {

using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Body force callable f(x, t).
using ForceField = std::function<Eigen::Vector2d(const Eigen::Vector2d&, double)>;

/// Temporal coupling matrices on the Legendre time basis of one slab.
///   theta(r,m)     = L_m(1) L_r(1) - int_{-1}^{1} L_m L_r' ds   (time/mass block, dt-free)
///   time_mass(m)   = dt / (2m + 1)                              (diagonal temporal mass)
Eigen::MatrixXd time_theta_matrix(int kt);
Eigen::VectorXd time_mass_diagonal(int kt, double dt);

/// Spatial (single time snapshot) operators on the paired velocity layout
/// [element velocity; facet velocity] or the pressure layout
/// [element pressure; facet pressure].
SparseMat assemble_a_spatial(const SlabContext& ctx, double alpha);
/// Convection at the frozen field w (an element-velocity spatial snapshot).
/// Element boundary traces of w are taken from each side, as in the form.
SparseMat assemble_o_spatial(const SlabContext& ctx, const Eigen::VectorXd& w_snap);
/// b_h block: rows element-velocity spatial, cols pressure spatial.
SparseMat assemble_b_spatial(const SlabContext& ctx);
/// Gram matrix of the ||| . |||_v norm on the paired layout.
SparseMat assemble_vnorm_spatial(const SlabContext& ctx);
/// Gram matrix of the || . ||_{1,h} norm on the element-velocity layout.
SparseMat assemble_h1h_spatial(const SlabContext& ctx);
/// Element-velocity L2 mass diagonal (det J per dof).
Eigen::VectorXd mass_diagonal(const SlabContext& ctx);

/// Assembled space-time blocks of one slab, all indexed by the full slab DOF
/// layout of SlabSpace (so they can be summed directly).
struct SlabSystem {
    SparseMat A;    // viscous form (without the nu factor), time-tensorized
    SparseMat O;    // convection linearized at w, time-quadrature tensorized
    SparseMat B;    // + int b_h(p, v) dt rows in the momentum block
    SparseMat Bt;   // - int b_h(q, u) dt rows in the continuity block
    SparseMat Mt;   // -int (u, dt v) + (u^-_{n+1}, v^-_{n+1}) on element velocity
    SparseMat C;    // pressure zero-mean constraint rows/columns (one per mode)
    Eigen::VectorXd rhs;  // (u_n^-, v_n^+) + int (f, v) dt
    double alpha = 0.0, nu = 0.0;
    double dt = 0.0, t0 = 0.0;
};

/// Expand a spatial pair-layout operator into slab indexing with the given
/// temporal coupling W (entry (b, a) couples test mode b with trial mode a).
void expand_pair_operator(const SlabSpace& space, const SparseMat& spatial,
                          const Eigen::MatrixXd& W, std::vector<Triplet>& out);

/// A (viscous) and B blocks plus time terms for one slab; O is left empty
/// when `w_slab` is null, otherwise assembled at the element-velocity slab
/// field w.
SlabSystem assemble_slab_system(const SlabContext& ctx, double t0, double dt,
                                const Eigen::VectorXd& u_minus_snapshot, const ForceField& f,
                                double nu, double alpha, const SparseMat& A_sp,
                                const SparseMat& B_sp, const Eigen::VectorXd* w_slab);

/// Convection block alone (for Picard updates): w_slab is an element-velocity
/// slab field evaluated inside the temporal quadrature.
SparseMat assemble_o_slab(const SlabContext& ctx, double dt, const Eigen::VectorXd& w_slab);

/// Field-checked variant: w must be an element-velocity field living on
/// `slab`; anything else is invalid.
SparseMat assemble_o_slab(const SlabContext& ctx, double dt, const DiscreteField& w, int slab);

/// Time/mass block M_t and right-hand side r: -int (u, dt v) + trace terms
/// plus the incoming-trace and body-force moments.
void assemble_time_terms(const SlabContext& ctx, double t0, double dt,
                         const Eigen::VectorXd& u_minus_snapshot, const ForceField& f,
                         SparseMat& Mt, Eigen::VectorXd& rhs);

/// Combined matrix M_t + nu A + O + B + Bt + C with boundary facet-velocity
/// rows/columns replaced by the identity; rhs entries on constrained rows are
/// zeroed in place.
SparseMat combined_constrained_matrix(const SlabContext& ctx, const SlabSystem& sys,
                                      const SparseMat& O, Eigen::VectorXd& rhs);

/// Quadratic/bilinear convenience evaluations (slab-integrated forms).
double pair_bilinear(const SlabSpace& space, const SparseMat& spatial, double dt,
                     const Eigen::VectorXd& pair_a, const Eigen::VectorXd& pair_b);

} // namespace sthdg
