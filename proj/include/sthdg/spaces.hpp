#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "sthdg/basis.hpp"
#include "sthdg/mesh.hpp"

namespace sthdg {

/// DOF map for the four tensor-product spaces on one slab. Block order is
/// element velocity, element pressure, facet velocity, facet pressure, then
/// one pressure-mean multiplier per temporal mode. Within each block the
/// layout is entity-major, then component, then spatial basis function, with
/// the temporal mode fastest:
///   uDOF(K,c,i,m)    = off_u    + ((K*2 + c)*nSv + i)*nT + m
///   pDOF(K,i,m)      = off_p    + (K*nSp + i)*nT + m
///   ubarDOF(F,c,i,m) = off_ubar + ((F*2 + c)*nFv + i)*nT + m
///   pbarDOF(F,i,m)   = off_pbar + (F*nFp + i)*nT + m
/// Facet velocity rows on boundary faces are constrained to zero.
struct SlabSpace {
    int ks = 1, kt = 0;
    int nT = 1;              // kt + 1 temporal modes
    int n_elems = 0, n_faces = 0;
    int nSv = 0;             // dim P_ks on the triangle
    int nSp = 0;             // dim P_{ks-1}
    int nFv = 0;             // ks + 1 (facet velocity, per component)
    int nFp = 0;             // ks + 1 (facet pressure)
    int off_u = 0, off_p = 0, off_ubar = 0, off_pbar = 0, off_lambda = 0;
    int total = 0;
    std::vector<uint8_t> face_on_boundary;

    int u_dof(int K, int c, int i, int m) const { return off_u + ((K * 2 + c) * nSv + i) * nT + m; }
    int p_dof(int K, int i, int m) const { return off_p + (K * nSp + i) * nT + m; }
    int ubar_dof(int F, int c, int i, int m) const { return off_ubar + ((F * 2 + c) * nFv + i) * nT + m; }
    int pbar_dof(int F, int i, int m) const { return off_pbar + (F * nFp + i) * nT + m; }
    int lambda_dof(int m) const { return off_lambda + m; }

    // spatial (single-mode) layouts used by the per-mode operators
    int spatial_u() const { return n_elems * 2 * nSv; }
    int spatial_ubar() const { return n_faces * 2 * nFv; }
    int spatial_pair() const { return spatial_u() + spatial_ubar(); }
    int spatial_p() const { return n_elems * nSp; }
    int spatial_pbar() const { return n_faces * nFp; }
    int spatial_pres() const { return spatial_p() + spatial_pbar(); }
    int u_sp(int K, int c, int i) const { return (K * 2 + c) * nSv + i; }
    int ubar_sp(int F, int c, int i) const { return spatial_u() + (F * 2 + c) * nFv + i; }
    int p_sp(int K, int i) const { return K * nSp + i; }
    int pbar_sp(int F, int i) const { return spatial_p() + F * nFp + i; }

    /// Map a spatial pair index (velocity) and temporal mode to the slab DOF.
    int pair_slab_dof(int sp, int m) const {
        return sp < spatial_u() ? off_u + sp * nT + m : off_ubar + (sp - spatial_u()) * nT + m;
    }
    /// Map a spatial pressure index and temporal mode to the slab DOF.
    int pres_slab_dof(int sp, int m) const {
        return sp < spatial_p() ? off_p + sp * nT + m : off_pbar + (sp - spatial_p()) * nT + m;
    }
};

SlabSpace build_slab_space(const SpatialMesh& mesh, const FaceTopology& faces, int ks, int kt);

enum class FieldRole {
    element_velocity,
    facet_velocity,
    element_pressure,
    facet_pressure,
    velocity_pair,      // element velocity block followed by facet velocity block
    velocity_snapshot,  // element velocity at a single time level (spatial coefficients)
};

/// Coefficients of a discrete function on one slab (or one time level for
/// velocity_snapshot).
struct DiscreteField {
    int slab = 0;
    FieldRole role = FieldRole::element_velocity;
    Eigen::VectorXd coeffs;
};

int field_length(const SlabSpace& space, FieldRole role);
DiscreteField zero_field(const SlabSpace& space, FieldRole role, int slab = 0);

/// Assembly-side caches: geometry, reference bases, quadrature rules and
/// pre-tabulated basis values on volumes and face sides.
struct SlabContext {
    const SpatialMesh* mesh = nullptr;
    const FaceTopology* faces = nullptr;
    MeshGeometry geo;
    SlabSpace space;

    ReferenceBasis basis_v, basis_p, basis_f, basis_t;
    QuadratureRule vol_rule;   // triangle
    Tabulation tab_v, tab_p;   // at vol_rule points
    QuadratureRule edge_rule;  // on (0,1)
    Eigen::MatrixXd facet_val; // (ks+1) x nq, edge basis at edge_rule points

    struct SideTab {
        Eigen::MatrixXd val, gx, gy;  // element velocity basis at face points (reference grads)
    };
    std::vector<SideTab> side_left, side_right;

    QuadratureRule time_rule;  // on (-1,1)
    Eigen::MatrixXd time_val;  // (kt+1) x ntq

    /// Reference points inside element K corresponding to the edge-rule
    /// points of face f (seen from the given side).
    Eigen::MatrixXd face_ref_points(int f, bool left_side) const;
};

/// vol/edge/time exactness default to 3 ks + 2 and 3 kt + 2 when negative.
SlabContext build_slab_context(const SpatialMesh& mesh, const FaceTopology& faces, int ks, int kt,
                               int vol_exactness = -1, int edge_exactness = -1,
                               int time_exactness = -1);

/// Legendre time-basis values at slab-local coordinate s in [-1,1].
Eigen::VectorXd time_basis_values(int kt, double s);

/// Spatial coefficients of an element-velocity slab field at temporal mode m.
Eigen::VectorXd mode_snapshot(const SlabSpace& space, const Eigen::VectorXd& slab_u, int m);
/// ... of the facet part of a pair field at mode m.
Eigen::VectorXd mode_snapshot_facet(const SlabSpace& space, const Eigen::VectorXd& slab_ubar, int m);
/// Trace of an element-velocity slab field at the slab start (side=-1) or end
/// (side=+1).
Eigen::VectorXd trace_snapshot(const SlabSpace& space, const Eigen::VectorXd& slab_u, int side);

struct VelocityEval {
    Eigen::Vector2d value = Eigen::Vector2d::Zero();
    Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();   // broken gradient, columns d/dx, d/dy
    Eigen::Vector2d time_deriv = Eigen::Vector2d::Zero();
};

/// Evaluate an element-velocity slab field (or snapshot with s ignored)
/// inside element K. `x` must lie in K (tolerance 1e-12); throws
/// std::domain_error otherwise. `s` is the slab-local time in [-1,1] and `dt`
/// the slab length (for the time derivative).
VelocityEval evaluate_velocity(const SlabContext& ctx, const Eigen::VectorXd& coeffs, FieldRole role,
                               int K, const Eigen::Vector2d& x, double s = 0.0, double dt = 1.0);

struct FaceValues {
    Eigen::Vector2d jump;            // v^L - v^R (trace on boundary faces)
    Eigen::Vector2d average;         // (v^L + v^R)/2 (trace on boundary faces)
    Eigen::Vector2d mismatch_left;   // (v - vbar) seen from the left element
    Eigen::Vector2d mismatch_right;  // (v - vbar) seen from the right element (zero on boundary)
};

/// Jumps, averages and element-facet mismatches of a velocity pair at face
/// parameter sf in [0,1] and slab-local time s.
FaceValues face_values(const SlabContext& ctx, const Eigen::VectorXd& pair_coeffs, int f, double sf,
                       double s);

/// Snapshot norms. Velocity snapshots are spatial element (and facet)
/// coefficient vectors.
double l2_norm_snapshot(const SlabContext& ctx, const Eigen::VectorXd& u_snap);
double norm_1h_snapshot(const SlabContext& ctx, const Eigen::VectorXd& u_snap);
double norm_v_snapshot(const SlabContext& ctx, const Eigen::VectorXd& u_snap,
                       const Eigen::VectorXd& ubar_snap);

/// Slab-integrated squared norms: int_I ||| (u, ubar) |||_v^2 dt and the
/// element-field analogues (mode-diagonal thanks to the Legendre time basis).
double norm_v_slab_sq(const SlabContext& ctx, double dt, const Eigen::VectorXd& pair_slab);
double norm_1h_slab_sq(const SlabContext& ctx, double dt, const Eigen::VectorXd& u_slab);
double l2_slab_sq(const SlabContext& ctx, double dt, const Eigen::VectorXd& u_slab);

/// L2-fit of callables into the discrete spaces (exact on polynomials of
/// matching degree, hence a round-trip identity there).
Eigen::VectorXd fit_velocity_snapshot(const SlabContext& ctx,
                                      const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& g);
Eigen::VectorXd fit_velocity_slab(const SlabContext& ctx, double t0, double dt,
                                  const std::function<Eigen::Vector2d(const Eigen::Vector2d&, double)>& g);
/// include_boundary bypasses the boundary-row constraint (raw trace fit).
Eigen::VectorXd fit_facet_snapshot(const SlabContext& ctx,
                                   const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& g,
                                   bool include_boundary = false);
Eigen::VectorXd fit_facet_slab(const SlabContext& ctx, double t0, double dt,
                               const std::function<Eigen::Vector2d(const Eigen::Vector2d&, double)>& g);

/// Zero the boundary-face rows of a facet-velocity (spatial or slab) vector.
void zero_boundary_facet_rows(const SlabSpace& space, Eigen::VectorXd& ubar, bool slab_layout);

} // namespace sthdg
