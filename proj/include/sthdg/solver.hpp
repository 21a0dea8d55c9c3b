#pragma once

#include "sthdg/benchmarks.hpp"
#include "sthdg/projections.hpp"

namespace sthdg {

/// Physical problem data of one run.
struct ProblemData {
    double nu = 1.0;
    ForceField f;
    std::function<Eigen::Vector2d(const Eigen::Vector2d&)> u0;
    double T = 1.0;
    bool convection = true;
    bool steady_discrete_start = false;

    void validate() const {
        if (!(nu > 0.0)) throw std::invalid_argument("ProblemData: nu must be positive");
        if (!(T > 0.0)) throw std::invalid_argument("ProblemData: T must be positive");
    }
};

ProblemData problem_from_benchmark(const ManufacturedSolution& m, double T);

struct SolverConfig {
    double alpha = -1.0;  // negative: default 8 ks^2
    double picard_tol = 1e-10;
    int max_picard = 50;
    double damping = 1.0;
    bool static_condensation = false;
    int vol_exactness = -1, edge_exactness = -1, time_exactness = -1;

    void validate() const {
        if (!(picard_tol > 0.0)) throw std::invalid_argument("SolverConfig: tolerance must be positive");
        if (max_picard < 1) throw std::invalid_argument("SolverConfig: need at least one iteration");
    }
    double penalty(int ks) const { return alpha > 0.0 ? alpha : 8.0 * ks * ks; }
};

/// Converged (or last) state of one slab solve.
struct SlabState {
    int slab = 0;
    Eigen::VectorXd solution;        // full slab DOF vector (velocities, pressures, multipliers)
    Eigen::VectorXd outgoing_trace;  // element velocity snapshot at t_{n+1}^-
    int picard_iters = 0;
    double picard_residual = 0.0;
    std::vector<double> residual_history;
    double discrete_residual = 0.0;  // ||rhs - K(u) u|| / ||rhs|| at the final iterate
    bool converged = false;

    Eigen::VectorXd velocity_pair(const SlabSpace& sp) const;
    Eigen::VectorXd element_velocity(const SlabSpace& sp) const;
};

/// Reusable spatial operators for a fixed (mesh, space, alpha).
struct SlabOperators {
    SparseMat A_sp;   // viscous spatial form
    SparseMat B_sp;   // pressure coupling
    SparseMat Nv_sp;  // ||| . |||_v Gram (Picard increment metric)
};
SlabOperators build_slab_operators(const SlabContext& ctx, double alpha);

/// Per-slab energy ledger (each term of the discrete energy identity).
struct SlabLedger {
    int n = 0;
    double t_end = 0.0;
    double in_sq = 0.0;     // ||u_n^-||^2
    double out_sq = 0.0;    // ||u_{n+1}^-||^2
    double jump_sq = 0.0;   // ||[u]_n||^2
    double visc2 = 0.0;     // 2 nu int a_h(u,u) dt
    double conv2 = 0.0;     // 2 int o_h(u; u,u) dt
    double f2 = 0.0;        // 2 int (f, u) dt
    double residual = 0.0;  // out + jump + visc2 + conv2 - in - f2
    int picard_iters = 0;
    double picard_residual = 0.0;
    ConformityResidual conformity;
    double grad2 = 0.0;     // 2 nu int sum_i ||G_h(u_i)||^2 dt (for the inequality slack)
};

struct RunResult {
    std::vector<SlabState> states;
    std::vector<SlabLedger> ledger;
    bool completed = false;
    int failed_slab = -1;
    Eigen::VectorXd initial_trace_snapshot;
};

/// u_0^- = projection of u0 onto the discretely divergence-free subspace.
Eigen::VectorXd initial_trace(const SlabContext& ctx, const DivProjector& div,
                              const ProblemData& data);

/// Steady Stokes solve (spatial): nu a_h(u,v) + b-terms = (f,v). Returns the
/// full spatial vector [u; p; ubar; pbar; lambda].
Eigen::VectorXd solve_steady_stokes(const SlabContext& ctx, const SlabOperators& ops, double nu,
                                    const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& f);

/// Picard iteration on one slab from the incoming trace.
SlabState picard_solve_slab(const SlabContext& ctx, const SlabOperators& ops,
                            const Eigen::VectorXd& u_minus, double t0, double dt,
                            const ProblemData& data, const SolverConfig& config);

/// March all slabs; nonconvergence aborts with partial results preserved.
RunResult run_simulation(const SlabContext& ctx, const SpaceTimeLayout& layout,
                         const ProblemData& data, const SolverConfig& config);

/// Direct sparse solve of the already-constrained system (shared by both
/// solve paths).
Eigen::VectorXd solve_sparse(const SparseMat& K, const Eigen::VectorXd& rhs);

/// Slab-local static condensation: eliminates element velocity/pressure DOFs,
/// solves the facet-plus-multiplier Schur complement, back-substitutes.
/// Produces the same solution as solve_sparse up to roundoff.
Eigen::VectorXd solve_condensed(const SlabContext& ctx, const SparseMat& K,
                                const Eigen::VectorXd& rhs);

} // namespace sthdg
