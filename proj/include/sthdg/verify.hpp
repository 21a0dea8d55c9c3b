#pragma once

#include <map>
#include <optional>
#include <string>

#include "sthdg/solver.hpp"

namespace sthdg {

/// A refinement study: jointly halved (h, tau) levels, per-level metric
/// records, and least-squares observed orders (log error vs log h).
struct StudyLevel {
    int n = 0;               // spatial subdivisions
    int N = 0;               // time slabs
    double h = 0.0, tau = 0.0;
    std::map<std::string, double> metrics;
};

struct RefinementStudy {
    std::vector<StudyLevel> levels;
    std::map<std::string, double> orders;  // fitted slope per metric
};

/// Least-squares slope of log(y) against log(h).
double fitted_order(const std::vector<double>& h, const std::vector<double>& y);

/// Operator-identity suite over seeded random fields on one mesh/space.
struct IdentityReport {
    int samples = 0;
    double visc_identity = 0.0;       // formA vs lifted rewriting, max relative
    double conv_identity = 0.0;       // formO vs lifted rewriting (w div-free)
    double positivity_identity = 0.0; // two-sided dissipation identity
    double min_dissipation = 0.0;     // min of o_h(w; v, v), should be >= -1e-12
    double lifting_identity = 0.0;    // defining identities of R (k and 2k)
    double gradient_consistency = 0.0;  // G of conforming pairs vs exact gradient
    double time_lifting_identity = 0.0;
    double time_lifting_scaling = 0.0;  // fitted scaling of the representation sum, times dt/2
    double conforming_facet_zero = 0.0; // facet terms of a conforming pair
};

IdentityReport identity_suite(const SlabContext& ctx, uint64_t seed, int samples);

/// Sampled constants of the discrete inequalities on one refinement level.
struct ConstantsLevel {
    int n = 0;
    double h = 0.0;
    double poincare = 0.0;       // max ||v||_{L2} / |||v|||_v
    double h1_vs_v = 0.0;        // max ||v||_{1,h} / |||v|||_v
    double lifting_bound = 0.0;  // max ||R||^2 / sum h_K^{-1}||v-vbar||^2
    double coercivity = 0.0;     // min a(v,v)/|||v|||_v^2 at the default penalty
    double boundedness = 0.0;    // max |a(u,v)| / (|||u||| |||v|||)
    double convection_bound = 0.0;  // max |o(u;u,v)| / (||u|| |||u||| |||v|||), d = 2
    double dual_bound = 0.0;     // max |int (Dt u_h, v)| / (int |||v|||^2)^{1/2}
};

std::vector<ConstantsLevel> constant_estimates(int base_n, int n_levels, int ks, int kt,
                                               uint64_t seed, int samples);

/// Minimum generalized Rayleigh quotient of a_h against the ||| . |||_v Gram
/// over the admissible (boundary-constrained) pair space; exact dense
/// eigensolve, negative for under-penalized alpha.
double min_coercivity_eigenvalue(const SlabContext& ctx, double alpha);

/// Manufactured-solution convergence study under joint (h, tau) halving.
/// Metrics: l2l2_error, tnorm_error, cauchy_increment (vs previous level,
/// sampled on the coarser grid).
RefinementStudy convergence_study(const ManufacturedSolution& ms, int ks, int kt, double T,
                                  int base_n, int levels, const SolverConfig& cfg);

/// Asymptotic-consistency residuals of the viscous and convection forms
/// against one smooth tensor test function; also the ablation with the
/// interpolated exact solution in place of u_h.
RefinementStudy consistency_residuals(const ManufacturedSolution& ms, int ks, int kt, double T,
                                      int base_n, int levels, const SolverConfig& cfg);

/// Both studies from a single set of per-level solves (metrics of each merged
/// into one record per level).
RefinementStudy joint_refinement_study(const ManufacturedSolution& ms, int ks, int kt, double T,
                                       int base_n, int levels, const SolverConfig& cfg);

/// Per-time-level energy accounting of a completed run.
struct EnergyRow {
    int m = 0;
    double t = 0.0;
    double unorm_sq = 0.0;       // ||u_{m+1}^-||^2
    double slack_lifted = 0.0;   // data-side minus G-based dissipation (>= -tol)
    double slack_form = 0.0;     // data-side minus a_h-based dissipation
    double cumulative_jump_sq = 0.0;
};

struct EnergyReport {
    std::vector<EnergyRow> rows;
    bool monotone_decay = false;  // only meaningful when f = 0
    double min_slack = 0.0;
    double max_identity_residual = 0.0;  // per-slab identity, relative
    double linf_l2 = 0.0;                // max sampled ||u_h(t)||
    double linf_l2_bound = 0.0;          // max ||u_m^-|| + max ||[u]_m||
};

EnergyReport energy_inequality_report(const SlabContext& ctx, const SpaceTimeLayout& layout,
                                      const RunResult& run);

/// int_delta^T ||u_h(t) - u_h(t - delta)||^2 dt for delta in {tau, 2tau, 4tau}.
std::vector<std::pair<double, double>> equicontinuity_probe(const SlabContext& ctx,
                                                            const SpaceTimeLayout& layout,
                                                            const RunResult& run);

/// Approximation-order study of the projections (time L-inf, div projection
/// H^m and L-inf, facet gap, element-projection face-term decay).
RefinementStudy projection_rate_study(int ks, int kt, int base_n, int levels);

/// Strong-convergence diagnostics of the discrete tensor test functions:
/// max |phi - Pi phi|, int ||G(Pi phi) - grad phi||^2 dt, and the
/// ||| . |||_v-stability ratio, per level.
RefinementStudy test_function_study(int ks, int kt, double T, int base_n, int levels);

} // namespace sthdg
