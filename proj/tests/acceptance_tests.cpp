/// @file acceptance_tests.cpp
/// @brief End-to-end acceptance checks for the solver and its verification harness.
///
/// Each numbered criterion prints one PASS/FAIL line with the measured value:
///   1-3  operator identities (two independent evaluation routes), dissipation
///        sign, lifting/time-lifting defining identities
///   4-5  H(div)-conformity and the discrete energy ledger of a benchmark run
///   6    projection approximation orders over 4 refinement levels
///   7-8  consistency residuals, errors, and Cauchy increments under joint
///        (h, tau) halving
///   9    sampled inequality constants + the under-penalization negative control
///   10   static condensation vs direct solve path equivalence
///
/// Expensive runs and refinement studies are computed once and shared.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <iostream>
#include <random>

#include "sthdg/cli.hpp"
#include "sthdg/liftings.hpp"
#include "sthdg/verify.hpp"

using namespace sthdg;

namespace {

void report(int criterion, const std::string& what, bool pass) {
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << criterion << ": " << what << std::endl;
    CHECK_MESSAGE(pass, "criterion ", criterion, ": ", what);
}

struct Bundle {
    std::unique_ptr<SpatialMesh> mesh;
    std::unique_ptr<FaceTopology> topo;
    std::unique_ptr<SlabContext> ctx;
    SpaceTimeLayout layout;
    ProblemData data;
    SolverConfig cfg;
    RunResult run;
};

/// Taylor-Green run at n = 8, N = 8, nu = 0.01, (ks, kt) = (2, 1).
const Bundle& benchmark_run() {
    static Bundle b = [] {
        Bundle r;
        r.mesh = std::make_unique<SpatialMesh>(build_uniform_mesh(8));
        r.topo = std::make_unique<FaceTopology>(build_face_topology(*r.mesh));
        r.ctx = std::make_unique<SlabContext>(build_slab_context(*r.mesh, *r.topo, 2, 1));
        r.layout = uniform_layout(0.5, 8);
        r.data = problem_from_benchmark(taylor_green(0.01), 0.5);
        r.run = run_simulation(*r.ctx, r.layout, r.data, r.cfg);
        return r;
    }();
    return b;
}

const Bundle& decay_run() {
    static Bundle b = [] {
        Bundle r;
        r.mesh = std::make_unique<SpatialMesh>(build_uniform_mesh(8));
        r.topo = std::make_unique<FaceTopology>(build_face_topology(*r.mesh));
        r.ctx = std::make_unique<SlabContext>(build_slab_context(*r.mesh, *r.topo, 2, 1));
        r.layout = uniform_layout(0.5, 8);
        r.data = problem_from_benchmark(taylor_green(0.01), 0.5);
        r.data.f = [](const Eigen::Vector2d&, double) { return Eigen::Vector2d::Zero().eval(); };
        r.run = run_simulation(*r.ctx, r.layout, r.data, r.cfg);
        return r;
    }();
    return b;
}

const RefinementStudy& study_21() {
    static RefinementStudy s = [] {
        SolverConfig cfg;
        return joint_refinement_study(taylor_green(0.05), 2, 1, 0.25, 2, 4, cfg);
    }();
    return s;
}

const RefinementStudy& study_10() {
    static RefinementStudy s = [] {
        SolverConfig cfg;
        return joint_refinement_study(taylor_green(0.05), 1, 0, 0.25, 2, 4, cfg);
    }();
    return s;
}

bool strictly_decreasing(const RefinementStudy& s, const char* key, size_t from = 1) {
    for (size_t i = from; i < s.levels.size(); ++i)
        if (!(s.levels[i].metrics.at(key) < s.levels[i - 1].metrics.at(key))) return false;
    return true;
}

} // namespace

TEST_CASE("criteria 1-3: operator identities, dissipation, liftings") {
    double visc = 0.0, conv = 0.0, posid = 0.0, mindiss = 0.0, lift = 0.0, tlift = 0.0;
    int total_samples = 0;
    for (int n : {2, 4})
        for (int ks : {1, 2})
            for (int kt : {0, 1}) {
                SpatialMesh mesh = build_uniform_mesh(n);
                FaceTopology topo = build_face_topology(mesh);
                SlabContext ctx = build_slab_context(mesh, topo, ks, kt);
                IdentityReport rep = identity_suite(ctx, 1000 + n + 10 * ks + 100 * kt, 13);
                total_samples += rep.samples;
                visc = std::max(visc, rep.visc_identity);
                conv = std::max(conv, rep.conv_identity);
                posid = std::max(posid, rep.positivity_identity);
                mindiss = std::min(mindiss, rep.min_dissipation);
                lift = std::max(lift, rep.lifting_identity);
                tlift = std::max(tlift, rep.time_lifting_identity);
            }
    report(1, "viscous rewriting over " + std::to_string(total_samples) + " fields, max residual " +
                  format_double(visc),
           total_samples >= 100 && visc <= 1e-10);
    report(1, "convection rewriting (div-free w), max residual " + format_double(conv), conv <= 1e-10);
    report(2, "dissipation identity two-sided, max residual " + format_double(posid), posid <= 1e-12);
    report(2, "dissipation nonnegative, min value " + format_double(mindiss), mindiss >= -1e-12);
    report(3, "lifting/gradient defining identities, max residual " + format_double(lift), lift <= 1e-11);
    report(3, "time-lifting defining identity, max residual " + format_double(tlift), tlift <= 1e-12);

    // kt = 0 time lifting in closed form
    SpatialMesh mesh = build_uniform_mesh(2);
    FaceTopology topo = build_face_topology(mesh);
    SlabContext ctx = build_slab_context(mesh, topo, 1, 0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::VectorXd u_slab(ctx.space.spatial_u()), u_minus(ctx.space.spatial_u());
    for (int i = 0; i < ctx.space.spatial_u(); ++i) {
        u_slab(i) = unif(rng);
        u_minus(i) = unif(rng);
    }
    double dt = 0.31;
    Eigen::VectorXd R = time_lifting(ctx.space, u_slab, u_minus, dt);
    Eigen::VectorXd expect = (u_slab - u_minus) / dt;
    double res = (R - expect).cwiseAbs().maxCoeff() / expect.cwiseAbs().maxCoeff();
    report(3, "kt=0 time lifting equals jump/dt, residual " + format_double(res), res <= 1e-13);
}

TEST_CASE("criterion 4: H(div) conformity of the solved velocity") {
    const Bundle& b = benchmark_run();
    REQUIRE(b.run.completed);
    double scale = 0.0, div = 0.0, jump = 0.0, bdry = 0.0;
    for (const SlabLedger& led : b.run.ledger) {
        scale = std::max(scale, std::sqrt(led.out_sq));
        div = std::max(div, led.conformity.max_divergence);
        jump = std::max(jump, led.conformity.max_interior_normal_jump);
        bdry = std::max(bdry, led.conformity.max_boundary_normal_trace);
    }
    report(4, "pointwise divergence " + format_double(div) + " vs scale " + format_double(scale),
           div <= 1e-9 * scale);
    report(4, "interior normal jumps " + format_double(jump), jump <= 1e-9 * scale);
    report(4, "boundary normal trace " + format_double(bdry), bdry <= 1e-9 * scale);
}

TEST_CASE("criterion 5: discrete energy identity and inequality") {
    const Bundle& b = benchmark_run();
    REQUIRE(b.run.completed);
    EnergyReport rep = energy_inequality_report(*b.ctx, b.layout, b.run);
    report(5, "per-slab energy identity, max relative residual " +
                  format_double(rep.max_identity_residual),
           rep.max_identity_residual <= 1e-8);

    const Bundle& d = decay_run();
    REQUIRE(d.run.completed);
    EnergyReport drep = energy_inequality_report(*d.ctx, d.layout, d.run);
    report(5, "f = 0: time-level energies non-increasing", drep.monotone_decay);
    double scale = d.run.ledger.front().in_sq;
    report(5, "energy-inequality slack >= -1e-8 scale, min " + format_double(drep.min_slack),
           drep.min_slack >= -1e-8 * scale);
    // forced run obeys the inequality direction as well
    double fscale = b.run.ledger.front().in_sq + std::abs(rep.rows.back().slack_form) + 1.0;
    report(5, "forced run slack >= -1e-8 scale, min " + format_double(rep.min_slack),
           rep.min_slack >= -1e-8 * fscale);
}

TEST_CASE("criterion 6: projection approximation orders") {
    bool ok = true;
    std::string msg;
    for (auto [ks, kt] : {std::pair{1, 0}, std::pair{2, 1}}) {
        RefinementStudy st = projection_rate_study(ks, kt, 4, 4);
        double t = st.orders.at("time_linf"), l2 = st.orders.at("div_l2"),
               h1 = st.orders.at("div_h1"), li = st.orders.at("div_linf");
        bool pass = std::abs(t - (kt + 1)) <= 0.3 && std::abs(l2 - (ks + 1)) <= 0.3 &&
                    std::abs(h1 - ks) <= 0.3 && li >= 0.5;
        msg += " (ks=" + std::to_string(ks) + ",kt=" + std::to_string(kt) + ": time " +
               format_double(t) + ", L2 " + format_double(l2) + ", H1 " + format_double(h1) +
               ", Linf " + format_double(li) + ")";
        ok = ok && pass;
    }
    report(6, "observed orders within 0.3 of targets" + msg, ok);
}

TEST_CASE("criterion 7: asymptotic-consistency residuals decrease strictly") {
    const RefinementStudy& s = study_21();
    bool visc = strictly_decreasing(s, "visc_residual");
    bool conv = strictly_decreasing(s, "conv_residual");
    std::string vals;
    for (const auto& lev : s.levels)
        vals += " " + format_double(lev.metrics.at("visc_residual"));
    report(7, "viscous residuals" + vals, visc);
    vals.clear();
    for (const auto& lev : s.levels)
        vals += " " + format_double(lev.metrics.at("conv_residual"));
    report(7, "convection residuals" + vals, conv);
}

TEST_CASE("criterion 8: errors and cauchy increments decrease strictly") {
    for (auto [name, study] : {std::pair<const char*, const RefinementStudy*>{"(1,0)", &study_10()},
                               std::pair<const char*, const RefinementStudy*>{"(2,1)", &study_21()}}) {
        bool err = strictly_decreasing(*study, "l2l2_error");
        bool cauchy = strictly_decreasing(*study, "cauchy_increment", 2);
        std::string vals;
        for (const auto& lev : study->levels) vals += " " + format_double(lev.metrics.at("l2l2_error"));
        report(8, std::string(name) + " l2l2 errors" + vals, err);
        vals.clear();
        for (size_t i = 1; i < study->levels.size(); ++i)
            vals += " " + format_double(study->levels[i].metrics.at("cauchy_increment"));
        report(8, std::string(name) + " cauchy increments" + vals, cauchy);
    }
    // soft expectation recorded alongside the hard monotonicity checks
    double order = study_21().orders.at("l2l2_error");
    report(8, "(2,1) observed l2l2 order " + format_double(order) + " >= 1.5", order >= 1.5);
}

TEST_CASE("criterion 9: inequality constants bounded, under-penalization breaks coercivity") {
    std::vector<ConstantsLevel> consts = constant_estimates(2, 3, 1, 0, 99, 30);
    auto bounded = [&](const char* name, auto pick) {
        double running = 0.0;
        for (size_t i = 0; i + 1 < consts.size(); ++i) running = std::max(running, pick(consts[i]));
        bool pass = pick(consts.back()) <= 1.2 * running;
        report(9, std::string(name) + " bounded across levels (final " +
                      format_double(pick(consts.back())) + ", running max " + format_double(running) + ")",
               pass);
    };
    bounded("poincare ratio", [](const ConstantsLevel& c) { return c.poincare; });
    bounded("1,h-vs-v ratio", [](const ConstantsLevel& c) { return c.h1_vs_v; });
    bounded("lifting bound", [](const ConstantsLevel& c) { return c.lifting_bound; });
    bounded("a_h boundedness", [](const ConstantsLevel& c) { return c.boundedness; });
    bounded("convection bound", [](const ConstantsLevel& c) { return c.convection_bound; });
    bounded("dual-norm bound", [](const ConstantsLevel& c) { return c.dual_bound; });
    bool coercive = true;
    for (const auto& c : consts) coercive = coercive && c.coercivity > 0.0;
    report(9, "coercivity positive at the default penalty", coercive);

    SpatialMesh mesh = build_uniform_mesh(2);
    FaceTopology topo = build_face_topology(mesh);
    SlabContext ctx = build_slab_context(mesh, topo, 1, 0);
    double eig_good = min_coercivity_eigenvalue(ctx, 8.0);
    double eig_bad = min_coercivity_eigenvalue(ctx, 0.01);
    report(9, "negative control: min eigenvalue " + format_double(eig_bad) + " at alpha 0.01",
           eig_bad < 0.0 && eig_good > 0.0);
}

TEST_CASE("criterion 10: static condensation matches the direct path") {
    const Bundle& b = benchmark_run();
    REQUIRE(b.run.completed);
    SlabOperators ops = build_slab_operators(*b.ctx, b.cfg.penalty(2));
    SolverConfig cond = b.cfg;
    cond.static_condensation = true;
    SlabState direct = picard_solve_slab(*b.ctx, ops, b.run.initial_trace_snapshot, 0.0,
                                         b.layout.dt(0), b.data, b.cfg);
    SlabState cstate = picard_solve_slab(*b.ctx, ops, b.run.initial_trace_snapshot, 0.0,
                                         b.layout.dt(0), b.data, cond);
    double scale = direct.solution.cwiseAbs().maxCoeff();
    double diff = (direct.solution - cstate.solution).cwiseAbs().maxCoeff();
    report(10, "all slab coefficients match to 1e-9 (max diff " + format_double(diff) +
                   ", scale " + format_double(scale) + ")",
           diff <= 1e-9 * scale);
}
