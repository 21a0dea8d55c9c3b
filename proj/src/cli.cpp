#include "sthdg/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace sthdg {

namespace {

struct Problem {
    SpatialMesh mesh;
    FaceTopology topo;
    SlabContext ctx;
    SpaceTimeLayout layout;
    ManufacturedSolution ms;
    ProblemData data;
    SolverConfig solver;
};

Problem setup(const RunConfig& cfg) {
    cfg.validate();
    Problem p;
    p.mesh = cfg.mesh_file.empty() ? build_uniform_mesh(cfg.mesh_n) : load_mesh(cfg.mesh_file);
    p.topo = build_face_topology(p.mesh);
    p.ctx = build_slab_context(p.mesh, p.topo, cfg.ks, cfg.kt);
    p.layout = uniform_layout(cfg.T, cfg.N);
    p.ms = benchmark_by_name(cfg.benchmark, cfg.nu);
    p.data = problem_from_benchmark(p.ms, cfg.T);
    p.solver.alpha = cfg.alpha;
    p.solver.picard_tol = cfg.picard_tol;
    p.solver.max_picard = cfg.max_picard;
    p.solver.static_condensation = cfg.static_condensation;
    return p;
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    // probe writability
    std::string probe = dir + "/.write_probe";
    {
        std::ofstream f(probe);
        if (!f) throw IoError("output directory not writable: " + dir);
    }
    std::filesystem::remove(probe, ec);
}

void write_run_artifacts(const RunConfig& cfg, const Problem& p, const RunResult& res) {
    const SlabSpace& sp = p.ctx.space;
    std::vector<std::vector<double>> energy_rows, conf_rows;
    for (const SlabLedger& led : res.ledger) {
        energy_rows.push_back({static_cast<double>(led.n), led.t_end, led.in_sq, led.out_sq,
                               led.jump_sq, led.visc2, led.conv2, led.f2, led.residual, led.grad2,
                               static_cast<double>(led.picard_iters), led.picard_residual});
        conf_rows.push_back({static_cast<double>(led.n), led.t_end, led.conformity.max_divergence,
                             led.conformity.max_interior_normal_jump,
                             led.conformity.max_boundary_normal_trace});
    }
    write_csv(cfg.out_dir + "/energy.csv",
              {"slab", "t_end", "in_sq", "out_sq", "jump_sq", "visc2", "conv2", "f2", "residual",
               "grad2", "picard_iters", "picard_residual"},
              energy_rows);
    write_csv(cfg.out_dir + "/conformity.csv",
              {"slab", "t_end", "max_divergence", "max_normal_jump", "max_boundary_normal"},
              conf_rows);
    for (size_t n = 0; n < res.states.size(); ++n) {
        Eigen::VectorXd u_snap = res.states[n].outgoing_trace;
        Eigen::VectorXd p_slab =
            res.states[n].solution.segment(sp.off_p, static_cast<long>(sp.spatial_p()) * sp.nT);
        Eigen::VectorXd p_snap = pressure_snapshot(sp, p_slab, +1.0);
        char name[64];
        std::snprintf(name, sizeof(name), "/fields_%04zu.vtk", n);
        write_vtk_snapshot(cfg.out_dir + name, p.ctx, u_snap, p_snap);
    }
}

} // namespace

int cmd_run(const RunConfig& cfg) {
    try {
        Problem p = setup(cfg);
        ensure_out_dir(cfg.out_dir);
        RunResult res = run_simulation(p.ctx, p.layout, p.data, p.solver);
        write_run_artifacts(cfg, p, res);
        if (!res.completed) {
            std::cerr << "run: slab " << res.failed_slab << " did not converge (residual "
                      << (res.states.empty() ? 0.0 : res.states.back().picard_residual) << ")\n";
            return exit_nonconvergence;
        }
        std::cout << "run: " << res.ledger.size() << " slabs, final energy "
                  << format_double(res.ledger.back().out_sq) << "\n";
        return exit_ok;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_io_error;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    }
}

int cmd_verify(const RunConfig& cfg) {
    try {
        cfg.validate();
        ensure_out_dir(cfg.out_dir);
        bool ok = true;
        auto check = [&ok](const std::string& name, bool pass) {
            std::cout << (pass ? "PASS " : "FAIL ") << name << "\n";
            ok = ok && pass;
        };

        // operator identities on a small builtin mesh
        int n_id = std::min(cfg.mesh_n, 4);
        SpatialMesh mesh = build_uniform_mesh(n_id);
        FaceTopology topo = build_face_topology(mesh);
        SlabContext ctx = build_slab_context(mesh, topo, cfg.ks, cfg.kt);
        IdentityReport rep = identity_suite(ctx, cfg.seed, 25);
        check("identity.viscous", rep.visc_identity <= 1e-10);
        check("identity.convection", rep.conv_identity <= 1e-10);
        check("identity.dissipation", rep.positivity_identity <= 1e-12);
        check("identity.dissipation_sign", rep.min_dissipation >= -1e-12);
        check("identity.liftings", rep.lifting_identity <= 1e-11);
        check("identity.time_lifting", rep.time_lifting_identity <= 1e-12);
        write_csv(cfg.out_dir + "/verify_identities.csv",
                  {"samples", "viscous", "convection", "dissipation", "min_dissipation", "liftings",
                   "time_lifting", "time_lifting_scaling", "conforming_facet"},
                  {{static_cast<double>(rep.samples), rep.visc_identity, rep.conv_identity,
                    rep.positivity_identity, rep.min_dissipation, rep.lifting_identity,
                    rep.time_lifting_identity, rep.time_lifting_scaling, rep.conforming_facet_zero}});

        // coercivity at the configured penalty (negative control: small alpha)
        double alpha = cfg.alpha > 0 ? cfg.alpha : 8.0 * cfg.ks * cfg.ks;
        double mineig = min_coercivity_eigenvalue(ctx, alpha);
        check("coercivity.min_eigenvalue_positive", mineig > 0.0);

        // inequality constants across refinement levels
        std::vector<ConstantsLevel> consts = constant_estimates(2, cfg.levels, cfg.ks, cfg.kt, cfg.seed, 40);
        std::vector<std::vector<double>> crow;
        auto bounded = [&](auto pick) {
            double running = 0.0;
            for (size_t i = 0; i + 1 < consts.size(); ++i) running = std::max(running, pick(consts[i]));
            return pick(consts.back()) <= 1.2 * running;
        };
        for (const auto& c : consts)
            crow.push_back({static_cast<double>(c.n), c.h, c.poincare, c.h1_vs_v, c.lifting_bound,
                            c.coercivity, c.boundedness, c.convection_bound, c.dual_bound});
        write_csv(cfg.out_dir + "/verify_constants.csv",
                  {"n", "h", "poincare", "h1_vs_v", "lifting", "coercivity", "boundedness",
                   "convection", "dual"},
                  crow);
        check("constants.poincare_bounded", bounded([](const ConstantsLevel& c) { return c.poincare; }));
        check("constants.h1_bounded", bounded([](const ConstantsLevel& c) { return c.h1_vs_v; }));
        check("constants.lifting_bounded", bounded([](const ConstantsLevel& c) { return c.lifting_bound; }));
        check("constants.boundedness_bounded", bounded([](const ConstantsLevel& c) { return c.boundedness; }));
        check("constants.convection_bounded",
              bounded([](const ConstantsLevel& c) { return c.convection_bound; }));
        check("constants.dual_bounded", bounded([](const ConstantsLevel& c) { return c.dual_bound; }));
        for (const auto& c : consts) check("constants.coercive_at_level", c.coercivity > 0.0);

        // energy accounting on the configured benchmark
        Problem p = setup(cfg);
        RunResult res = run_simulation(p.ctx, p.layout, p.data, p.solver);
        if (!res.completed) {
            std::cerr << "verify: solver nonconvergence\n";
            return ok ? exit_nonconvergence : exit_verification_failure;
        }
        EnergyReport er = energy_inequality_report(p.ctx, p.layout, res);
        check("energy.identity", er.max_identity_residual <= 1e-8);
        double scale = er.rows.empty() ? 1.0 : std::abs(res.ledger.front().in_sq) + 1.0;
        check("energy.inequality_slack", er.min_slack >= -1e-8 * scale);
        std::vector<std::vector<double>> erows;
        for (const EnergyRow& r : er.rows)
            erows.push_back({static_cast<double>(r.m), r.t, r.unorm_sq, r.slack_lifted, r.slack_form,
                             r.cumulative_jump_sq});
        write_csv(cfg.out_dir + "/verify_energy.csv",
                  {"m", "t", "unorm_sq", "slack_lifted", "slack_form", "cumulative_jump_sq"}, erows);

        // decay run without forcing
        {
            ProblemData decay = p.data;
            decay.f = [](const Eigen::Vector2d&, double) { return Eigen::Vector2d::Zero().eval(); };
            decay.steady_discrete_start = false;
            RunResult dres = run_simulation(p.ctx, p.layout, decay, p.solver);
            if (dres.completed) {
                EnergyReport der = energy_inequality_report(p.ctx, p.layout, dres);
                check("energy.decay_monotone", der.monotone_decay);
                if (p.ctx.space.kt <= 1)
                    check("energy.linf_l2_bound", der.linf_l2 <= der.linf_l2_bound * (1.0 + 1e-10));
            } else {
                check("energy.decay_run_completed", false);
            }
        }
        return ok ? exit_ok : exit_verification_failure;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_io_error;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    }
}

int cmd_convergence(const RunConfig& cfg) {
    try {
        cfg.validate();
        if (cfg.levels < 3) throw ConfigError("convergence: need at least 3 levels");
        ensure_out_dir(cfg.out_dir);
        ManufacturedSolution ms = benchmark_by_name(cfg.benchmark, cfg.nu);
        SolverConfig scfg;
        scfg.alpha = cfg.alpha;
        scfg.picard_tol = cfg.picard_tol;
        scfg.max_picard = cfg.max_picard;

        RefinementStudy study = joint_refinement_study(ms, cfg.ks, cfg.kt, cfg.T, 2, cfg.levels, scfg);
        RefinementStudy proj = projection_rate_study(cfg.ks, cfg.kt, 2, cfg.levels);

        std::vector<std::vector<double>> rows;
        for (size_t i = 0; i < study.levels.size(); ++i) {
            const StudyLevel& lev = study.levels[i];
            rows.push_back({static_cast<double>(lev.n), lev.h, lev.tau,
                            lev.metrics.at("l2l2_error"), lev.metrics.at("tnorm_error"),
                            i > 0 ? lev.metrics.at("cauchy_increment") : 0.0,
                            lev.metrics.at("visc_residual"), lev.metrics.at("conv_residual")});
        }
        // order summary row (n = 0 marks it), one fitted order per metric
        auto order_of = [&](const char* key, size_t from) {
            std::vector<double> hs, ys;
            for (size_t i = from; i < study.levels.size(); ++i) {
                hs.push_back(study.levels[i].h);
                ys.push_back(study.levels[i].metrics.at(key));
            }
            return fitted_order(hs, ys);
        };
        rows.push_back({0.0, 0.0, 0.0, study.orders.at("l2l2_error"), order_of("tnorm_error", 0),
                        order_of("cauchy_increment", 1), study.orders.at("visc_residual"),
                        study.orders.at("conv_residual")});
        write_csv(cfg.out_dir + "/convergence.csv",
                  {"n", "h", "tau", "l2l2_error", "tnorm_error", "cauchy_increment",
                   "visc_residual", "conv_residual"},
                  rows);

        std::vector<std::vector<double>> prow;
        for (const StudyLevel& lev : proj.levels)
            prow.push_back({static_cast<double>(lev.n), lev.h, lev.tau, lev.metrics.at("time_linf"),
                            lev.metrics.at("div_l2"), lev.metrics.at("div_h1"),
                            lev.metrics.at("div_linf"), lev.metrics.at("facet_gap_sq"),
                            lev.metrics.at("face_term_sq")});
        prow.push_back({0.0, 0.0, 0.0, proj.orders.at("time_linf"), proj.orders.at("div_l2"),
                        proj.orders.at("div_h1"), proj.orders.at("div_linf"),
                        proj.orders.at("facet_gap_sq"), proj.orders.at("face_term_sq")});
        write_csv(cfg.out_dir + "/projection_rates.csv",
                  {"n", "h", "tau", "time_linf", "div_l2", "div_h1", "div_linf", "facet_gap_sq",
                   "face_term_sq"},
                  prow);
        std::cout << "convergence: l2l2 order " << format_double(study.orders.at("l2l2_error")) << "\n";
        return exit_ok;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_io_error;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    }
}

int cmd_mesh_info(const RunConfig& cfg) {
    try {
        cfg.validate();
        SpatialMesh mesh = cfg.mesh_file.empty() ? build_uniform_mesh(cfg.mesh_n) : load_mesh(cfg.mesh_file);
        validate_mesh(mesh);
        FaceTopology topo = build_face_topology(mesh);
        MeshMetrics m = mesh_metrics(mesh, topo);
        std::cout << "vertices " << mesh.n_vertices() << "\n"
                  << "triangles " << mesh.n_triangles() << "\n"
                  << "faces " << topo.n_faces() << " (interior " << topo.interior.size()
                  << ", boundary " << topo.boundary.size() << ")\n"
                  << "h " << format_double(m.h) << "\n"
                  << "h_K range [" << format_double(m.min_hK) << ", " << format_double(m.max_hK) << "]\n"
                  << "shape regularity max h_K/rho_K " << format_double(m.shape_regularity) << "\n"
                  << "quasi-uniformity max h/h_K " << format_double(m.quasi_uniformity) << "\n"
                  << "face equivalence [" << format_double(m.face_equiv_lo) << ", "
                  << format_double(m.face_equiv_hi) << "]\n"
                  << "area " << format_double(m.total_area) << "\n"
                  << "skeleton length " << format_double(m.skeleton_length) << "\n";
        return exit_ok;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_io_error;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    }
}

} // namespace sthdg
