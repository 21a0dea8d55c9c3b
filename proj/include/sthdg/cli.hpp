#pragma once

#include "sthdg/config.hpp"
#include "sthdg/report.hpp"
#include "sthdg/verify.hpp"

namespace sthdg {

/// Exit codes shared by all subcommands.
enum ExitCode {
    exit_ok = 0,
    exit_config_error = 2,
    exit_nonconvergence = 3,
    exit_verification_failure = 4,
    exit_io_error = 5,
};

/// Full simulation: energy ledger CSV, conformity CSV, VTK snapshots at each
/// slab end.
int cmd_run(const RunConfig& cfg);

/// Identity suite, inequality-constant estimates, energy report; nonzero exit
/// when a hard assertion fails (e.g. an under-penalized alpha).
int cmd_verify(const RunConfig& cfg);

/// Refinement studies: errors, Cauchy increments, consistency residuals,
/// projection rates; emits per-level CSVs with an order summary row.
int cmd_convergence(const RunConfig& cfg);

/// Mesh metrics of the configured mesh.
int cmd_mesh_info(const RunConfig& cfg);

} // namespace sthdg
