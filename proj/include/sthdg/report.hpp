#pragma once

#include <string>
#include <vector>

#include "sthdg/solver.hpp"

namespace sthdg {

/// CSV with a single header row; numbers printed with %.17g so reruns with a
/// fixed seed reproduce identical bytes.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string format_double(double v);

/// Legacy-ASCII VTK unstructured grid of one time snapshot: each triangle is
/// written with its own three points, so discontinuous fields are preserved.
/// Point data: velocity vectors and pressure scalars.
void write_vtk_snapshot(const std::string& path, const SlabContext& ctx,
                        const Eigen::VectorXd& u_snap, const Eigen::VectorXd& p_snap);

/// Pressure snapshot (element pressure spatial coefficients) of a slab field
/// at slab-local time s.
Eigen::VectorXd pressure_snapshot(const SlabSpace& space, const Eigen::VectorXd& p_slab, double s);

} // namespace sthdg
