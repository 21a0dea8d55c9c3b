#pragma once

#include <string>

#include "sthdg/forms.hpp"

namespace sthdg {

/// Closed-form benchmark problem: exact fields plus the compatible body force.
struct ManufacturedSolution {
    std::string name;
    double nu = 1.0;
    bool convection = true;           // false runs the scheme in Stokes mode
    bool steady_discrete_start = false;  // start from the discrete steady Stokes solution
    std::function<Eigen::Vector2d(const Eigen::Vector2d&, double)> velocity;
    std::function<Eigen::Matrix2d(const Eigen::Vector2d&, double)> velocity_grad;  // row c = grad u_c
    std::function<double(const Eigen::Vector2d&, double)> pressure;
    ForceField force;
    std::function<Eigen::Vector2d(const Eigen::Vector2d&)> initial;
};

/// Forced vortex on the unit square: u = curl[ a sin^2(pi x) sin^2(pi y) ] cos(t)
/// with a = 1/(2 pi), p = cos(t)^2 cos(pi x) cos(pi y); f from the momentum
/// equation. No-slip compatible and solenoidal.
ManufacturedSolution taylor_green(double nu);

/// The same spatial field frozen in time with convection disabled; f balances
/// the steady Stokes operator. Marching from the discrete steady solution
/// keeps the state constant slab to slab.
ManufacturedSolution stokes_steady(double nu);

/// Zero data everywhere.
ManufacturedSolution zero_benchmark(double nu);

ManufacturedSolution benchmark_by_name(const std::string& name, double nu);

} // namespace sthdg
