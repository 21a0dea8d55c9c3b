#include "sthdg/benchmarks.hpp"

#include <cmath>

namespace sthdg {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct TgParts {
    double sx, cx, sy, cy, s2x, c2x, s2y, c2y;
};

TgParts tg_parts(const Eigen::Vector2d& x) {
    TgParts p;
    p.sx = std::sin(kPi * x.x());
    p.cx = std::cos(kPi * x.x());
    p.sy = std::sin(kPi * x.y());
    p.cy = std::cos(kPi * x.y());
    p.s2x = std::sin(2 * kPi * x.x());
    p.c2x = std::cos(2 * kPi * x.x());
    p.s2y = std::sin(2 * kPi * x.y());
    p.c2y = std::cos(2 * kPi * x.y());
    return p;
}

constexpr double kAmp = 0.5;  // a * pi with stream amplitude a = 1/(2 pi)

Eigen::Vector2d tg_velocity(const TgParts& p, double g) {
    return {kAmp * p.sx * p.sx * p.s2y * g, -kAmp * p.s2x * p.sy * p.sy * g};
}

Eigen::Matrix2d tg_grad(const TgParts& p, double g) {
    Eigen::Matrix2d J;
    J(0, 0) = kAmp * g * kPi * p.s2x * p.s2y;
    J(0, 1) = 2 * kAmp * g * kPi * p.sx * p.sx * p.c2y;
    J(1, 0) = -2 * kAmp * g * kPi * p.c2x * p.sy * p.sy;
    J(1, 1) = -kAmp * g * kPi * p.s2x * p.s2y;
    return J;
}

Eigen::Vector2d tg_laplacian(const TgParts& p, double g) {
    double pi2 = kPi * kPi;
    return {kAmp * g * (2 * pi2 * p.c2x * p.s2y - 4 * pi2 * p.sx * p.sx * p.s2y),
            -kAmp * g * (2 * pi2 * p.s2x * p.c2y - 4 * pi2 * p.s2x * p.sy * p.sy)};
}

Eigen::Vector2d tg_pressure_grad(const TgParts& p, double g2) {
    return {-kPi * g2 * p.sx * p.cy, -kPi * g2 * p.cx * p.sy};
}

} // namespace

ManufacturedSolution taylor_green(double nu) {
    ManufacturedSolution s;
    s.name = "taylor-green";
    s.nu = nu;
    auto g = [](double t) { return std::cos(t); };
    auto gdot = [](double t) { return -std::sin(t); };
    s.velocity = [g](const Eigen::Vector2d& x, double t) { return tg_velocity(tg_parts(x), g(t)); };
    s.velocity_grad = [g](const Eigen::Vector2d& x, double t) { return tg_grad(tg_parts(x), g(t)); };
    s.pressure = [g](const Eigen::Vector2d& x, double t) {
        TgParts p = tg_parts(x);
        return g(t) * g(t) * p.cx * p.cy;
    };
    s.force = [g, gdot, nu](const Eigen::Vector2d& x, double t) {
        TgParts p = tg_parts(x);
        double gt = g(t);
        Eigen::Vector2d u = tg_velocity(p, gt);
        Eigen::Matrix2d J = tg_grad(p, gt);
        Eigen::Vector2d ut = tg_velocity(p, gdot(t));
        return Eigen::Vector2d(ut - nu * tg_laplacian(p, gt) + J * u + tg_pressure_grad(p, gt * gt));
    };
    s.initial = [g](const Eigen::Vector2d& x) { return tg_velocity(tg_parts(x), g(0.0)); };
    return s;
}

ManufacturedSolution stokes_steady(double nu) {
    ManufacturedSolution s;
    s.name = "stokes-steady";
    s.nu = nu;
    s.convection = false;
    s.steady_discrete_start = true;
    s.velocity = [](const Eigen::Vector2d& x, double) { return tg_velocity(tg_parts(x), 1.0); };
    s.velocity_grad = [](const Eigen::Vector2d& x, double) { return tg_grad(tg_parts(x), 1.0); };
    s.pressure = [](const Eigen::Vector2d& x, double) {
        TgParts p = tg_parts(x);
        return p.cx * p.cy;
    };
    s.force = [nu](const Eigen::Vector2d& x, double) {
        TgParts p = tg_parts(x);
        return Eigen::Vector2d(-nu * tg_laplacian(p, 1.0) + tg_pressure_grad(p, 1.0));
    };
    s.initial = [](const Eigen::Vector2d& x) { return tg_velocity(tg_parts(x), 1.0); };
    return s;
}

ManufacturedSolution zero_benchmark(double nu) {
    ManufacturedSolution s;
    s.name = "zero";
    s.nu = nu;
    s.velocity = [](const Eigen::Vector2d&, double) { return Eigen::Vector2d::Zero().eval(); };
    s.velocity_grad = [](const Eigen::Vector2d&, double) { return Eigen::Matrix2d::Zero().eval(); };
    s.pressure = [](const Eigen::Vector2d&, double) { return 0.0; };
    s.force = [](const Eigen::Vector2d&, double) { return Eigen::Vector2d::Zero().eval(); };
    s.initial = [](const Eigen::Vector2d&) { return Eigen::Vector2d::Zero().eval(); };
    return s;
}

ManufacturedSolution benchmark_by_name(const std::string& name, double nu) {
    if (name == "taylor-green") return taylor_green(nu);
    if (name == "stokes-steady") return stokes_steady(nu);
    if (name == "zero") return zero_benchmark(nu);
    throw ConfigError("unknown benchmark: " + name);
}

} // namespace sthdg
