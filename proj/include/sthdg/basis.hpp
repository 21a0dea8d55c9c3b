#pragma once

#include <Eigen/Dense>

#include "sthdg/errors.hpp"

namespace sthdg {

/// Quadrature nodes and weights on a reference cell. `points` has one row per
/// node (2 columns on the triangle, 1 otherwise); weights are positive and the
/// rule integrates polynomials up to `degree` exactly.
struct QuadratureRule {
    Eigen::MatrixXd points;
    Eigen::VectorXd weights;
    int degree = 0;
};

enum class Cell { triangle, interval, edge };

/// Highest exactness degree served by quadrature(); beyond it a CapabilityError
/// is thrown.
inline constexpr int kMaxQuadratureDegree = 40;

/// Gauss-Legendre rule on (-1, 1) with n nodes (exact to degree 2n-1).
QuadratureRule gauss_legendre(int n);

/// Rule on the reference cell exact to the requested polynomial degree.
///   triangle: collapsed Gauss-Legendre x Gauss-Jacobi(1,0) on {x,y>=0, x+y<=1}
///   edge:     Gauss-Legendre mapped to (0, 1)
///   interval: Gauss-Legendre on (-1, 1)
QuadratureRule quadrature(Cell cell, int degree);

/// Polynomial basis on a reference cell.
///   triangle: Koornwinder basis, orthonormal in L2 of the reference triangle,
///             enumerated degree-major so lower-degree bases are prefixes.
///   interval: Legendre polynomials L_m on (-1, 1), L_m(1) = 1 (time basis).
///   edge:     shifted Legendre on (0, 1), orthonormal in L2(0,1).
struct ReferenceBasis {
    Cell cell = Cell::triangle;
    int degree = 0;
    int dim = 0;

    /// Basis values at the given points, shaped (dim x npts).
    Eigen::MatrixXd values(const Eigen::MatrixXd& pts) const;
    /// Reference-coordinate partial derivatives, each (dim x npts). On 1D
    /// cells only grad_x is populated.
    void gradients(const Eigen::MatrixXd& pts, Eigen::MatrixXd& grad_x,
                   Eigen::MatrixXd& grad_y) const;
    /// Endpoint values for the interval (time) basis: side=-1 gives L_m(-1) = (-1)^m,
    /// side=+1 gives L_m(1) = 1.
    double endpoint_value(int m, int side) const;
};

ReferenceBasis simplex_basis(int k);
ReferenceBasis interval_basis(int k);
ReferenceBasis edge_basis(int k);

inline int triangle_space_dim(int k) { return (k + 1) * (k + 2) / 2; }

/// Basis values and gradients pre-evaluated at a rule's points.
struct Tabulation {
    Eigen::MatrixXd values;  // dim x npts
    Eigen::MatrixXd grad_x;  // dim x npts
    Eigen::MatrixXd grad_y;  // dim x npts (zero rows off-triangle)
};

Tabulation tabulate(const ReferenceBasis& basis, const Eigen::MatrixXd& pts);

/// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
double triangle_monomial_integral(int a, int b);

} // namespace sthdg
