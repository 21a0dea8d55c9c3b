#include "sthdg/basis.hpp"

#include <cmath>
#include <vector>

namespace sthdg {

namespace {

/// Golub-Welsch: nodes/weights from the symmetric Jacobi matrix of the
/// three-term recurrence with coefficients (alpha_k, beta_k) and moment mu0.
void golub_welsch(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta, double mu0,
                  Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
    int n = static_cast<int>(alpha.size());
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        J(i, i) = alpha(i);
        if (i + 1 < n) {
            double b = std::sqrt(beta(i + 1));
            J(i, i + 1) = b;
            J(i + 1, i) = b;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    nodes = es.eigenvalues();
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double v = es.eigenvectors()(0, i);
        weights(i) = mu0 * v * v;
    }
}

/// Gauss-Jacobi rule on (-1,1) for the weight (1-x)^1; used by the collapsed
/// triangle rule to absorb the Duffy Jacobian.
QuadratureRule gauss_jacobi_1_0(int n) {
    const double a = 1.0, b = 0.0;
    Eigen::VectorXd alpha(n), beta(n);
    alpha(0) = (b - a) / (a + b + 2.0);
    beta(0) = 0.0;
    for (int k = 1; k < n; ++k) {
        double den = (2 * k + a + b) * (2 * k + a + b + 2.0);
        alpha(k) = (b * b - a * a) / den;
        double num = 4.0 * k * (k + a) * (k + b) * (k + a + b);
        double den2 = (2 * k + a + b) * (2 * k + a + b) * (2 * k + a + b + 1.0) * (2 * k + a + b - 1.0);
        beta(k) = num / den2;
    }
    QuadratureRule r;
    Eigen::VectorXd nodes, weights;
    golub_welsch(alpha, beta, 2.0, nodes, weights);  // mu0 = int_{-1}^{1} (1-x) dx
    r.points = nodes;
    r.weights = weights;
    r.degree = 2 * n - 1;
    return r;
}

/// Jacobi polynomials P_k^(a,b) for k = 0..n at the given abscissae.
Eigen::MatrixXd jacobi_values(double a, double b, int n, const Eigen::VectorXd& z) {
    Eigen::MatrixXd P(n + 1, z.size());
    P.row(0).setOnes();
    if (n >= 1) P.row(1) = 0.5 * ((a - b) + (a + b + 2.0) * z.transpose().array());
    for (int k = 1; k < n; ++k) {
        double c1 = 2.0 * (k + 1) * (k + a + b + 1) * (2 * k + a + b);
        double c2 = (2 * k + a + b + 1) * (a * a - b * b);
        double c3 = (2 * k + a + b) * (2 * k + a + b + 1) * (2 * k + a + b + 2);
        double c4 = 2.0 * (k + a) * (k + b) * (2 * k + a + b + 2);
        P.row(k + 1) = ((c2 + c3 * z.transpose().array()) * P.row(k).array() - c4 * P.row(k - 1).array()) / c1;
    }
    return P;
}

/// Index of the Koornwinder pair (i,j) in degree-major enumeration.
int koornwinder_index(int i, int j) {
    int d = i + j;
    return d * (d + 1) / 2 + i;
}

} // namespace

QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw CapabilityError("gauss_legendre: need at least one node");
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n), beta(n);
    beta(0) = 0.0;
    for (int k = 1; k < n; ++k) beta(k) = k * k / (4.0 * k * k - 1.0);
    QuadratureRule r;
    Eigen::VectorXd nodes, weights;
    golub_welsch(alpha, beta, 2.0, nodes, weights);
    r.points = nodes;
    r.weights = weights;
    r.degree = 2 * n - 1;
    return r;
}

QuadratureRule quadrature(Cell cell, int degree) {
    if (degree < 0) throw CapabilityError("quadrature: degree must be nonnegative");
    if (degree > kMaxQuadratureDegree)
        throw CapabilityError("quadrature: requested exactness " + std::to_string(degree) +
                              " exceeds the supported maximum " + std::to_string(kMaxQuadratureDegree));
    int n = degree / 2 + 1;  // Gauss exactness 2n-1 >= degree
    switch (cell) {
    case Cell::interval:
        return gauss_legendre(n);
    case Cell::edge: {
        QuadratureRule g = gauss_legendre(n);
        QuadratureRule r;
        r.points = (g.points.array() + 1.0) / 2.0;
        r.weights = g.weights / 2.0;
        r.degree = g.degree;
        return r;
    }
    case Cell::triangle: {
        QuadratureRule gl = gauss_legendre(n);
        QuadratureRule gj = gauss_jacobi_1_0(n);
        QuadratureRule r;
        r.points.resize(n * n, 2);
        r.weights.resize(n * n);
        for (int i = 0; i < n; ++i) {
            double xi = (gl.points(i) + 1.0) / 2.0;
            double wxi = gl.weights(i) / 2.0;
            for (int j = 0; j < n; ++j) {
                double eta = (gj.points(j) + 1.0) / 2.0;
                double weta = gj.weights(j) / 4.0;
                int q = i * n + j;
                r.points(q, 0) = xi * (1.0 - eta);
                r.points(q, 1) = eta;
                r.weights(q) = wxi * weta;
            }
        }
        r.degree = 2 * n - 1;
        return r;
    }
    }
    throw CapabilityError("quadrature: unknown cell");
}

ReferenceBasis simplex_basis(int k) {
    if (k < 0) throw CapabilityError("simplex_basis: negative degree");
    return ReferenceBasis{Cell::triangle, k, triangle_space_dim(k)};
}

ReferenceBasis interval_basis(int k) {
    if (k < 0) throw CapabilityError("interval_basis: negative degree");
    return ReferenceBasis{Cell::interval, k, k + 1};
}

ReferenceBasis edge_basis(int k) {
    if (k < 0) throw CapabilityError("edge_basis: negative degree");
    return ReferenceBasis{Cell::edge, k, k + 1};
}

namespace {

/// Koornwinder auxiliary G_i = P_i(a) (1-y)^i with a = 2x/(1-y) - 1, evaluated
/// through the homogenized recurrence
///   (i+1) G_{i+1} = (2i+1)(2x+y-1) G_i - i (1-y)^2 G_{i-1},
/// which is polynomial and stable up to and including the collapsed vertex.
void koornwinder_aux(int kmax, const Eigen::ArrayXd& x, const Eigen::ArrayXd& y,
                     std::vector<Eigen::ArrayXd>& G, std::vector<Eigen::ArrayXd>& Gx,
                     std::vector<Eigen::ArrayXd>& Gy) {
    auto n = x.size();
    G.assign(kmax + 1, Eigen::ArrayXd::Zero(n));
    Gx.assign(kmax + 1, Eigen::ArrayXd::Zero(n));
    Gy.assign(kmax + 1, Eigen::ArrayXd::Zero(n));
    G[0].setOnes();
    if (kmax >= 1) {
        G[1] = 2.0 * x + y - 1.0;
        Gx[1].setConstant(2.0);
        Gy[1].setConstant(1.0);
    }
    Eigen::ArrayXd t = 2.0 * x + y - 1.0;
    Eigen::ArrayXd s = (1.0 - y).square();
    for (int i = 1; i < kmax; ++i) {
        double c1 = (2.0 * i + 1) / (i + 1);
        double c2 = static_cast<double>(i) / (i + 1);
        G[i + 1] = c1 * t * G[i] - c2 * s * G[i - 1];
        Gx[i + 1] = c1 * (2.0 * G[i] + t * Gx[i]) - c2 * s * Gx[i - 1];
        Gy[i + 1] = c1 * (G[i] + t * Gy[i]) - c2 * (-2.0 * (1.0 - y) * G[i - 1] + s * Gy[i - 1]);
    }
}

} // namespace

Eigen::MatrixXd ReferenceBasis::values(const Eigen::MatrixXd& pts) const {
    if (cell == Cell::triangle) {
        Eigen::ArrayXd x = pts.col(0).array(), y = pts.col(1).array();
        std::vector<Eigen::ArrayXd> G, Gx, Gy;
        koornwinder_aux(degree, x, y, G, Gx, Gy);
        Eigen::VectorXd z = (2.0 * y - 1.0).matrix();
        Eigen::MatrixXd V(dim, pts.rows());
        for (int i = 0; i <= degree; ++i) {
            Eigen::MatrixXd Pj = jacobi_values(2.0 * i + 1, 0.0, degree - i, z);
            for (int j = 0; j <= degree - i; ++j) {
                double N = std::sqrt(2.0 * (2 * i + 1) * (i + j + 1));
                V.row(koornwinder_index(i, j)) = N * (G[i] * Pj.row(j).transpose().array()).matrix().transpose();
            }
        }
        return V;
    }
    // Legendre on (-1,1) or shifted-orthonormal on (0,1)
    Eigen::VectorXd z = cell == Cell::interval ? Eigen::VectorXd(pts.col(0))
                                               : Eigen::VectorXd(2.0 * pts.col(0).array() - 1.0);
    Eigen::MatrixXd P = jacobi_values(0.0, 0.0, degree, z);
    if (cell == Cell::edge)
        for (int m = 0; m <= degree; ++m) P.row(m) *= std::sqrt(2.0 * m + 1.0);
    return P;
}

void ReferenceBasis::gradients(const Eigen::MatrixXd& pts, Eigen::MatrixXd& grad_x,
                               Eigen::MatrixXd& grad_y) const {
    if (cell == Cell::triangle) {
        Eigen::ArrayXd x = pts.col(0).array(), y = pts.col(1).array();
        std::vector<Eigen::ArrayXd> G, Gx, Gy;
        koornwinder_aux(degree, x, y, G, Gx, Gy);
        Eigen::VectorXd z = (2.0 * y - 1.0).matrix();
        grad_x.resize(dim, pts.rows());
        grad_y.resize(dim, pts.rows());
        for (int i = 0; i <= degree; ++i) {
            Eigen::MatrixXd Pj = jacobi_values(2.0 * i + 1, 0.0, degree - i, z);
            Eigen::MatrixXd dPj = Eigen::MatrixXd::Zero(degree - i + 1, pts.rows());
            if (degree - i >= 1) {
                Eigen::MatrixXd Q = jacobi_values(2.0 * i + 2, 1.0, degree - i - 1, z);
                for (int j = 1; j <= degree - i; ++j) dPj.row(j) = 0.5 * (j + 2 * i + 2) * Q.row(j - 1);
            }
            for (int j = 0; j <= degree - i; ++j) {
                double N = std::sqrt(2.0 * (2 * i + 1) * (i + j + 1));
                int idx = koornwinder_index(i, j);
                grad_x.row(idx) = N * (Gx[i] * Pj.row(j).transpose().array()).matrix().transpose();
                grad_y.row(idx) =
                    N * (Gy[i] * Pj.row(j).transpose().array() + 2.0 * G[i] * dPj.row(j).transpose().array())
                            .matrix()
                            .transpose();
            }
        }
        return;
    }
    Eigen::VectorXd z = cell == Cell::interval ? Eigen::VectorXd(pts.col(0))
                                               : Eigen::VectorXd(2.0 * pts.col(0).array() - 1.0);
    // dL_m/dz = (m+1)/2 P_{m-1}^{(1,1)}
    grad_x = Eigen::MatrixXd::Zero(dim, pts.rows());
    if (degree >= 1) {
        Eigen::MatrixXd Q = jacobi_values(1.0, 1.0, degree - 1, z);
        for (int m = 1; m <= degree; ++m) grad_x.row(m) = 0.5 * (m + 1) * Q.row(m - 1);
    }
    double chain = cell == Cell::edge ? 2.0 : 1.0;  // z = 2s - 1 on the edge
    grad_x *= chain;
    if (cell == Cell::edge)
        for (int m = 0; m <= degree; ++m) grad_x.row(m) *= std::sqrt(2.0 * m + 1.0);
    grad_y = Eigen::MatrixXd::Zero(dim, pts.rows());
}

double ReferenceBasis::endpoint_value(int m, int side) const {
    if (cell == Cell::triangle) throw CapabilityError("endpoint_value: 1D bases only");
    double v = side > 0 ? 1.0 : (m % 2 == 0 ? 1.0 : -1.0);
    if (cell == Cell::edge) v *= std::sqrt(2.0 * m + 1.0);
    return v;
}

Tabulation tabulate(const ReferenceBasis& basis, const Eigen::MatrixXd& pts) {
    Tabulation t;
    t.values = basis.values(pts);
    basis.gradients(pts, t.grad_x, t.grad_y);
    return t;
}

double triangle_monomial_integral(int a, int b) {
    // a! b! / (a+b+2)! evaluated as a product of ratios to stay in range
    double v = 1.0;
    for (int i = 1; i <= a + b + 2; ++i) {
        v /= i;
        if (i <= a) v *= i;
    }
    for (int i = 1; i <= b; ++i) v *= i;
    return v;
}

} // namespace sthdg
