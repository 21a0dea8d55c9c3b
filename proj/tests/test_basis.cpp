#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sthdg/basis.hpp"

using namespace sthdg;

TEST_CASE("quadrature integrates triangle monomials against closed form") {
    for (int deg : {2, 5, 8, 14, 16}) {
        QuadratureRule r = quadrature(Cell::triangle, deg);
        CHECK(r.weights.minCoeff() > 0.0);
        for (int a = 0; a + 0 <= deg; ++a) {
            for (int b = 0; a + b <= deg; ++b) {
                double exact = triangle_monomial_integral(a, b);
                double got = 0.0;
                for (int q = 0; q < r.weights.size(); ++q)
                    got += r.weights(q) * std::pow(r.points(q, 0), a) * std::pow(r.points(q, 1), b);
                CHECK(std::abs(got - exact) <= 1e-13 * std::max(1.0, std::abs(exact)));
            }
        }
    }
}

TEST_CASE("interval rule size and exactness") {
    QuadratureRule r = quadrature(Cell::interval, 3);
    CHECK(r.points.rows() == 2);  // Gauss: 2 points exact to degree 3
    for (int p = 0; p <= 3; ++p) {
        double exact = p % 2 == 0 ? 2.0 / (p + 1) : 0.0;
        double got = 0.0;
        for (int q = 0; q < r.weights.size(); ++q) got += r.weights(q) * std::pow(r.points(q, 0), p);
        CHECK(std::abs(got - exact) <= 1e-14);
    }
}

TEST_CASE("unsupported quadrature degree reports capability error") {
    CHECK_THROWS_AS(quadrature(Cell::triangle, kMaxQuadratureDegree + 1), CapabilityError);
    try {
        quadrature(Cell::edge, 99);
    } catch (const CapabilityError& e) {
        CHECK(std::string(e.what()).find(std::to_string(kMaxQuadratureDegree)) != std::string::npos);
    }
}

TEST_CASE("reference triangle rule integrates 1 to 1/2") {
    QuadratureRule r = quadrature(Cell::triangle, 4);
    CHECK(r.weights.sum() == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("simplex basis dimension and orthonormality") {
    CHECK(simplex_basis(1).dim == 3);
    for (int k : {1, 2, 4, 8}) {
        ReferenceBasis b = simplex_basis(k);
        QuadratureRule r = quadrature(Cell::triangle, 2 * k);
        Eigen::MatrixXd V = b.values(r.points);
        Eigen::MatrixXd M = V * r.weights.asDiagonal() * V.transpose();
        double err = (M - Eigen::MatrixXd::Identity(b.dim, b.dim)).cwiseAbs().maxCoeff();
        CHECK(err <= 1e-12);
    }
}

TEST_CASE("simplex basis gradients match central finite differences") {
    ReferenceBasis b = simplex_basis(3);
    Eigen::MatrixXd pts(3, 2);
    pts << 0.31, 0.41, 0.11, 0.17, 0.25, 0.55;
    Eigen::MatrixXd gx, gy;
    b.gradients(pts, gx, gy);
    double eps = 1e-6;
    for (int dir = 0; dir < 2; ++dir) {
        Eigen::MatrixXd pp = pts, pm = pts;
        pp.col(dir).array() += eps;
        pm.col(dir).array() -= eps;
        Eigen::MatrixXd fd = (b.values(pp) - b.values(pm)) / (2 * eps);
        const Eigen::MatrixXd& an = dir == 0 ? gx : gy;
        CHECK((fd - an).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("legendre interval basis: constants, orthogonality, endpoint alternation") {
    ReferenceBasis b0 = interval_basis(0);
    CHECK(b0.dim == 1);
    Eigen::MatrixXd pt(1, 1);
    pt(0, 0) = 0.3;
    CHECK(b0.values(pt)(0, 0) == doctest::Approx(1.0));

    ReferenceBasis b = interval_basis(3);
    QuadratureRule r = quadrature(Cell::interval, 8);
    Eigen::MatrixXd V = b.values(r.points);
    Eigen::MatrixXd M = V * r.weights.asDiagonal() * V.transpose();
    for (int i = 0; i <= 3; ++i)
        for (int j = 0; j <= 3; ++j)
            if (i != j) CHECK(std::abs(M(i, j)) <= 1e-14);

    // endpoint alternation against the three-term recurrence evaluated at -1
    Eigen::MatrixXd endm(1, 1), endp(1, 1);
    endm(0, 0) = -1.0;
    endp(0, 0) = 1.0;
    Eigen::MatrixXd Vm = b.values(endm), Vp = b.values(endp);
    for (int m = 0; m <= 3; ++m) {
        CHECK(Vm(m, 0) == doctest::Approx(m % 2 == 0 ? 1.0 : -1.0).epsilon(1e-14));
        CHECK(Vp(m, 0) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(b.endpoint_value(m, -1) == doctest::Approx(Vm(m, 0)));
        CHECK(b.endpoint_value(m, +1) == doctest::Approx(Vp(m, 0)));
    }
}

TEST_CASE("edge basis orthonormal on (0,1)") {
    ReferenceBasis b = edge_basis(4);
    QuadratureRule r = quadrature(Cell::edge, 10);
    Eigen::MatrixXd V = b.values(r.points);
    Eigen::MatrixXd M = V * r.weights.asDiagonal() * V.transpose();
    CHECK((M - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("mass-projection round trip is the identity on P_k") {
    // project a random P_k function onto itself through quadrature
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int k : {1, 2, 3, 4}) {
        ReferenceBasis b = simplex_basis(k);
        QuadratureRule r = quadrature(Cell::triangle, 3 * k + 2);
        Eigen::MatrixXd V = b.values(r.points);
        Eigen::VectorXd c(b.dim);
        for (int i = 0; i < b.dim; ++i) c(i) = unif(rng);
        Eigen::VectorXd vals = V.transpose() * c;
        Eigen::VectorXd back = V * (r.weights.asDiagonal() * vals);
        CHECK((back - c).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("trace consistency: simplex basis restricted to an edge is a P_k polynomial") {
    // values along edge y=0 must be reproduced by a 1D fit of degree k
    int k = 3;
    ReferenceBasis b = simplex_basis(k);
    QuadratureRule er = quadrature(Cell::edge, 2 * k + 2);
    int nq = static_cast<int>(er.weights.size());
    Eigen::MatrixXd pts(nq, 2);
    for (int q = 0; q < nq; ++q) {
        pts(q, 0) = er.points(q, 0);
        pts(q, 1) = 0.0;
    }
    Eigen::MatrixXd V = b.values(pts);
    ReferenceBasis eb = edge_basis(k);
    Eigen::MatrixXd E = eb.values(er.points);
    for (int i = 0; i < b.dim; ++i) {
        // fit trace in the edge basis, then compare at the quadrature points
        Eigen::VectorXd coef = E * (er.weights.asDiagonal() * V.row(i).transpose());
        Eigen::VectorXd recon = E.transpose() * coef;
        CHECK((recon - V.row(i).transpose()).cwiseAbs().maxCoeff() <= 1e-13);
    }
}
