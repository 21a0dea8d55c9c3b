#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sthdg/errors.hpp"

namespace sthdg {

/// Conforming simplicial mesh of a polygonal domain. Triangles are positively
/// oriented; `vertex_on_boundary` is filled by the builders/loader.
struct SpatialMesh {
    Eigen::MatrixX2d vertices;
    Eigen::MatrixX3i triangles;
    std::vector<uint8_t> vertex_on_boundary;

    int n_vertices() const { return static_cast<int>(vertices.rows()); }
    int n_triangles() const { return static_cast<int>(triangles.rows()); }
};

/// One mesh face (edge). Interior faces have two incident elements; the stored
/// normal points from `left` to `right`, with left the lower element index.
/// Boundary faces store the single element in `left` with outward normal.
/// The face is parametrized from vertex v0 to v1 (s in [0,1]), v0 < v1.
struct Face {
    int v0 = -1, v1 = -1;
    int left = -1, right = -1;
    int left_edge = -1, right_edge = -1;
    Eigen::Vector2d normal = Eigen::Vector2d::Zero();
    double length = 0.0;
    bool boundary() const { return right < 0; }
};

struct FaceTopology {
    std::vector<Face> faces;
    std::vector<int> interior;
    std::vector<int> boundary;
    /// faces_of(K)[e] = face index of local edge e of triangle K
    std::vector<std::array<int, 3>> element_faces;
    int n_faces() const { return static_cast<int>(faces.size()); }
};

/// Per-element affine geometry: x = p0 + J * xref.
struct ElementGeometry {
    Eigen::Vector2d p0;
    Eigen::Matrix2d J;
    Eigen::Matrix2d Jinv;
    double det = 0.0;   // positive for valid meshes
    double hK = 0.0;    // diameter (longest edge)
    double rhoK = 0.0;  // inradius
};

using MeshGeometry = std::vector<ElementGeometry>;

/// Time partition 0 = t_0 < ... < t_N = T with per-slab sizes.
struct SpaceTimeLayout {
    Eigen::VectorXd time_levels;

    int n_slabs() const { return static_cast<int>(time_levels.size()) - 1; }
    double total_time() const { return time_levels(time_levels.size() - 1); }
    double dt(int n) const { return time_levels(n + 1) - time_levels(n); }
    double tau() const;
    double quasi_uniformity() const;  // tau / min dt
};

SpaceTimeLayout uniform_layout(double T, int N);

struct MeshMetrics {
    double h = 0.0;
    double min_hK = 0.0, max_hK = 0.0;
    double shape_regularity = 0.0;   // max h_K / rho_K
    double quasi_uniformity = 0.0;   // max h / h_K
    double face_equiv_lo = 0.0;      // min h_F / h_K over incident pairs (C_e)
    double face_equiv_hi = 0.0;      // max h_F / h_K over incident pairs (C^e)
    double total_area = 0.0;
    double skeleton_length = 0.0;
};

/// Structured triangulation of an axis-aligned rectangle: n x n cells, each
/// split along the same diagonal (2 n^2 triangles, h = diag/n).
SpatialMesh build_uniform_mesh(int n, const Eigen::Vector2d& lo = Eigen::Vector2d(0, 0),
                               const Eigen::Vector2d& hi = Eigen::Vector2d(1, 1));

/// Red refinement: every triangle is split into 4 by its edge midpoints.
SpatialMesh refine_uniform(const SpatialMesh& mesh);

FaceTopology build_face_topology(const SpatialMesh& mesh);

MeshGeometry build_geometry(const SpatialMesh& mesh);

MeshMetrics mesh_metrics(const SpatialMesh& mesh, const FaceTopology& faces);

/// Structural validation (orientation, conformity, coverage). Throws
/// TopologyError on violation.
void validate_mesh(const SpatialMesh& mesh);

/// ASCII mesh format: "tri-mesh 2", vertex count, "x y" lines, triangle
/// count, "i j k" lines (0-based).
SpatialMesh load_mesh(const std::string& path);
void save_mesh(const SpatialMesh& mesh, const std::string& path);

/// Reference-triangle vertex coordinates (P0, P1, P2); local edge e joins
/// vertex e and vertex (e+1) mod 3.
Eigen::Matrix<double, 3, 2> reference_triangle_vertices();

/// O(1) element lookup in a mesh produced by build_uniform_mesh(n, lo, hi).
int locate_uniform(int n, const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                   const Eigen::Vector2d& x);

/// Physical point of a face parameter s in [0,1].
inline Eigen::Vector2d face_point(const SpatialMesh& mesh, const Face& f, double s) {
    return mesh.vertices.row(f.v0).transpose() +
           s * (mesh.vertices.row(f.v1) - mesh.vertices.row(f.v0)).transpose();
}

/// Reference coordinates of physical point x within element K.
inline Eigen::Vector2d to_reference(const ElementGeometry& g, const Eigen::Vector2d& x) {
    return g.Jinv * (x - g.p0);
}

} // namespace sthdg
