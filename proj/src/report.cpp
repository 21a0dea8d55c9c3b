#include "sthdg/report.hpp"

#include <cstdio>
#include <fstream>

namespace sthdg {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("write_csv: cannot open " + path);
    for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
        out << "\n";
    }
    if (!out) throw IoError("write_csv: write failure on " + path);
}

Eigen::VectorXd pressure_snapshot(const SlabSpace& space, const Eigen::VectorXd& p_slab, double s) {
    Eigen::VectorXd tv = time_basis_values(space.kt, s);
    Eigen::VectorXd snap = Eigen::VectorXd::Zero(space.spatial_p());
    for (int i = 0; i < space.spatial_p(); ++i)
        for (int m = 0; m < space.nT; ++m) snap(i) += p_slab(i * space.nT + m) * tv(m);
    return snap;
}

void write_vtk_snapshot(const std::string& path, const SlabContext& ctx,
                        const Eigen::VectorXd& u_snap, const Eigen::VectorXd& p_snap) {
    const SlabSpace& sp = ctx.space;
    std::ofstream out(path);
    if (!out) throw IoError("write_vtk_snapshot: cannot open " + path);
    int nel = sp.n_elems;
    out << "# vtk DataFile Version 3.0\n";
    out << "sthdg velocity/pressure snapshot\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << 3 * nel << " double\n";
    Eigen::Matrix<double, 3, 2> refv = reference_triangle_vertices();
    for (int K = 0; K < nel; ++K)
        for (int v = 0; v < 3; ++v) {
            Eigen::Vector2d x = ctx.mesh->vertices.row(ctx.mesh->triangles(K, v));
            out << format_double(x.x()) << " " << format_double(x.y()) << " 0\n";
        }
    out << "CELLS " << nel << " " << 4 * nel << "\n";
    for (int K = 0; K < nel; ++K) out << "3 " << 3 * K << " " << 3 * K + 1 << " " << 3 * K + 2 << "\n";
    out << "CELL_TYPES " << nel << "\n";
    for (int K = 0; K < nel; ++K) out << "5\n";
    out << "POINT_DATA " << 3 * nel << "\n";
    out << "VECTORS velocity double\n";
    Eigen::MatrixXd Vv = ctx.basis_v.values(refv);
    Eigen::MatrixXd Vp = ctx.basis_p.values(refv);
    for (int K = 0; K < nel; ++K)
        for (int v = 0; v < 3; ++v) {
            Eigen::Vector2d val = Eigen::Vector2d::Zero();
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < sp.nSv; ++i) val(c) += u_snap(sp.u_sp(K, c, i)) * Vv(i, v);
            out << format_double(val.x()) << " " << format_double(val.y()) << " 0\n";
        }
    out << "SCALARS pressure double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (int K = 0; K < nel; ++K)
        for (int v = 0; v < 3; ++v) {
            double val = 0.0;
            for (int i = 0; i < sp.nSp; ++i) val += p_snap(sp.p_sp(K, i)) * Vp(i, v);
            out << format_double(val) << "\n";
        }
    if (!out) throw IoError("write_vtk_snapshot: write failure on " + path);
}

} // namespace sthdg
