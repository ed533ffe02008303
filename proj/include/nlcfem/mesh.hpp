#ifndef NLCFEM_MESH_HPP
#define NLCFEM_MESH_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nlcfem {

/// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rect {
    double x0 = -1.0, x1 = 1.0;
    double y0 = -1.0, y1 = 1.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
};

/// Conforming triangulation with precomputed per-element data for P1/P0
/// assembly: element areas and the (constant) gradients of the three
/// barycentric basis functions.
///
/// Boundary nodes are detected topologically: a node is on the boundary if
/// it is an endpoint of an edge shared by exactly one triangle. For meshes
/// built by build_uniform_triangulation these are exactly the nodes with a
/// coordinate on the rectangle boundary (bitwise, see the builder).
class TriMesh {
  public:
    TriMesh(std::vector<Eigen::Vector2d> vertices,
            std::vector<std::array<int, 3>> triangles)
        : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
        if (triangles_.empty()) throw std::invalid_argument("TriMesh: empty mesh");
        const int nv = static_cast<int>(vertices_.size());
        areas_.resize(triangles_.size());
        grads_.resize(triangles_.size());
        total_area_ = 0.0;
        for (std::size_t e = 0; e < triangles_.size(); ++e) {
            for (int a : triangles_[e]) {
                if (a < 0 || a >= nv)
                    throw std::invalid_argument("TriMesh: vertex index out of range in element " +
                                                std::to_string(e));
            }
            const Eigen::Vector2d& p0 = vertices_[triangles_[e][0]];
            const Eigen::Vector2d& p1 = vertices_[triangles_[e][1]];
            const Eigen::Vector2d& p2 = vertices_[triangles_[e][2]];
            const double twice_area =
                (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
            if (!(twice_area > 0.0))
                throw std::invalid_argument("TriMesh: element " + std::to_string(e) +
                                            " is degenerate or not counter-clockwise");
            areas_[e] = 0.5 * twice_area;
            total_area_ += areas_[e];
            // grad of the barycentric function of vertex a is the inward
            // normal of the opposite edge scaled by 1/(2|K|).
            grads_[e][0] = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / twice_area;
            grads_[e][1] = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / twice_area;
            grads_[e][2] = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / twice_area;
        }
        detect_boundary();
        bbox_.x0 = bbox_.x1 = vertices_[0].x();
        bbox_.y0 = bbox_.y1 = vertices_[0].y();
        for (const auto& p : vertices_) {
            bbox_.x0 = std::min(bbox_.x0, p.x());
            bbox_.x1 = std::max(bbox_.x1, p.x());
            bbox_.y0 = std::min(bbox_.y0, p.y());
            bbox_.y1 = std::max(bbox_.y1, p.y());
        }
    }

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_elements() const { return static_cast<int>(triangles_.size()); }

    const Eigen::Vector2d& vertex(int v) const { return vertices_[v]; }
    const std::array<int, 3>& tri(int e) const { return triangles_[e]; }
    double area(int e) const { return areas_[e]; }
    /// Gradient of the P1 basis function of local vertex a on element e.
    const Eigen::Vector2d& grad(int e, int a) const { return grads_[e][a]; }

    bool is_boundary(int v) const { return boundary_flag_[v] != 0; }
    /// Sorted list of boundary vertex indices.
    const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }

    double total_area() const { return total_area_; }
    /// Bounding box of the vertex set (equals the generating rectangle for
    /// meshes from build_uniform_triangulation).
    const Rect& bbox() const { return bbox_; }

  private:
    void detect_boundary() {
        std::map<std::pair<int, int>, int> edge_count;
        for (const auto& t : triangles_) {
            for (int i = 0; i < 3; ++i) {
                int a = t[i], b = t[(i + 1) % 3];
                edge_count[{std::min(a, b), std::max(a, b)}] += 1;
            }
        }
        boundary_flag_.assign(vertices_.size(), 0);
        for (const auto& [edge, count] : edge_count) {
            if (count > 2)
                throw std::invalid_argument("TriMesh: non-conforming edge shared by " +
                                            std::to_string(count) + " triangles");
            if (count == 1) {
                boundary_flag_[edge.first] = 1;
                boundary_flag_[edge.second] = 1;
            }
        }
        for (int v = 0; v < num_vertices(); ++v)
            if (boundary_flag_[v]) boundary_nodes_.push_back(v);
    }

    std::vector<Eigen::Vector2d> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<double> areas_;
    std::vector<std::array<Eigen::Vector2d, 3>> grads_;
    std::vector<char> boundary_flag_;
    std::vector<int> boundary_nodes_;
    double total_area_ = 0.0;
    Rect bbox_;
};

/// Structured triangulation of a rectangle: nx-by-ny grid cells, each split
/// along its bottom-left to top-right diagonal. Node coordinates are blended
/// as (1-t)*lo + t*hi so that boundary nodes land bitwise-exactly on the
/// rectangle edges.
inline TriMesh build_uniform_triangulation(const Rect& rect, int nx, int ny) {
    if (nx < 1 || ny < 1)
        throw std::invalid_argument("build_uniform_triangulation: nx and ny must be >= 1");
    if (!(rect.x1 > rect.x0) || !(rect.y1 > rect.y0))
        throw std::invalid_argument("build_uniform_triangulation: degenerate rectangle");

    std::vector<Eigen::Vector2d> vertices;
    vertices.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j) {
        const double ty = static_cast<double>(j) / ny;
        const double y = (1.0 - ty) * rect.y0 + ty * rect.y1;
        for (int i = 0; i <= nx; ++i) {
            const double tx = static_cast<double>(i) / nx;
            const double x = (1.0 - tx) * rect.x0 + tx * rect.x1;
            vertices.emplace_back(x, y);
        }
    }

    auto node = [nx](int i, int j) { return j * (nx + 1) + i; };
    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(2u * nx * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int v00 = node(i, j), v10 = node(i + 1, j);
            const int v01 = node(i, j + 1), v11 = node(i + 1, j + 1);
            triangles.push_back({v00, v10, v11});
            triangles.push_back({v00, v11, v01});
        }
    }
    return TriMesh(std::move(vertices), std::move(triangles));
}

/// Longest edge over all elements.
inline double mesh_size(const TriMesh& mesh) {
    if (mesh.num_elements() == 0) throw std::invalid_argument("mesh_size: empty mesh");
    double h = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.tri(e);
        for (int i = 0; i < 3; ++i) {
            const double len = (mesh.vertex(t[i]) - mesh.vertex(t[(i + 1) % 3])).norm();
            h = std::max(h, len);
        }
    }
    return h;
}

} // namespace nlcfem

#endif
