#ifndef NLCFEM_FIELDS_HPP
#define NLCFEM_FIELDS_HPP

#include "nlcfem/linalg.hpp"
#include "nlcfem/mesh.hpp"

#include <cassert>

namespace nlcfem {

/// Continuous piecewise-linear scalar field; one coefficient per vertex.
struct P1ScalarField {
    const TriMesh* mesh = nullptr;
    Vector values;

    P1ScalarField() = default;
    explicit P1ScalarField(const TriMesh& m) : mesh(&m), values(Vector::Zero(m.num_vertices())) {}
};

/// Continuous piecewise-linear vector field with node-major interleaved
/// coefficients: values[node * components + c]. The time loop uses
/// components == 2; the layout itself also admits three components.
struct P1VectorField {
    const TriMesh* mesh = nullptr;
    int components = 0;
    Vector values;

    P1VectorField() = default;
    P1VectorField(const TriMesh& m, int ncomp)
        : mesh(&m), components(ncomp), values(Vector::Zero(static_cast<long>(m.num_vertices()) * ncomp)) {}

    double& at(int node, int c) { return values[static_cast<long>(node) * components + c]; }
    double at(int node, int c) const { return values[static_cast<long>(node) * components + c]; }

    Eigen::Vector2d node2(int node) const {
        assert(components == 2);
        return values.segment<2>(static_cast<long>(node) * 2);
    }
};

/// Piecewise-constant vector field; element-major interleaved coefficients.
struct P0VectorField {
    const TriMesh* mesh = nullptr;
    int components = 0;
    Vector values;

    P0VectorField() = default;
    P0VectorField(const TriMesh& m, int ncomp)
        : mesh(&m), components(ncomp), values(Vector::Zero(static_cast<long>(m.num_elements()) * ncomp)) {}

    double& at(int elem, int c) { return values[static_cast<long>(elem) * components + c]; }
    double at(int elem, int c) const { return values[static_cast<long>(elem) * components + c]; }

    Eigen::Vector2d elem2(int elem) const {
        assert(components == 2);
        return values.segment<2>(static_cast<long>(elem) * 2);
    }
};

/// Jacobian of a two-component P1 field on element e: G(i,j) = d(d_i)/d(x_j),
/// constant per element.
inline Eigen::Matrix2d element_jacobian(const P1VectorField& d, int e) {
    assert(d.components == 2);
    const auto& t = d.mesh->tri(e);
    Eigen::Matrix2d G = Eigen::Matrix2d::Zero();
    for (int a = 0; a < 3; ++a) G += d.node2(t[a]) * d.mesh->grad(e, a).transpose();
    return G;
}

/// Average of the three vertex values on element e, equal to the elementwise
/// mean of the P1 field.
inline Eigen::Vector2d element_mean(const P1VectorField& u, int e) {
    assert(u.components == 2);
    const auto& t = u.mesh->tri(e);
    return (u.node2(t[0]) + u.node2(t[1]) + u.node2(t[2])) / 3.0;
}

} // namespace nlcfem

#endif
