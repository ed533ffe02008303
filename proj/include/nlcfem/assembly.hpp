#ifndef NLCFEM_ASSEMBLY_HPP
#define NLCFEM_ASSEMBLY_HPP

#include "nlcfem/fields.hpp"
#include "nlcfem/linalg.hpp"
#include "nlcfem/mesh.hpp"
#include "nlcfem/potential.hpp"
#include "nlcfem/quadrature.hpp"

#include <cassert>
#include <vector>

namespace nlcfem {

/// P1 scalar mass matrix; local block |K|/12 * (1 + delta_ab).
inline SparseMat assemble_mass_p1(const TriMesh& mesh) {
    std::vector<Triplet> trips;
    trips.reserve(9u * mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.tri(e);
        const double s = mesh.area(e) / 12.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                trips.emplace_back(t[a], t[b], s * (a == b ? 2.0 : 1.0));
    }
    SparseMat M(mesh.num_vertices(), mesh.num_vertices());
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

/// P1 scalar stiffness matrix; local block |K| grad_a . grad_b.
inline SparseMat assemble_stiffness_p1(const TriMesh& mesh) {
    std::vector<Triplet> trips;
    trips.reserve(9u * mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.tri(e);
        const double area = mesh.area(e);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                trips.emplace_back(t[a], t[b], area * mesh.grad(e, a).dot(mesh.grad(e, b)));
    }
    SparseMat L(mesh.num_vertices(), mesh.num_vertices());
    L.setFromTriplets(trips.begin(), trips.end());
    return L;
}

/// Expand a scalar (node-by-node) operator to ncomp interleaved components:
/// entry ((a,c), (b,c)) = A(a,b). Off-component blocks are zero.
inline SparseMat expand_to_components(const SparseMat& A, int ncomp) {
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(A.nonZeros()) * ncomp);
    for (int row = 0; row < A.outerSize(); ++row)
        for (SparseMat::InnerIterator it(A, row); it; ++it)
            for (int c = 0; c < ncomp; ++c)
                trips.emplace_back(it.row() * ncomp + c, it.col() * ncomp + c, it.value());
    SparseMat B(A.rows() * ncomp, A.cols() * ncomp);
    B.setFromTriplets(trips.begin(), trips.end());
    return B;
}

/// Mixed mass matrix between P0 vector test functions (rows, element-major)
/// and P1 vector trial functions (cols, node-major): ((K,c),(a,c)) = |K|/3
/// for each vertex a of K. Its transpose is the P1-against-P0 pairing.
inline SparseMat assemble_p1p0_mass(const TriMesh& mesh, int ncomp) {
    std::vector<Triplet> trips;
    trips.reserve(3u * ncomp * mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.tri(e);
        const double v = mesh.area(e) / 3.0;
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < ncomp; ++c)
                trips.emplace_back(e * ncomp + c, t[a] * ncomp + c, v);
    }
    SparseMat M(static_cast<long>(mesh.num_elements()) * ncomp,
                static_cast<long>(mesh.num_vertices()) * ncomp);
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

/// Elementwise stretch operator applied to the (constant) velocity average
/// in the auxiliary-variable equation: T_w = G - beta tr(G) I - (1+beta) G^T
/// with G the director Jacobian on the element. The three pieces are the
/// transport term (u.grad d = G u) and the two stretching terms after moving
/// the derivative off u; with constant w per element the row-wise divergences
/// reduce to div(w d^T) = tr(G) w and div(d w^T) = G w. The transpose T_u
/// appears in the pressure correction and the velocity forcing, which keeps
/// the transport/forcing pairing exactly skew in the energy identity.
inline Eigen::Matrix2d stretch_to_w(const Eigen::Matrix2d& G, double beta) {
    return G - beta * G.trace() * Eigen::Matrix2d::Identity() -
           (1.0 + beta) * G.transpose();
}

inline Eigen::Matrix2d stretch_to_u(const Eigen::Matrix2d& G, double beta) {
    return stretch_to_w(G, beta).transpose();
}

/// Block-diagonal operator of the auxiliary-variable equation,
/// E_w = B_w + gamma M_w, with per-element block
///   |K| [ 3 lambda k (G G^T + beta^2 tr(G)^2 I + (1+beta)^2 G^T G) + gamma I ].
/// The three quadratic pieces dominate the squared stretch operator
/// (|T_u w|^2 <= 3 (|G^T w|^2 + beta^2 tr(G)^2 |w|^2 + (1+beta)^2 |G w|^2)),
/// which is what makes the scheme unconditionally energy-stable.
inline BlockDiagMatrix assemble_Ew(const TriMesh& mesh, const P1VectorField& d, double lambda,
                                   double beta, double gamma, double k) {
    assert(d.components == 2);
    BlockDiagMatrix E(mesh.num_elements(), 2);
    const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Eigen::Matrix2d G = element_jacobian(d, e);
        const double tr = G.trace();
        Eigen::Matrix2d B = 3.0 * lambda * k *
                            (G * G.transpose() + beta * beta * tr * tr * I +
                             (1.0 + beta) * (1.0 + beta) * G.transpose() * G);
        E.block(e) = mesh.area(e) * (B + gamma * I);
    }
    return E;
}

/// Scalar convection operator for a given advecting P1 velocity field that
/// vanishes on the boundary:
///   C(u)_ab = (u . grad phi_b, phi_a) + 1/2 ((div u) phi_b, phi_a).
/// Integrated with the order-2 rule, exact for the degree-2 integrands, so
/// x^T C x = 0 holds to roundoff. The same matrix serves every velocity
/// component.
inline SparseMat assemble_convection(const TriMesh& mesh, const P1VectorField& u) {
    assert(u.components == 2);
    const auto rule = quadrature_rule(2);
    std::vector<Triplet> trips;
    trips.reserve(9u * mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.tri(e);
        const double area = mesh.area(e);
        double divu = 0.0;
        for (int a = 0; a < 3; ++a) divu += u.node2(t[a]).dot(mesh.grad(e, a));
        double local[3][3] = {};
        for (const auto& q : rule) {
            const double phi[3] = {q.l0, q.l1, q.l2};
            const Eigen::Vector2d uq =
                phi[0] * u.node2(t[0]) + phi[1] * u.node2(t[1]) + phi[2] * u.node2(t[2]);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    local[a][b] += area * q.w * phi[a] *
                                   (uq.dot(mesh.grad(e, b)) + 0.5 * divu * phi[b]);
        }
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) trips.emplace_back(t[a], t[b], local[a][b]);
    }
    SparseMat C(mesh.num_vertices(), mesh.num_vertices());
    C.setFromTriplets(trips.begin(), trips.end());
    return C;
}

/// Pressure-gradient pairing: ((a,c), b) = (d phi_b / d x_c, phi_a), mapping
/// a P1 scalar to a P1 vector load. (grad p, v) = v^T G p.
inline SparseMat assemble_pressure_gradient(const TriMesh& mesh) {
    std::vector<Triplet> trips;
    trips.reserve(18u * mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.tri(e);
        const double v = mesh.area(e) / 3.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 2; ++c)
                    trips.emplace_back(t[a] * 2 + c, t[b], v * mesh.grad(e, b)[c]);
    }
    SparseMat G(static_cast<long>(mesh.num_vertices()) * 2, mesh.num_vertices());
    G.setFromTriplets(trips.begin(), trips.end());
    return G;
}

/// Pressure stabilization j(p, q) = (S/nu) (p - pi0 p, q - pi0 q) with pi0
/// the elementwise mean. Local block (S/nu) |K| ((1+delta_ab)/12 - 1/9);
/// rows sum to zero, so constants lie in the kernel.
inline SparseMat assemble_pressure_stabilization(const TriMesh& mesh, double S, double nu) {
    std::vector<Triplet> trips;
    trips.reserve(9u * mesh.num_elements());
    const double scale = S / nu;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.tri(e);
        const double area = mesh.area(e);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                trips.emplace_back(t[a], t[b],
                                   scale * area * ((a == b ? 2.0 : 1.0) / 12.0 - 1.0 / 9.0));
    }
    SparseMat J(mesh.num_vertices(), mesh.num_vertices());
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
}

/// Integrals of the P1 basis functions, m_a = (phi_a, 1). Used for the
/// zero-mean pressure constraint.
inline Vector assemble_p1_integrals(const TriMesh& mesh) {
    Vector m = Vector::Zero(mesh.num_vertices());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.tri(e);
        const double v = mesh.area(e) / 3.0;
        for (int a = 0; a < 3; ++a) m[t[a]] += v;
    }
    return m;
}

/// Penalty-force load (f_tilde(eps, d), phi_a e_c) with the order-4 rule.
/// Must share its quadrature with integrate_potential: the per-step energy
/// inequality sums a pointwise inequality over these quadrature nodes, and
/// holds at the discrete level only when both use the same positive-weight
/// rule.
inline Vector assemble_potential_load(const TriMesh& mesh, const P1VectorField& d, double eps) {
    assert(d.components == 2);
    const auto rule = quadrature_rule(4);
    Vector load = Vector::Zero(static_cast<long>(mesh.num_vertices()) * 2);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.tri(e);
        const double area = mesh.area(e);
        for (const auto& q : rule) {
            const double phi[3] = {q.l0, q.l1, q.l2};
            const Eigen::Vector2d dq =
                phi[0] * d.node2(t[0]) + phi[1] * d.node2(t[1]) + phi[2] * d.node2(t[2]);
            double f[2];
            f_tilde(eps, std::span<const double>(dq.data(), 2), std::span<double>(f, 2));
            for (int a = 0; a < 3; ++a)
                for (int c = 0; c < 2; ++c)
                    load[static_cast<long>(t[a]) * 2 + c] += area * q.w * phi[a] * f[c];
        }
    }
    return load;
}

/// Integral of F_tilde(eps, d) over the mesh with the order-4 rule (same
/// rule as assemble_potential_load, see there).
inline double integrate_potential(const TriMesh& mesh, const P1VectorField& d, double eps) {
    assert(d.components == 2);
    const auto rule = quadrature_rule(4);
    double total = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.tri(e);
        const double area = mesh.area(e);
        for (const auto& q : rule) {
            const Eigen::Vector2d dq =
                q.l0 * d.node2(t[0]) + q.l1 * d.node2(t[1]) + q.l2 * d.node2(t[2]);
            total += area * q.w * F_tilde(eps, std::span<const double>(dq.data(), 2));
        }
    }
    return total;
}

/// Restriction of a square scalar operator to a subset of indices.
/// new_index[i] gives the compressed index of row/column i, or -1 when
/// dropped (symmetric elimination: rows and columns together).
inline SparseMat restrict_matrix(const SparseMat& A, const std::vector<int>& new_index,
                                 int n_new) {
    std::vector<Triplet> trips;
    trips.reserve(A.nonZeros());
    for (int row = 0; row < A.outerSize(); ++row) {
        if (new_index[row] < 0) continue;
        for (SparseMat::InnerIterator it(A, row); it; ++it) {
            if (new_index[it.col()] < 0) continue;
            trips.emplace_back(new_index[row], new_index[it.col()], it.value());
        }
    }
    SparseMat B(n_new, n_new);
    B.setFromTriplets(trips.begin(), trips.end());
    return B;
}

} // namespace nlcfem

#endif
