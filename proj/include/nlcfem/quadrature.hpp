#ifndef NLCFEM_QUADRATURE_HPP
#define NLCFEM_QUADRATURE_HPP

#include <span>
#include <stdexcept>
#include <string>

namespace nlcfem {

/// One node of a quadrature rule on a triangle, in barycentric coordinates.
/// Weights are normalized to sum to one, so an integral over an element K is
/// |K| * sum_q w_q f(x_q).
struct QuadPoint {
    double l0, l1, l2;
    double w;
};

/// Symmetric rules on the triangle, exact for all polynomials up to the
/// requested total degree. Supported orders: 1 (centroid), 2 (edge
/// midpoints) and 4 (six-point rule). All weights are positive; the
/// energy-stability argument for the penalty-force integration relies on
/// positivity of the order-4 weights.
inline std::span<const QuadPoint> quadrature_rule(int order) {
    static const QuadPoint centroid[] = {
        {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0},
    };
    static const QuadPoint midpoints[] = {
        {0.5, 0.5, 0.0, 1.0 / 3.0},
        {0.0, 0.5, 0.5, 1.0 / 3.0},
        {0.5, 0.0, 0.5, 1.0 / 3.0},
    };
    // Six-point degree-4 rule, two symmetric orbits.
    constexpr double a = 0.445948490915965;
    constexpr double wa = 0.223381589678011;
    constexpr double b = 0.091576213509771;
    constexpr double wb = 0.109951743655322;
    static const QuadPoint six[] = {
        {a, a, 1.0 - 2.0 * a, wa},
        {a, 1.0 - 2.0 * a, a, wa},
        {1.0 - 2.0 * a, a, a, wa},
        {b, b, 1.0 - 2.0 * b, wb},
        {b, 1.0 - 2.0 * b, b, wb},
        {1.0 - 2.0 * b, b, b, wb},
    };
    switch (order) {
        case 1: return centroid;
        case 2: return midpoints;
        case 4: return six;
        default:
            throw std::invalid_argument("quadrature_rule: unsupported order " +
                                        std::to_string(order) + " (supported: 1, 2, 4)");
    }
}

} // namespace nlcfem

#endif
