#ifndef NLCFEM_POTENTIAL_HPP
#define NLCFEM_POTENTIAL_HPP

#include <Eigen/Dense>

#include <cassert>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>

namespace nlcfem {

namespace detail {
inline double sqnorm(std::span<const double> d) {
    double s = 0.0;
    for (double v : d) s += v * v;
    return s;
}
} // namespace detail

/// Truncated Ginzburg-Landau potential: the classical quartic well for
/// |d| <= 1, continued quadratically for |d| > 1 so that the Hessian stays
/// globally bounded. C1 across the |d| = 1 seam.
inline double F_tilde(double eps, std::span<const double> d) {
    assert(eps > 0.0);
    const double s2 = detail::sqnorm(d);
    if (s2 <= 1.0) {
        const double t = s2 - 1.0;
        return 0.25 * t * t / (eps * eps);
    }
    const double t = std::sqrt(s2) - 1.0;
    return t * t / (eps * eps);
}

/// Untruncated quartic potential (|d|^2 - 1)^2 / (4 eps^2), kept for
/// reference diagnostics.
inline double F_quartic(double eps, std::span<const double> d) {
    const double t = detail::sqnorm(d) - 1.0;
    return 0.25 * t * t / (eps * eps);
}

/// Gradient of F_tilde with respect to d.
inline void f_tilde(double eps, std::span<const double> d, std::span<double> out) {
    assert(d.size() == out.size());
    const double s2 = detail::sqnorm(d);
    const double ie2 = 1.0 / (eps * eps);
    if (s2 <= 1.0) {
        const double c = (s2 - 1.0) * ie2;
        for (std::size_t i = 0; i < d.size(); ++i) out[i] = c * d[i];
    } else {
        const double s = std::sqrt(s2);
        const double c = 2.0 * (1.0 - 1.0 / s) * ie2;
        for (std::size_t i = 0; i < d.size(); ++i) out[i] = c * d[i];
    }
}

/// Hessian of F_tilde (piecewise; the inner branch is used on the seam).
inline Eigen::MatrixXd F_tilde_hessian(double eps, std::span<const double> d) {
    const int m = static_cast<int>(d.size());
    Eigen::Map<const Eigen::VectorXd> dv(d.data(), m);
    const double s2 = detail::sqnorm(d);
    const double ie2 = 1.0 / (eps * eps);
    Eigen::MatrixXd H(m, m);
    if (s2 <= 1.0) {
        H = ie2 * ((s2 - 1.0) * Eigen::MatrixXd::Identity(m, m) + 2.0 * dv * dv.transpose());
    } else {
        const double s = std::sqrt(s2);
        H = 2.0 * ie2 *
            ((1.0 - 1.0 / s) * Eigen::MatrixXd::Identity(m, m) +
             (dv * dv.transpose()) / (s2 * s));
    }
    return H;
}

/// Monte-Carlo estimate of the largest Frobenius norm of the Hessian of
/// F_tilde over random samples with |d| <= radius. Callers assert the result
/// against the closed-form bound sqrt(9 M + 4 M (M-1)) / eps^2.
inline double hessian_frobenius_bound_check(double eps, int dim, int samples,
                                            double radius = 3.0, unsigned long seed = 20210906) {
    if (dim < 1) throw std::invalid_argument("hessian_frobenius_bound_check: dim must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-radius, radius);
    std::vector<double> d(dim);
    double max_norm = 0.0;
    int accepted = 0;
    while (accepted < samples) {
        double s2 = 0.0;
        for (int i = 0; i < dim; ++i) {
            d[i] = uni(rng);
            s2 += d[i] * d[i];
        }
        if (s2 > radius * radius) continue;
        ++accepted;
        max_norm = std::max(max_norm, F_tilde_hessian(eps, d).norm());
    }
    return max_norm;
}

} // namespace nlcfem

#endif
