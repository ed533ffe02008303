#ifndef NLCFEM_CONFIG_HPP
#define NLCFEM_CONFIG_HPP

#include "nlcfem/mesh.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nlcfem {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Experiment presets fixing the initial data. Model parameters are not
/// touched by the preset; the defaults below already reproduce the
/// two-singularity experiment.
enum class Preset { two_singularities, four_singularities };

inline Preset preset_from_string(const std::string& s) {
    if (s == "two_singularities") return Preset::two_singularities;
    if (s == "four_singularities") return Preset::four_singularities;
    throw ConfigError("preset: unknown preset '" + s +
                      "' (expected two_singularities or four_singularities)");
}

inline std::string to_string(Preset p) {
    return p == Preset::two_singularities ? "two_singularities" : "four_singularities";
}

inline bool operator==(const Rect& a, const Rect& b) {
    return a.x0 == b.x0 && a.x1 == b.x1 && a.y0 == b.y0 && a.y1 == b.y1;
}

/// All run parameters. Defaults are the two-singularity experiment:
/// nu = lambda = gamma = 1, beta = -1, eps = 0.05, k = 0.001 on [-1,1]^2.
struct SimConfig {
    double nu = 1.0;       // viscosity
    double lambda = 1.0;   // elasticity
    double gamma = 1.0;    // relaxation
    double beta = -1.0;    // molecular shape parameter, in [-1, 0]
    double eps = 0.05;     // penalty parameter
    double k = 1e-3;       // time-step size
    double T_final = 0.3;  // end time
    double S = 1.0;        // pressure-stabilization constant
    double hf_value = 0.0; // director-stabilization coefficient (used in place of H_F)
    Rect domain{-1.0, 1.0, -1.0, 1.0};
    int nx = 31, ny = 31;  // subdivisions per axis
    int dim = 2;           // director components M
    std::string preset = "two_singularities";
    std::string out_dir = "out";
    int snapshot_every = 0; // 0 disables VTK snapshots

    bool operator==(const SimConfig&) const = default;
};

/// Range checks; throws ConfigError naming the offending field.
inline void validate(const SimConfig& cfg) {
    if (!(cfg.beta >= -1.0 && cfg.beta <= 0.0)) throw ConfigError("beta out of range [-1,0]");
    if (!(cfg.eps > 0.0)) throw ConfigError("eps must be > 0");
    if (!(cfg.k > 0.0)) throw ConfigError("k (--dt) must be > 0");
    if (!(cfg.S > 0.0)) throw ConfigError("S must be > 0");
    if (!(cfg.hf_value >= 0.0)) throw ConfigError("hf (hf_value) must be >= 0");
    if (!(cfg.nu > 0.0)) throw ConfigError("nu must be > 0");
    if (!(cfg.lambda > 0.0)) throw ConfigError("lambda must be > 0");
    if (!(cfg.gamma > 0.0)) throw ConfigError("gamma must be > 0");
    if (!(cfg.T_final >= 0.0)) throw ConfigError("t-final must be >= 0");
    if (cfg.nx < 1 || cfg.ny < 1) throw ConfigError("nx and ny must be >= 1");
    if (cfg.dim != 2 && cfg.dim != 3) throw ConfigError("dim must be 2 or 3");
    if (!(cfg.domain.x1 > cfg.domain.x0) || !(cfg.domain.y1 > cfg.domain.y0))
        throw ConfigError("domain rectangle is degenerate");
    preset_from_string(cfg.preset);
}

/// H_F(M) = (M 3^2 + (M^2 - M) 2^2)^(1/2), the stabilization coefficient as
/// a function of the sweep parameter M. The reference tables label their
/// columns by M in {0, 0.5, 1, 1.5, 2} with this substitution applied.
inline double hf_from_M(double M) {
    if (M < 0.0) throw ConfigError("hf_from_M: M must be nonnegative");
    return std::sqrt(M * 9.0 + (M * M - M) * 4.0);
}

/// Frobenius bound on the Hessian of the truncated potential (times eps^2):
/// H_F at M = dim; sqrt(26) in 2D, sqrt(51) in 3D.
inline double theoretical_hf(int dim) {
    if (dim != 2 && dim != 3)
        throw ConfigError("theoretical_hf: dim must be 2 or 3, got " + std::to_string(dim));
    return hf_from_M(static_cast<double>(dim));
}

/// Unnormalized initial director formula of the preset.
inline Eigen::Vector2d preset_d_tilde(Preset p, double x, double y) {
    switch (p) {
        case Preset::two_singularities:
            return {x * x + y * y - 0.25, y};
        case Preset::four_singularities:
            return {x * x / 0.25 + y * y / 0.0625 - 1.0, -x * y};
    }
    throw ConfigError("preset_d_tilde: invalid preset");
}

/// Regularized initial director d0 = d_tilde / sqrt(|d_tilde|^2 + eps^2);
/// |d0| < 1 pointwise.
inline Eigen::Vector2d preset_d0(Preset p, double eps, double x, double y) {
    const Eigen::Vector2d dt = preset_d_tilde(p, x, y);
    return dt / std::sqrt(dt.squaredNorm() + eps * eps);
}

/// Config-file serialization: one key=value per line, keys identical to the
/// CLI flag names. 17 significant digits so floats round-trip exactly.
inline std::string serialize_config(const SimConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "preset=" << cfg.preset << "\n";
    os << "nx=" << cfg.nx << "\n";
    os << "ny=" << cfg.ny << "\n";
    os << "dt=" << cfg.k << "\n";
    os << "t-final=" << cfg.T_final << "\n";
    os << "eps=" << cfg.eps << "\n";
    os << "beta=" << cfg.beta << "\n";
    os << "hf=" << cfg.hf_value << "\n";
    os << "S=" << cfg.S << "\n";
    os << "nu=" << cfg.nu << "\n";
    os << "lambda=" << cfg.lambda << "\n";
    os << "gamma=" << cfg.gamma << "\n";
    os << "x0=" << cfg.domain.x0 << "\n";
    os << "x1=" << cfg.domain.x1 << "\n";
    os << "y0=" << cfg.domain.y0 << "\n";
    os << "y1=" << cfg.domain.y1 << "\n";
    os << "dim=" << cfg.dim << "\n";
    os << "out-dir=" << cfg.out_dir << "\n";
    os << "snapshot-every=" << cfg.snapshot_every << "\n";
    return os.str();
}

} // namespace nlcfem

#endif
