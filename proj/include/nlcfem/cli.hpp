#ifndef NLCFEM_CLI_HPP
#define NLCFEM_CLI_HPP

#include "nlcfem/config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <string>
#include <vector>

namespace nlcfem {

/// Wire every SimConfig field onto a CLI11 app. The long-option names double
/// as the config-file keys (see serialize_config); values given on the
/// command line override the file.
inline void add_config_options(CLI::App& app, SimConfig& cfg) {
    app.add_option("--preset", cfg.preset,
                   "experiment preset: two_singularities or four_singularities")
        ->capture_default_str();
    app.add_option("--nx", cfg.nx, "grid cells along x")->capture_default_str();
    app.add_option("--ny", cfg.ny, "grid cells along y")->capture_default_str();
    app.add_option("--dt", cfg.k, "time-step size k")->capture_default_str();
    app.add_option("--t-final", cfg.T_final, "end time")->capture_default_str();
    app.add_option("--eps", cfg.eps, "penalty parameter")->capture_default_str();
    app.add_option("--beta", cfg.beta, "molecular shape parameter in [-1,0]")
        ->capture_default_str();
    app.add_option("--hf", cfg.hf_value,
                   "director stabilization coefficient (substituted for H_F)")
        ->capture_default_str();
    app.add_option("--S", cfg.S, "pressure stabilization constant")->capture_default_str();
    app.add_option("--nu", cfg.nu, "viscosity")->capture_default_str();
    app.add_option("--lambda", cfg.lambda, "elasticity")->capture_default_str();
    app.add_option("--gamma", cfg.gamma, "relaxation parameter")->capture_default_str();
    app.add_option("--x0", cfg.domain.x0, "domain left edge")->capture_default_str();
    app.add_option("--x1", cfg.domain.x1, "domain right edge")->capture_default_str();
    app.add_option("--y0", cfg.domain.y0, "domain bottom edge")->capture_default_str();
    app.add_option("--y1", cfg.domain.y1, "domain top edge")->capture_default_str();
    app.add_option("--dim", cfg.dim, "director components (2 or 3)")->capture_default_str();
    app.add_option("--out-dir", cfg.out_dir, "output directory")->capture_default_str();
    app.add_option("--snapshot-every", cfg.snapshot_every,
                   "write a VTK snapshot every N steps (0 = off)")
        ->capture_default_str();
    app.set_config("--config", "", "read options from a key=value file");
}

/// Parse an argv-style list (program name excluded) into a validated config.
/// Unknown keys, malformed values and out-of-range fields all raise
/// ConfigError.
inline SimConfig parse_config(const std::vector<std::string>& args) {
    SimConfig cfg;
    CLI::App app{"nematic liquid-crystal flow solver"};
    add_config_options(app, cfg);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        throw ConfigError(std::string("parse_config: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

} // namespace nlcfem

#endif
