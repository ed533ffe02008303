// Command-line driver. Default mode runs a single simulation from the
// configured preset and writes an energy log (plus optional VTK snapshots);
// the `table` subcommand sweeps (beta or eps) x hf and writes a summary CSV.

#include "nlcfem/cli.hpp"
#include "nlcfem/diagnostics.hpp"
#include "nlcfem/harness.hpp"
#include "nlcfem/scheme.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

void print_summary(const nlcfem::RunSummary& s) {
    if (!s.stable) {
        std::cout << "status: UNSTABLE (" << s.reason << ")\n";
        return;
    }
    std::cout << "status: stable\n";
    if (s.flat_curve) {
        std::cout << "kinetic energy flat (below 1e-20); no annihilation time\n";
    } else {
        std::cout << "E_kin max = " << s.E_kin_max << " at t = " << s.T_A;
        if (s.no_annihilation) std::cout << "  [no annihilation]";
        std::cout << "\n";
    }
    const auto& r = s.final_record;
    std::cout << "final t = " << r.t << ": E_kin = " << r.kinetic
              << ", E_elastic = " << r.elastic << ", E_penalty = " << r.penalty
              << ", E_total = " << r.total << ", |d| in [" << r.min_d << ", " << r.max_d
              << "]\n";
}

int run_single(const nlcfem::SimConfig& cfg) {
    using namespace nlcfem;
    const TriMesh mesh = build_uniform_triangulation(cfg.domain, cfg.nx, cfg.ny);
    const double h = mesh_size(mesh);
    std::cout << "mesh: " << mesh.num_vertices() << " nodes, " << mesh.num_elements()
              << " elements, h = " << h << ", h/eps = " << h / cfg.eps << "\n";
    if (h / cfg.eps > 2.0)
        std::cout << "warning: h/eps = " << h / cfg.eps
                  << " exceeds 2; the defect-core layer is under-resolved\n";

    const std::filesystem::path out_dir = cfg.out_dir;
    StepObserver observer;
    if (cfg.snapshot_every > 0) {
        observer = [&](const SimState& s, const EnergyRecord&) {
            if (s.step_index % cfg.snapshot_every == 0) write_field_snapshot(s, mesh, out_dir);
        };
    }

    const SimState initial = build_preset_initial_data(preset_from_string(cfg.preset), cfg, mesh);
    const TimeLoopResult run = time_loop(cfg, mesh, initial, observer);

    write_energy_csv(run.records, out_dir / "energies.csv");
    std::cout << "wrote " << (out_dir / "energies.csv").string() << " (" << run.records.size()
              << " records, " << run.steps_completed << " steps)\n";

    RunSummary summary = detect_annihilation(run.records);
    if (!run.stable) {
        summary.stable = false;
        summary.reason = run.instability_reason;
    }
    print_summary(summary);
    return 0;
}

int run_table(const nlcfem::SimConfig& cfg, const std::string& axis_name,
              std::vector<double> axis_values, const std::vector<double>& hf_values,
              std::string table_out) {
    using namespace nlcfem;
    const TableAxis axis = axis_name == "beta" ? TableAxis::beta : TableAxis::eps;
    if (axis_values.empty())
        axis_values = axis == TableAxis::beta ? std::vector<double>{0.0, -0.2, -0.5, -0.8, -1.0}
                                              : std::vector<double>{0.1, 0.05, 0.01, 0.001};
    if (table_out.empty())
        table_out = (std::filesystem::path(cfg.out_dir) / ("table_" + axis_name + ".csv")).string();

    std::cout << "table sweep: axis = " << axis_name << " (" << axis_values.size()
              << " values) x hf (" << hf_values.size() << " values), "
              << axis_values.size() * hf_values.size() << " runs\n";
    const TableResult table = run_table_harness(axis, axis_values, hf_values, cfg);

    for (std::size_t i = 0; i < table.axis_values.size(); ++i) {
        for (std::size_t j = 0; j < table.hf_values.size(); ++j) {
            const RunSummary& c = table.cell(i, j);
            std::cout << axis_name << " = " << table.axis_values[i]
                      << ", hf = " << table.hf_values[j] << ": ";
            if (!c.stable)
                std::cout << "unstable (" << c.reason << ")";
            else if (c.no_annihilation)
                std::cout << "no annihil., E_kin max = " << c.E_kin_max;
            else
                std::cout << "T_A = " << c.T_A << ", E_kin max = " << c.E_kin_max;
            std::cout << "\n";
        }
    }
    write_table_csv(table, table_out);
    std::cout << "wrote " << table_out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    using namespace nlcfem;
    SimConfig cfg;
    CLI::App app{"nematic liquid-crystal flow with stretching: projection scheme driver"};
    add_config_options(app, cfg);

    std::string axis_name = "beta";
    std::vector<double> axis_values;
    std::vector<double> hf_values{0.0, 0.5, 1.0, 1.5, 2.0};
    std::string table_out;
    CLI::App* table = app.add_subcommand("table", "sweep (beta or eps) x hf, one run per cell");
    table->fallthrough();
    table->add_option("--axis", axis_name, "sweep axis")
        ->check(CLI::IsMember({"beta", "eps"}))
        ->capture_default_str();
    table->add_option("--axis-values", axis_values,
                      "axis values (default: beta 0,-0.2,-0.5,-0.8,-1; eps 0.1,0.05,0.01,0.001)")
        ->delimiter(',');
    table->add_option("--hf-values", hf_values, "hf values")
        ->delimiter(',')
        ->capture_default_str();
    bool hf_as_M = false;
    table->add_flag("--hf-from-m", hf_as_M,
                    "treat --hf-values as the sweep parameter M and substitute H_F(M)");
    table->add_option("--table-out", table_out, "table CSV path (default <out-dir>/table_<axis>.csv)");

    CLI11_PARSE(app, argc, argv);

    try {
        validate(cfg);
        std::filesystem::create_directories(cfg.out_dir);
        std::ofstream cfg_out(std::filesystem::path(cfg.out_dir) / "config.ini");
        cfg_out << serialize_config(cfg);
        cfg_out.close();

        if (*table) {
            if (hf_as_M)
                for (double& v : hf_values) v = hf_from_M(v);
            return run_table(cfg, axis_name, axis_values, hf_values, table_out);
        }
        return run_single(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
