#ifndef NLCFEM_HARNESS_HPP
#define NLCFEM_HARNESS_HPP

#include "nlcfem/diagnostics.hpp"
#include "nlcfem/scheme.hpp"

#include <exception>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

namespace nlcfem {

/// First axis of a stability table; the second axis is always hf_value.
enum class TableAxis { beta, eps };

inline std::string to_string(TableAxis a) { return a == TableAxis::beta ? "beta" : "eps"; }

struct TableResult {
    TableAxis axis;
    std::vector<double> axis_values;
    std::vector<double> hf_values;
    std::vector<RunSummary> cells; // row-major: axis_values x hf_values
    const RunSummary& cell(std::size_t i, std::size_t j) const {
        return cells[i * hf_values.size() + j];
    }
};

/// One run per (axis value, hf) cell over a shared mesh. Per-cell failures
/// (configuration or solver errors) are recorded as unstable cells and the
/// harness continues. Runs are strictly sequential.
inline TableResult run_table_harness(TableAxis axis, std::span<const double> axis_values,
                                     std::span<const double> hf_values, const SimConfig& base) {
    TableResult table;
    table.axis = axis;
    table.axis_values.assign(axis_values.begin(), axis_values.end());
    table.hf_values.assign(hf_values.begin(), hf_values.end());
    const TriMesh mesh = build_uniform_triangulation(base.domain, base.nx, base.ny);
    for (double av : axis_values) {
        for (double hf : hf_values) {
            SimConfig cfg = base;
            (axis == TableAxis::beta ? cfg.beta : cfg.eps) = av;
            cfg.hf_value = hf;
            RunSummary summary;
            try {
                validate(cfg);
                const SimState initial =
                    build_preset_initial_data(preset_from_string(cfg.preset), cfg, mesh);
                const TimeLoopResult run = time_loop(cfg, mesh, initial);
                summary = detect_annihilation(run.records);
                if (!run.stable) {
                    summary.stable = false;
                    summary.reason = run.instability_reason;
                }
            } catch (const std::exception& err) {
                summary.stable = false;
                summary.reason = err.what();
            }
            table.cells.push_back(std::move(summary));
        }
    }
    return table;
}

/// Machine-readable summary mirroring the paper-style table layout:
/// columns axis1, axis2 (hf), stable, T_A, E_kin_max. Unstable cells carry
/// "--" and stable runs without annihilation carry "no_annihil" in the T_A
/// column.
inline void write_table_csv(const TableResult& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_table_csv: cannot open " + path.string());
    out << to_string(table.axis) << ",hf,stable,T_A,E_kin_max\n";
    out.precision(17);
    for (std::size_t i = 0; i < table.axis_values.size(); ++i) {
        for (std::size_t j = 0; j < table.hf_values.size(); ++j) {
            const RunSummary& s = table.cell(i, j);
            out << table.axis_values[i] << ',' << table.hf_values[j] << ','
                << (s.stable ? 1 : 0) << ',';
            if (!s.stable)
                out << "--";
            else if (s.no_annihilation)
                out << "no_annihil";
            else
                out << s.T_A;
            out << ',';
            if (!s.stable)
                out << "--";
            else
                out << s.E_kin_max;
            out << '\n';
        }
    }
    if (!out.good()) throw std::runtime_error("write_table_csv: write failed for " + path.string());
}

} // namespace nlcfem

#endif
