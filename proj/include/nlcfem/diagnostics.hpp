#ifndef NLCFEM_DIAGNOSTICS_HPP
#define NLCFEM_DIAGNOSTICS_HPP

#include "nlcfem/assembly.hpp"
#include "nlcfem/config.hpp"
#include "nlcfem/state.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlcfem {

/// Per-step energies and dissipation terms.
struct EnergyRecord {
    double t = 0.0;
    double kinetic = 0.0;   // 1/2 |u|^2
    double elastic = 0.0;   // lambda/2 |grad d|^2
    double penalty = 0.0;   // lambda int F_tilde(eps, d)
    double total = 0.0;
    double diss_visc = 0.0; // k nu |grad u|^2
    double diss_w = 0.0;    // k lambda gamma |w|^2
    double min_d = 0.0;     // min nodal |d|
    double max_d = 0.0;     // max nodal |d|
};

/// Mass/stiffness operators reused across energy evaluations of one mesh.
struct EnergyOps {
    SparseMat M_vec; // two-component P1 mass
    SparseMat L_vec; // two-component P1 stiffness

    explicit EnergyOps(const TriMesh& mesh)
        : M_vec(expand_to_components(assemble_mass_p1(mesh), 2)),
          L_vec(expand_to_components(assemble_stiffness_p1(mesh), 2)) {}
};

inline EnergyRecord compute_energies(const SimState& s, const SimConfig& cfg, const TriMesh& mesh,
                                     const EnergyOps& ops) {
    EnergyRecord r;
    r.t = s.time;
    r.kinetic = 0.5 * s.u.values.dot(ops.M_vec * s.u.values);
    const double grad_d_sq = s.d.values.dot(ops.L_vec * s.d.values);
    r.elastic = 0.5 * cfg.lambda * grad_d_sq;
    r.penalty = cfg.lambda * integrate_potential(mesh, s.d, cfg.eps);
    r.total = r.kinetic + r.elastic + r.penalty;
    r.diss_visc = cfg.k * cfg.nu * s.u.values.dot(ops.L_vec * s.u.values);
    double w_sq = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e)
        w_sq += mesh.area(e) * s.w.elem2(e).squaredNorm();
    r.diss_w = cfg.k * cfg.lambda * cfg.gamma * w_sq;
    r.min_d = std::numeric_limits<double>::infinity();
    r.max_d = 0.0;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const double n = s.d.node2(v).norm();
        r.min_d = std::min(r.min_d, n);
        r.max_d = std::max(r.max_d, n);
    }
    return r;
}

inline EnergyRecord compute_energies(const SimState& s, const SimConfig& cfg,
                                     const TriMesh& mesh) {
    return compute_energies(s, cfg, mesh, EnergyOps(mesh));
}

/// Outcome of a completed (or aborted) run.
struct RunSummary {
    bool stable = true;
    std::string reason;            // why the run is flagged unstable
    double T_A = 0.0;              // time of max kinetic energy (stable runs)
    double E_kin_max = 0.0;
    bool flat_curve = false;       // E_kin_max < 1e-20; T_A not meaningful
    bool no_annihilation = false;  // stable, but the defects never merged
    EnergyRecord final_record;
};

/// Annihilation detection: T_A is the time of the kinetic-energy maximum
/// (ties resolved to the earliest time). A run is classified "no annihilation"
/// when it is stable, max E_kin stays below 1e-2 times the initial elastic
/// energy, and no annihilation event is seen in the director. The event is
/// the minimum nodal |d| dipping to 0.5 or below (a defect core resolved by
/// the mesh) and afterwards rising back through 0.5 (the cores merged and the
/// field healed). The dip is anchored to the trajectory minimum rather than
/// the first record because core sampling depends on how the nodes align with
/// the moving defects; the recovery must come after the deepest dip. When
/// min |d| never reaches 0.5 (eps well below h, cores invisible to the mesh)
/// the director signal is vacuous and the kinetic-energy condition decides
/// alone.
/// Instability is inferred from the records (non-finite energies or total
/// exceeding 1e3 times the initial value); callers that aborted a run early
/// should override `stable`/`reason` with what the time loop observed.
inline RunSummary detect_annihilation(const std::vector<EnergyRecord>& records) {
    RunSummary s;
    if (records.empty()) {
        s.stable = false;
        s.reason = "no records";
        return s;
    }
    const double E0 = records.front().total;
    for (const auto& r : records) {
        if (!std::isfinite(r.total)) {
            s.stable = false;
            s.reason = "non-finite energy at t=" + std::to_string(r.t);
            break;
        }
        if (r.total > 1e3 * E0) {
            s.stable = false;
            s.reason = "energy exceeded 1e3 x initial at t=" + std::to_string(r.t);
            break;
        }
        if (r.kinetic > s.E_kin_max) {
            s.E_kin_max = r.kinetic;
            s.T_A = r.t;
        }
    }
    s.final_record = records.back();
    if (!s.stable) return s;
    s.flat_curve = s.E_kin_max < 1e-20;
    std::size_t i_min = 0;
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i].min_d < records[i_min].min_d) i_min = i;
    double recovered = 0.0;
    for (std::size_t i = i_min; i < records.size(); ++i)
        recovered = std::max(recovered, records[i].min_d);
    const bool annihilation_event = records[i_min].min_d <= 0.5 && recovered > 0.5;
    s.no_annihilation =
        s.E_kin_max < 1e-2 * records.front().elastic && !annihilation_event;
    return s;
}

namespace detail {
inline std::string fmt17(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}
} // namespace detail

/// CSV energy log; one row per record, 17 significant digits.
inline void write_energy_csv(const std::vector<EnergyRecord>& records,
                             const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_energy_csv: cannot open " + path.string());
    out << "t,E_kin,E_elastic,E_penalty,E_total,diss_visc,diss_w,min_d,max_d\n";
    for (const auto& r : records) {
        out << detail::fmt17(r.t) << ',' << detail::fmt17(r.kinetic) << ','
            << detail::fmt17(r.elastic) << ',' << detail::fmt17(r.penalty) << ','
            << detail::fmt17(r.total) << ',' << detail::fmt17(r.diss_visc) << ','
            << detail::fmt17(r.diss_w) << ',' << detail::fmt17(r.min_d) << ','
            << detail::fmt17(r.max_d) << '\n';
    }
    if (!out.good()) throw std::runtime_error("write_energy_csv: write failed for " + path.string());
}

inline std::vector<EnergyRecord> read_energy_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_energy_csv: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("read_energy_csv: missing header in " + path.string());
    std::vector<EnergyRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        double v[9];
        for (int i = 0; i < 9; ++i) {
            if (!std::getline(ls, cell, ','))
                throw std::runtime_error("read_energy_csv: short row in " + path.string());
            v[i] = std::stod(cell);
        }
        records.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
    }
    return records;
}

/// Legacy-ASCII VTK snapshot of one state: unstructured triangle grid with
/// point data u, d, |d| and p. Returns the written path,
/// {out_dir}/{prefix}_{step:06}.vtk with the step taken from the state.
inline std::filesystem::path write_field_snapshot(const SimState& s, const TriMesh& mesh,
                                                  const std::filesystem::path& out_dir,
                                                  const std::string& prefix = "fields") {
    std::ostringstream name;
    name << prefix << '_' << std::setw(6) << std::setfill('0') << s.step_index << ".vtk";
    const std::filesystem::path path = out_dir / name.str();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_field_snapshot: cannot open " + path.string());
    out.precision(17);
    out << "# vtk DataFile Version 2.0\n";
    out << "nlcfem step " << s.step_index << " t=" << s.time << "\n";
    out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (int v = 0; v < mesh.num_vertices(); ++v)
        out << mesh.vertex(v).x() << ' ' << mesh.vertex(v).y() << " 0\n";
    out << "CELLS " << mesh.num_elements() << ' ' << 4 * mesh.num_elements() << "\n";
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.tri(e);
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << "\n";
    }
    out << "CELL_TYPES " << mesh.num_elements() << "\n";
    for (int e = 0; e < mesh.num_elements(); ++e) out << "5\n";
    out << "POINT_DATA " << mesh.num_vertices() << "\n";
    out << "VECTORS velocity double\n";
    for (int v = 0; v < mesh.num_vertices(); ++v)
        out << s.u.at(v, 0) << ' ' << s.u.at(v, 1) << " 0\n";
    out << "VECTORS director double\n";
    for (int v = 0; v < mesh.num_vertices(); ++v)
        out << s.d.at(v, 0) << ' ' << s.d.at(v, 1) << " 0\n";
    out << "SCALARS director_norm double 1\nLOOKUP_TABLE default\n";
    for (int v = 0; v < mesh.num_vertices(); ++v) out << s.d.node2(v).norm() << "\n";
    out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (int v = 0; v < mesh.num_vertices(); ++v) out << s.p.values[v] << "\n";
    if (!out.good())
        throw std::runtime_error("write_field_snapshot: write failed for " + path.string());
    return path;
}

} // namespace nlcfem

#endif
