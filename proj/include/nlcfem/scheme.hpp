#ifndef NLCFEM_SCHEME_HPP
#define NLCFEM_SCHEME_HPP

#include "nlcfem/assembly.hpp"
#include "nlcfem/config.hpp"
#include "nlcfem/diagnostics.hpp"
#include "nlcfem/state.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace nlcfem {

struct DirectorStepResult {
    P1VectorField d;
    P0VectorField w;
    StageStats stats;
};

struct PressureStepResult {
    P1ScalarField p;
    StageStats stats;
};

struct VelocityStepResult {
    P1VectorField u;
    StageStats stats[2];
};

/// Nodal interpolation of a continuous initial director.
inline P1VectorField init_director(const std::function<Eigen::Vector2d(double, double)>& d0,
                                   const TriMesh& mesh) {
    P1VectorField d(mesh, 2);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const Eigen::Vector2d val = d0(mesh.vertex(v).x(), mesh.vertex(v).y());
        d.at(v, 0) = val.x();
        d.at(v, 1) = val.y();
    }
    return d;
}

/// One full time step of the splitting scheme, with the constant operators
/// (mass, stiffness, mixed P1/P0 mass, pressure gradient, stabilization, and
/// the factorized pressure matrix) assembled once per mesh/config pair.
class Stepper {
  public:
    Stepper(const TriMesh& mesh, const SimConfig& cfg)
        : mesh_(&mesh), cfg_(cfg), ops_(mesh) {
        validate(cfg);
        if (cfg.dim != 2)
            throw ConfigError("Stepper: the time loop is implemented for dim == 2 only");
        nv_ = mesh.num_vertices();
        ne_ = mesh.num_elements();
        hf_coef_ = cfg.hf_value / (2.0 * cfg.eps * cfg.eps);

        M_sc_ = assemble_mass_p1(mesh);
        L_sc_ = assemble_stiffness_p1(mesh);
        // Constant part of the Schur matrix: L_d + (hf/2eps^2) M_d.
        S0_ = SparseMat(ops_.L_vec + hf_coef_ * ops_.M_vec);
        Mwd_ = assemble_p1p0_mass(mesh, 2);
        Mdw_ = SparseMat(Mwd_.transpose());
        Gp_ = assemble_pressure_gradient(mesh);
        m_int_ = assemble_p1_integrals(mesh);

        // Pressure matrix k L + j with a zero-mean multiplier border,
        // constant in time; factorize once.
        {
            const SparseMat J = assemble_pressure_stabilization(mesh, cfg.S, cfg.nu);
            const SparseMat P = SparseMat(cfg.k * L_sc_ + J);
            std::vector<Triplet> trips;
            trips.reserve(P.nonZeros() + 2u * nv_);
            for (int row = 0; row < P.outerSize(); ++row)
                for (SparseMat::InnerIterator it(P, row); it; ++it)
                    trips.emplace_back(it.row(), it.col(), it.value());
            for (int a = 0; a < nv_; ++a) {
                trips.emplace_back(a, nv_, m_int_[a]);
                trips.emplace_back(nv_, a, m_int_[a]);
            }
            P_aug_ = SparseMatCol(nv_ + 1, nv_ + 1);
            P_aug_.setFromTriplets(trips.begin(), trips.end());
            pressure_lu_.compute(P_aug_);
            if (pressure_lu_.info() != Eigen::Success)
                throw SolverError("Stepper: pressure matrix factorization failed", 0.0, 0);
        }

        // Interior-node numbering for the Dirichlet velocity.
        interior_index_.assign(nv_, -1);
        n_int_ = 0;
        for (int v = 0; v < nv_; ++v)
            if (!mesh.is_boundary(v)) interior_index_[v] = n_int_++;
        M_int_ = restrict_matrix(M_sc_, interior_index_, n_int_);
        L_int_ = restrict_matrix(L_sc_, interior_index_, n_int_);
    }

    const SimConfig& config() const { return cfg_; }
    const TriMesh& mesh() const { return *mesh_; }
    const EnergyOps& energy_ops() const { return ops_; }

    /// Director/auxiliary stage: Schur-complement solve for d^{n+1}, then
    /// blockwise recovery of w^{n+1} (skippable when the caller does not
    /// need w; the time loop always recovers it for the energy audit).
    DirectorStepResult director_step(const SimState& s, bool recover_w = true) const {
        const TriMesh& mesh = *mesh_;
        const double k = cfg_.k;
        const BlockDiagMatrix Ew =
            assemble_Ew(mesh, s.d, cfg_.lambda, cfg_.beta, cfg_.gamma, k);
        const BlockDiagMatrix Einv = invert_blockdiag(Ew);

        // Stretch-transport load F_w, elementwise from the velocity average.
        Vector Fw(static_cast<long>(ne_) * 2);
        for (int e = 0; e < ne_; ++e) {
            const Eigen::Matrix2d G = element_jacobian(s.d, e);
            Fw.segment<2>(2 * e) =
                mesh.area(e) * (stretch_to_w(G, cfg_.beta) * element_mean(s.u, e));
        }

        // RHS = M_dw E^-1 [ (1/k) M_wd D - F_w ] + (hf/2eps^2) M D - (f_tilde, phi).
        const Vector MwdD = Mwd_ * s.d.values;
        Vector rhs = Mdw_ * Einv.apply(MwdD / k - Fw);
        rhs += hf_coef_ * (ops_.M_vec * s.d.values);
        rhs -= assemble_potential_load(mesh, s.d, cfg_.eps);

        // Schur matrix: S0 + (1/k) M_dw E^-1 M_wd. The second term couples
        // the two components on each element through the inverse block.
        std::vector<Triplet> trips;
        trips.reserve(36u * ne_);
        for (int e = 0; e < ne_; ++e) {
            const auto& t = mesh.tri(e);
            const double scale = mesh.area(e) * mesh.area(e) / (9.0 * k);
            const SmallMat& B = Einv.block(e);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    for (int c = 0; c < 2; ++c)
                        for (int c2 = 0; c2 < 2; ++c2)
                            trips.emplace_back(t[a] * 2 + c, t[b] * 2 + c2,
                                               scale * B(c, c2));
        }
        SparseMat T(static_cast<long>(nv_) * 2, static_cast<long>(nv_) * 2);
        T.setFromTriplets(trips.begin(), trips.end());
        const SparseMat A = SparseMat(S0_ + T);

        SolveResult sol = sparse_solve_spd(A, rhs);

        DirectorStepResult out;
        out.d = P1VectorField(mesh, 2);
        out.d.values = std::move(sol.x);
        out.stats = {sol.iterations, sol.residual};
        if (recover_w) {
            out.w = P0VectorField(mesh, 2);
            out.w.values = Einv.apply((MwdD - Mwd_ * out.d.values) / k - Fw);
        }
        return out;
    }

    /// Projection stage: k (grad p, grad q) + j(p, q) = (u_tilde, grad q)
    /// with u_tilde = u^n + lambda k T_u(grad d^n) w^{n+1} evaluated
    /// elementwise, and the zero-mean constraint via a scalar multiplier.
    PressureStepResult pressure_step(const SimState& s, const P0VectorField& w_next) const {
        const TriMesh& mesh = *mesh_;
        Vector rhs = Vector::Zero(nv_ + 1);
        for (int e = 0; e < ne_; ++e) {
            const auto& t = mesh.tri(e);
            const Eigen::Matrix2d G = element_jacobian(s.d, e);
            const Eigen::Vector2d ut =
                element_mean(s.u, e) +
                cfg_.lambda * cfg_.k * (stretch_to_u(G, cfg_.beta) * w_next.elem2(e));
            for (int a = 0; a < 3; ++a) rhs[t[a]] += mesh.area(e) * ut.dot(mesh.grad(e, a));
        }
        Vector sol = pressure_lu_.solve(rhs);
        if (pressure_lu_.info() != Eigen::Success)
            throw SolverError("pressure_step: direct solve failed", 0.0, 0);
        PressureStepResult out;
        out.p = P1ScalarField(mesh);
        out.p.values = sol.head(nv_);
        const double rnorm = rhs.norm();
        out.stats = {0, rnorm > 0.0 ? (P_aug_ * sol - rhs).norm() / rnorm : 0.0};
        return out;
    }

    /// Momentum stage: one scalar operator M/k + C(u^n) + nu L0 (interior
    /// nodes, symmetric Dirichlet elimination) shared by both components.
    VelocityStepResult velocity_step(const SimState& s, const P0VectorField& w_next,
                                     const P1ScalarField& p_next) const {
        const TriMesh& mesh = *mesh_;
        const double k = cfg_.k;
        const SparseMat C = assemble_convection(mesh, s.u);
        const SparseMat A =
            SparseMat(M_int_ / k + restrict_matrix(C, interior_index_, n_int_) +
                      cfg_.nu * L_int_);

        // Forcing load on vector dofs: minus the elastic force, i.e.
        // +lambda T_u(grad d^n) w^{n+1} tested against phi_a e_c, plus the
        // pressure gradient of p^{n+1}.
        Vector load = Gp_ * p_next.values;
        for (int e = 0; e < ne_; ++e) {
            const auto& t = mesh.tri(e);
            const Eigen::Matrix2d G = element_jacobian(s.d, e);
            const Eigen::Vector2d f =
                cfg_.lambda * (stretch_to_u(G, cfg_.beta) * w_next.elem2(e));
            const double v = mesh.area(e) / 3.0;
            for (int a = 0; a < 3; ++a) {
                load[static_cast<long>(t[a]) * 2 + 0] -= v * f.x();
                load[static_cast<long>(t[a]) * 2 + 1] -= v * f.y();
            }
        }

        VelocityStepResult out;
        out.u = P1VectorField(mesh, 2);
        for (int c = 0; c < 2; ++c) {
            Vector uc(nv_);
            for (int v = 0; v < nv_; ++v) uc[v] = s.u.at(v, c);
            const Vector Mu = M_sc_ * uc;
            Vector rhs(n_int_);
            for (int v = 0; v < nv_; ++v) {
                const int i = interior_index_[v];
                if (i < 0) continue;
                rhs[i] = Mu[v] / k - load[static_cast<long>(v) * 2 + c];
            }
            SolveResult sol = sparse_solve_general(A, rhs);
            out.stats[c] = {sol.iterations, sol.residual};
            for (int v = 0; v < nv_; ++v)
                if (interior_index_[v] >= 0) out.u.at(v, c) = sol.x[interior_index_[v]];
        }
        return out;
    }

    /// Full step in place; returns the energies of the new state and fills
    /// the report.
    EnergyRecord advance(SimState& s, StepReport& report) const {
        DirectorStepResult ds = director_step(s, true);
        report.director = ds.stats;
        PressureStepResult ps = pressure_step(s, ds.w);
        report.pressure = ps.stats;
        VelocityStepResult vs = velocity_step(s, ds.w, ps.p);
        report.velocity[0] = vs.stats[0];
        report.velocity[1] = vs.stats[1];

        s.d = std::move(ds.d);
        s.w = std::move(ds.w);
        s.p = std::move(ps.p);
        s.u = std::move(vs.u);
        s.step_index += 1;
        s.time += cfg_.k;

        const EnergyRecord rec = compute_energies(s, cfg_, *mesh_, ops_);
        report.energy_after = rec.total;
        report.visc_dissipation = rec.diss_visc;
        report.w_dissipation = rec.diss_w;
        if (std::isfinite(report.energy_before))
            report.energy_margin =
                report.energy_before - rec.total - rec.diss_visc - rec.diss_w;
        return rec;
    }

  private:
    const TriMesh* mesh_;
    SimConfig cfg_;
    EnergyOps ops_;
    int nv_ = 0, ne_ = 0, n_int_ = 0;
    double hf_coef_ = 0.0;
    SparseMat M_sc_, L_sc_, S0_, Mwd_, Mdw_, Gp_, M_int_, L_int_;
    Vector m_int_;
    SparseMatCol P_aug_;
    Eigen::SparseLU<SparseMatCol> pressure_lu_;
    std::vector<int> interior_index_;
};

/// One-shot wrappers around Stepper for single-stage use.
inline DirectorStepResult director_step(const SimState& s, const SimConfig& cfg,
                                        const TriMesh& mesh, bool recover_w = true) {
    return Stepper(mesh, cfg).director_step(s, recover_w);
}

inline PressureStepResult pressure_step(const SimState& s, const P1VectorField& /*d_next*/,
                                        const P0VectorField& w_next, const SimConfig& cfg,
                                        const TriMesh& mesh) {
    return Stepper(mesh, cfg).pressure_step(s, w_next);
}

inline VelocityStepResult velocity_step(const SimState& s, const P1VectorField& /*d_next*/,
                                        const P0VectorField& w_next, const P1ScalarField& p_next,
                                        const SimConfig& cfg, const TriMesh& mesh) {
    return Stepper(mesh, cfg).velocity_step(s, w_next, p_next);
}

/// Stabilized initialization solve for (u0h, p0h) from nodal velocity data:
///   (u0h, v) + (grad p0h, v) = (u0, v)      for all interior v,
///   (div u0h, q) + j(p0h, q) = 0            for all q, int p0h = 0.
/// Assembled as one symmetric system with a zero-mean multiplier (the
/// divergence pairing is the exact transpose of the pressure gradient for
/// boundary-zero velocities) and solved directly.
inline std::pair<P1VectorField, P1ScalarField> init_velocity_pressure(const P1VectorField& u0,
                                                                      const TriMesh& mesh,
                                                                      const SimConfig& cfg) {
    const int nv = mesh.num_vertices();
    std::vector<int> interior_index(nv, -1);
    int n_int = 0;
    for (int v = 0; v < nv; ++v)
        if (!mesh.is_boundary(v)) interior_index[v] = n_int++;

    const SparseMat M_vec = expand_to_components(assemble_mass_p1(mesh), 2);
    const SparseMat Gp = assemble_pressure_gradient(mesh);
    const SparseMat J = assemble_pressure_stabilization(mesh, cfg.S, cfg.nu);
    const Vector m = assemble_p1_integrals(mesh);

    const int nu_dof = 2 * n_int;
    const int n_total = nu_dof + nv + 1;
    auto u_dof = [&](int v, int c) { return 2 * interior_index[v] + c; };

    std::vector<Triplet> trips;
    // (u, v) block on interior vector dofs.
    for (int row = 0; row < M_vec.outerSize(); ++row) {
        if (interior_index[row / 2] < 0) continue;
        for (SparseMat::InnerIterator it(M_vec, row); it; ++it) {
            if (interior_index[it.col() / 2] < 0) continue;
            trips.emplace_back(u_dof(row / 2, row % 2), u_dof(it.col() / 2, it.col() % 2),
                               it.value());
        }
    }
    // (grad p, v) block and its transpose.
    for (int row = 0; row < Gp.outerSize(); ++row) {
        if (interior_index[row / 2] < 0) continue;
        for (SparseMat::InnerIterator it(Gp, row); it; ++it) {
            trips.emplace_back(u_dof(row / 2, row % 2), nu_dof + it.col(), it.value());
            trips.emplace_back(nu_dof + it.col(), u_dof(row / 2, row % 2), it.value());
        }
    }
    // -j(p, q) block and the mean constraint border.
    for (int row = 0; row < J.outerSize(); ++row)
        for (SparseMat::InnerIterator it(J, row); it; ++it)
            trips.emplace_back(nu_dof + it.row(), nu_dof + it.col(), -it.value());
    for (int a = 0; a < nv; ++a) {
        trips.emplace_back(nu_dof + a, n_total - 1, -m[a]);
        trips.emplace_back(n_total - 1, nu_dof + a, -m[a]);
    }

    SparseMatCol A(n_total, n_total);
    A.setFromTriplets(trips.begin(), trips.end());

    Vector rhs = Vector::Zero(n_total);
    const Vector Mu0 = M_vec * u0.values;
    for (int v = 0; v < nv; ++v)
        if (interior_index[v] >= 0)
            for (int c = 0; c < 2; ++c) rhs[u_dof(v, c)] = Mu0[static_cast<long>(v) * 2 + c];

    Eigen::SparseLU<SparseMatCol> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw SolverError("init_velocity_pressure: factorization failed", 0.0, 0);
    const Vector sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
        throw SolverError("init_velocity_pressure: solve failed", 0.0, 0);

    P1VectorField u0h(mesh, 2);
    for (int v = 0; v < nv; ++v)
        if (interior_index[v] >= 0)
            for (int c = 0; c < 2; ++c) u0h.at(v, c) = sol[u_dof(v, c)];
    P1ScalarField p0h(mesh);
    p0h.values = sol.segment(nu_dof, nv);
    return {std::move(u0h), std::move(p0h)};
}

/// Initial fields of a preset: interpolated normalized director, and the
/// initialization solve applied to u0 = 0 (which returns exact zeros).
inline SimState build_preset_initial_data(Preset preset, const SimConfig& cfg,
                                          const TriMesh& mesh) {
    SimState s;
    s.d = init_director(
        [&](double x, double y) { return preset_d0(preset, cfg.eps, x, y); }, mesh);
    auto [u0h, p0h] = init_velocity_pressure(P1VectorField(mesh, 2), mesh, cfg);
    s.u = std::move(u0h);
    s.p = std::move(p0h);
    s.w = P0VectorField(mesh, 2);
    return s;
}

struct TimeLoopResult {
    SimState state;
    std::vector<EnergyRecord> records;
    std::vector<StepReport> reports;
    bool stable = true;
    std::string instability_reason;
    int steps_completed = 0;
    /// Set by the config-only overload, which builds the mesh itself; keeps
    /// the mesh pointers inside `state` valid after return.
    std::shared_ptr<const TriMesh> owned_mesh;
};

using StepObserver = std::function<void(const SimState&, const EnergyRecord&)>;

/// Run the splitting scheme for round(T_final / k) steps, recording
/// energies each step. Halts early (flagged, not thrown) when the total
/// energy exceeds 1e3 times its initial value or turns non-finite; solver
/// failures propagate annotated with the step index.
inline TimeLoopResult time_loop(const SimConfig& cfg, const TriMesh& mesh,
                                const SimState& initial, const StepObserver& observer = {}) {
    Stepper stepper(mesh, cfg);
    TimeLoopResult res;
    res.state = initial;

    const EnergyRecord first = compute_energies(res.state, cfg, mesh, stepper.energy_ops());
    res.records.push_back(first);
    if (observer) observer(res.state, first);
    const double E0 = first.total;

    const long n_steps = std::lround(cfg.T_final / cfg.k);
    res.reports.reserve(n_steps);
    for (long n = 1; n <= n_steps; ++n) {
        StepReport rep;
        rep.energy_before = res.records.back().total;
        EnergyRecord rec;
        try {
            rec = stepper.advance(res.state, rep);
        } catch (const SolverError& err) {
            throw SolverError("time_loop: step " + std::to_string(n) + ": " + err.what(),
                              err.residual, err.iterations);
        }
        res.records.push_back(rec);
        res.reports.push_back(rep);
        res.steps_completed = static_cast<int>(n);
        if (observer) observer(res.state, rec);
        if (!std::isfinite(rec.total) || rec.total > 1e3 * E0) {
            res.stable = false;
            res.instability_reason = !std::isfinite(rec.total)
                                         ? "non-finite energy at step " + std::to_string(n)
                                         : "energy exceeded 1e3 x initial at step " +
                                               std::to_string(n);
            break;
        }
    }
    return res;
}

/// Convenience overload: builds the mesh and the preset initial data from
/// the config. The returned result owns the mesh.
inline TimeLoopResult time_loop(const SimConfig& cfg, const StepObserver& observer = {}) {
    validate(cfg);
    auto mesh = std::make_shared<const TriMesh>(
        build_uniform_triangulation(cfg.domain, cfg.nx, cfg.ny));
    const SimState initial =
        build_preset_initial_data(preset_from_string(cfg.preset), cfg, *mesh);
    TimeLoopResult res = time_loop(cfg, *mesh, initial, observer);
    res.owned_mesh = std::move(mesh);
    return res;
}

} // namespace nlcfem

#endif
