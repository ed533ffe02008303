#ifndef NLCFEM_STATE_HPP
#define NLCFEM_STATE_HPP

#include "nlcfem/fields.hpp"

#include <limits>

namespace nlcfem {

/// Discrete state carried across time steps. u vanishes on boundary nodes,
/// p has zero mean, w holds the auxiliary variable recovered in the last
/// director step (zero before the first step).
struct SimState {
    P1VectorField u;
    P1ScalarField p;
    P1VectorField d;
    P0VectorField w;
    double time = 0.0;
    int step_index = 0;
};

struct StageStats {
    long iterations = 0;
    double residual = 0.0;
};

/// Per-step solver statistics and energy bookkeeping. The director stage
/// fills its own stats; the time loop completes the energy fields.
struct StepReport {
    StageStats director;
    StageStats pressure;
    StageStats velocity[2];
    double energy_before = std::numeric_limits<double>::quiet_NaN();
    double energy_after = std::numeric_limits<double>::quiet_NaN();
    double visc_dissipation = std::numeric_limits<double>::quiet_NaN(); // k nu |grad u+|^2
    double w_dissipation = std::numeric_limits<double>::quiet_NaN();    // k lambda gamma |w+|^2
    /// energy_before - energy_after - dissipations; nonnegative (up to
    /// solver tolerance) whenever hf_value >= theoretical_hf(2).
    double energy_margin = std::numeric_limits<double>::quiet_NaN();
};

} // namespace nlcfem

#endif
