#pragma once

#include "spiralis/fields.hpp"

#include <string>
#include <vector>

namespace spiralis {

struct NewtonControls {
    double tol_residual = 0.0;  // <= 0 selects 1e-8 |Omega_bar|
    int iter_max = 20;
    double damping = 1.0;       // initial lambda in (0, 1]
    int backtrack = 4;          // lambda halvings before an iteration is declared stalled
    double smallness = 0.05;    // l1(Omega_dot) must stay below smallness * |Omega_bar|
    NeumannControls neumann;
    LiteralControls literal;
};

enum class NewtonStatus { converged, max_iterations, stagnation, guard_violation };
const char* status_name(NewtonStatus s);

struct NewtonIteration {
    int iteration = 0;
    double residual = 0.0;     // sup of F over the trusted beta window and all u
    double lambda = 0.0;
    double min_margin = 0.0;   // smallest of -T, U, -V over 0 < beta <= trusted
};

struct NewtonReport {
    NewtonStatus status = NewtonStatus::converged;
    std::string message;
    double tol = 0.0;
    int iterations = 0;
    double initial_residual = 0.0;
    double final_residual = 0.0;
    // Sup over the trusted window of the first harmonic that is not retained (k = n_max + 1),
    // counted twice for the +-n pair: the part of the final residual no increment can remove.
    double truncation = 0.0;
    std::vector<NewtonIteration> history;  // entry 0 is the starting state
};

struct NewtonResult {
    SolutionState state;  // last accepted (valid) state
    NewtonReport report;
};

// Chord Newton: F on the (beta, u) grid -> harmonics in u -> physical_to_spectral ->
// increment = L_lit^{-1}(-F_k) per mode -> state += lambda * increment.  Guard violations and
// stagnation are reported in the status, with the last valid state returned.
NewtonResult solve_nonlinear(const FlowParams& params, PGridPtr pgrid, const BetaGrid& bgrid,
                             const VorticityData& omega, const NewtonControls& controls = {});

// Throws the Error matching a non-converged status (guard_violation or stagnation/divergence).
void require_converged(const NewtonReport& report);

} // namespace spiralis
