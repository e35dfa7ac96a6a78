#pragma once

#include "spiralis/linear_solve.hpp"

#include <array>
#include <string>
#include <vector>

namespace spiralis {

// Background + accumulated mode increments.  modes.bundles[k] holds the n = kN component of
// the scaled stream-function perturbation; the -n component is its reflection.  strength is
// the scaling parameter s of v^(s)(x, t) = s v(x, s t).
struct SolutionState {
    FlowParams params;
    PGridPtr pgrid;
    BetaGrid bgrid;
    VorticityData omega;
    ModeSet modes;
    double strength = 1.0;
    int increments = 0;
    int u_points = 64;  // u samples per period 2 pi / N for residual evaluation

    double psi_base() const { return 1.0 / (2.0 * params.mu - 1.0); }
};

SolutionState background_state(const FlowParams& params, PGridPtr pgrid, const BetaGrid& bgrid);
SolutionState linear_state(const FlowParams& params, PGridPtr pgrid, const BetaGrid& bgrid,
                           const VorticityData& omega, const NeumannControls& controls = {});
// state.omega and state.modes multiplied by eps (the perturbation part only).
SolutionState scaled_perturbation(const SolutionState& state, double eps);

// Values at one (beta, u) of the linear combinations of scaled derivatives of psi that the
// residual needs.  Index 0 = value, 1 = beta d_U, 2 = d_u.
//   T = dt_beta psi, U = dt_U psi, Y = d_u psi, V = (dt_U + 1) T, Yb = d_u T.
struct LocalFields {
    double psi = 0.0;
    std::array<double, 3> T{}, U{}, Y{}, V{}, Yb{};
    double Omega = 0.0;
};

// Nonlinear point quantities assembled from LocalFields.
struct PointResidual {
    double A = 0.0;   // dt_a psi (log-radius direction) = 2 T U / V
    double B = 0.0;   // dt_theta psi = Y - Yb U / V
    double gU = 0.0, gu = 0.0, W = 0.0;
    double dU_gU = 0.0;  // dt_U g^(U) = beta d_U g^(U) + (2 mu - 1) g^(U)
    double du_gu = 0.0;
    double F = 0.0;
};

PointResidual assemble_residual(const LocalFields& lf, double mu);

// Which positivity guard fails (empty when all hold): -T > 0, U > 0, -V > 0.
std::string guard_failure(const LocalFields& lf);

LocalFields local_fields(const SolutionState& state, double beta, double u);

struct FieldSample {
    double beta = 0.0, u = 0.0, t = 0.0;
    double psi = 0.0, d_beta = 0.0, d_U = 0.0, d_u = 0.0;
    double r_check = 0.0, q_check = 0.0, o_check = 0.0;
    double gU = 0.0, gu = 0.0, W = 0.0, F = 0.0;
    double d_a = 0.0, d_theta = 0.0;
    double a = 0.0, r = 0.0, theta = 0.0;
    std::array<double, 2> x{}, v{};
    double omega = 0.0;  // physical vorticity (beta / t) o_check, times strength
    double h = 0.0;      // t-free invariant omega r^{1/mu} = o_check r_check^{1/mu}, times strength
};

// Pointwise evaluation for beta > 0, t > 0.  Guard violation -> guard_violation error.
FieldSample eval_fields(const SolutionState& state, double beta, double u, double t);

// Real samples on the full symmetric beta grid x u_points per period 2 pi / N.
struct PhysicalField {
    BetaGrid bgrid;
    int u_points = 0;
    double period = 0.0;
    std::vector<double> values;  // row-major: index = i_beta * u_points + j_u

    double at(int i, int j) const { return values[static_cast<size_t>(i) * u_points + j]; }
    double sup_norm() const;
    // Sup over |beta| <= limit.
    double window_sup(double limit) const;
    double u_node(int j) const { return j * period / u_points; }
};

struct ResidualEval {
    PhysicalField F;
    double min_margin = 0.0;  // smallest of -T, U, -V over 0 < beta <= trusted, all u
    std::string guard;        // empty if all guards hold there
};

// F = 2 mu^2 (-dt_U g^(U) - d_u g^(u) + W) with the outer derivatives expanded analytically
// from the stored operator images.  Does not throw on guard failure; see ResidualEval::guard.
ResidualEval residual_F(const SolutionState& state);

// Same residual with beta d_U = beta (d_u - d_beta) applied to g^(U) by centered finite
// differences in beta (test oracle) at the given beta nodes and u.
double residual_F_fd(const SolutionState& state, double beta, double u, double h);

// Harmonic k (mode n = kN) of a physical field: samples along beta, normalised so that
// field = sum_k coeff_k e^{i k N u}.
std::vector<cplx> harmonic_row(const PhysicalField& f, int k);

struct CoordinateResult {
    double beta = 0.0;
    double u = 0.0;
    int iterations = 0;
};

// Along fixed theta = beta + u the log radius is strictly increasing in u; bisects for |x|.
CoordinateResult invert_coordinates(const SolutionState& state, std::array<double, 2> x, double t,
                                    double tol_r = 1e-12);

struct StreamlinePoint {
    double beta;
    std::array<double, 2> x;
    double omega;
    double h;
};

struct Streamline {
    double u0 = 0.0;
    std::vector<StreamlinePoint> points;
    bool truncated = false;
    std::string warning;
};

Streamline trace_streamline(const SolutionState& state, double u0, double beta_lo, double beta_hi,
                            double t, double step);

struct InitialSample {
    InitialVorticity omega0;
    double beta_min = 0.0;
    double sensitivity = 0.0;  // l1 change of the coefficients when beta_min is doubled
};

// omega_0 = h(beta_min, u) Fourier-transformed in u (modes n = kN, k <= n_max).
InitialSample sample_initial_vorticity(const SolutionState& state, double beta_min = 0.0,
                                       int u_points = 256);

} // namespace spiralis
