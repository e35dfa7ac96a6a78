#pragma once

#include "spiralis/modes.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace spiralis {

// A real 2pi/N-periodic angular profile: base + sum_n coeffs[n] e^{i n u}, n in N*Z.
// Both signs of n are stored; Hermitian symmetry coeffs[-n] = conj(coeffs[n]) is checked.
struct AngularSeries {
    int N = 8;
    double base = 0.0;
    std::map<int, cplx> coeffs;

    cplx at(int n) const;
    void set(int n, cplx c);  // sets n and -n (conjugate) together
    double eval(double u) const;
    // Sum of |coeffs| (the Wiener-algebra norm of the perturbation).
    double l1() const;
    double hermitian_defect() const;
    int max_k() const;  // largest |n| / N present
};

// Vorticity data Omega = base + Omega_dot, base = (2 mu - 1) / mu.
using VorticityData = AngularSeries;
// Initial vorticity profile omega_0 = base + delta omega_0.
using InitialVorticity = AngularSeries;

VorticityData background_vorticity(const FlowParams& params);
double initial_vorticity_base(const FlowParams& params);  // Omega_bar mu^{-1/(2 mu)}

// Checks N, n in N*Z, |n| <= N n_max, Hermitian symmetry and finiteness; data error otherwise.
void validate_series(const FlowParams& params, const AngularSeries& s, const char* what);

// Accumulated mode solution: one bundle per k = 0..n_max (mode n = k N); the -n mode is
// the reflection of the +n bundle.
struct ModeSet {
    std::vector<ModeBundle> bundles;

    const ModeBundle& at_k(int k) const { return bundles.at(k); }
    int n_max() const { return static_cast<int>(bundles.size()) - 1; }
};

ModeSet zero_modes(const FlowParams& params, const PGridPtr& grid);

// The chain images Qu and QQu are the measure-valued solutions of the chain equations; they
// differ from the transform-side derivative of u by terms concentrated at p = 0 (the jump and
// the logarithmic singularity that P^{-1} leaves there).  Fields therefore use the literal
// relation  (Q u)^ = (P u)^ + i n beta u^,  i.e. E = (2mu - 1)(Q - P) <-> (2mu - 1) i n beta.
// The literal operator is inverted by defect correction around the chain inverse:
//   u <- u + L_chain^{-1} spec(S - L_lit u),
// with the residual measured on |beta| <= BetaGrid::trusted().
struct LiteralControls {
    double tol = 1e-9;  // relative to the sup of the source transform
    int iter_max = 40;
};

struct LiteralStats {
    int iterations = 0;
    double residual = 0.0;  // sup over the trusted window
    double source = 0.0;
};

// Transform-side  L_lit u = R u - (2mu - 1) i n beta u  on every node of bg.
std::vector<cplx> literal_L_row(const FlowParams& params, const ModeBundle& b, const BetaGrid& bg);
// Literal ((Q - P) u)^(beta) = i n beta u^(beta).
cplx literal_Q_minus_P(const ModeBundle& b, double beta);

ModeBundle solve_mode(const FlowParams& params, int n, const SpectralMeasure& source,
                      const BetaGrid& bg, const NeumannControls& controls = {},
                      const LiteralControls& literal = {}, LiteralStats* stats = nullptr);

// Per mode n >= 0: bundle = L_n^{-1}(-2 mu^2 Omega_dot(n) delta_0).  Modes run in parallel.
ModeSet solve_linearized(const FlowParams& params, const PGridPtr& grid, const BetaGrid& bg,
                         const VorticityData& omega, const NeumannControls& controls = {},
                         const LiteralControls& literal = {});

// First-order initial-data map from the linear bundles, the beta -> 0 limit of h:
//   delta omega_0(n) = mu^{-1/(2mu)} [ -(2mu-1)/(2mu^2) ((Q - P) u_n)^(0) + Omega_dot(n) ].
InitialVorticity initial_vorticity_linear(const FlowParams& params, const ModeSet& modes,
                                          const VorticityData& omega);

// Multiplier delta omega_0(n) / Omega_dot(n) of the first-order map for a single mode n >= 0.
cplx initial_multiplier(const FlowParams& params, const PGridPtr& grid, const BetaGrid& bg, int n,
                        const NeumannControls& controls = {});

using InitialMap = std::function<InitialVorticity(const VorticityData&)>;

struct InversionReport {
    VorticityData omega;
    int iterations = 0;
    double mismatch = 0.0;
    std::vector<double> history;
};

// Fixed point Omega_dot <- Omega_dot + D^{-1}(target - forward(Omega_dot)), D = mu^{-1/(2mu)};
// stops when the l1 mismatch (base included) drops below tol.
InversionReport invert_initial_map(const FlowParams& params, const InitialVorticity& target,
                                   const InitialMap& forward, double tol = 1e-10, int iter_max = 50);

struct RecommendResult {
    bool ok = false;
    int N = 0;
    double factor = 0.0;  // worst-mode contraction estimate at the returned (or best) N
    std::vector<std::pair<int, double>> scanned;
};

// Smallest N in [2, N_cap] whose active modes all pass the guards and have probe-estimated
// ||E R^{-1}|| <= target.
RecommendResult recommend_N(double mu, int n_max, int N_cap, double target, const PGridPtr& grid);

struct ScaledData {
    double s;
    VorticityData omega;
    InitialVorticity initial;
};

// v^(s)(x, t) = s v(x, s t): Omega and omega_0 scale by s.
ScaledData scale_solution(double s, const VorticityData& omega, const InitialVorticity& initial);

} // namespace spiralis
