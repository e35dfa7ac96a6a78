#pragma once

#include "spiralis/measure.hpp"

#include <string>
#include <vector>

namespace spiralis {

// Similarity exponent mu, N-fold symmetry and the number of retained harmonics:
// active modes are n = N*k, |k| <= n_max.
struct FlowParams {
    double mu = 1.0;
    int N = 8;
    int n_max = 4;

    double sigma() const { return -1.0 / mu; }
    double omega_base() const { return (2.0 * mu - 1.0) / mu; }
};

struct ModeExponents {
    double m_plus;
    double m_minus;
};

ModeExponents exponents(const FlowParams& params, int n);

struct GuardReport {
    bool ok = true;
    std::string message;
};

// ok iff (2 + n) mu != 1 and (2 - n) mu != 1, i.e. Q + m_+- is invertible.
GuardReport guard_invertibility(const FlowParams& params, int n);

// Config errors for mu <= 1/2, N < 2, n_max < 0; guard violation for any active mode.
void validate(const FlowParams& params);

struct NeumannControls {
    double tol = 1e-10;
    int k_max = 200;
};

// Per-mode solution u of L_n u = S_in and its operator images.  P = p d/dp, Q = (p - n) d/dp.
//   QQu  = (Q + n)(Q + 1 - n) u
//   QQPu = (Q + n + 1)(Q + 2 - n) P u
//   Ru   = R u = (Q + m_-)(Q + m_+) P u, i.e. the Neumann sum that R^{-1} was applied to.
// Plain second-order images follow by linearity: Q^2 u = QQu - Qu - n(1-n) u and
// Q^2 P u = QQPu - 3 QPu - (n+1)(2-n) Pu.
struct ModeBundle {
    int n = 0;
    SpectralMeasure u, Pu, Qu, QQu, QPu, QQPu, Ru;
    int terms = 0;
    double tail_norm = 0.0;
    double contraction = 0.0;
    double truncated_mass = 0.0;

    explicit ModeBundle(PGridPtr grid, int n = 0);

    SpectralMeasure Q2u() const;
    SpectralMeasure Q2Pu() const;
    // L_n u = R u - (2 mu - 1)(Q - P) u rebuilt from the stored images.
    SpectralMeasure L_image(double mu) const;
    // Images of the -n mode for a real field: p -> -p and conjugation.
    ModeBundle reflected() const;
    ModeBundle& axpy(cplx a, const ModeBundle& other);
    double l1_max() const;
};

struct ChainStats {
    double truncated_mass = 0.0;
};

// R^{-1} = K_{0,0} K_{n,-m_-} K_{n,-m_+}.
SpectralMeasure apply_R_inv(const FlowParams& params, int n, const SpectralMeasure& m,
                            ChainStats* stats = nullptr);
// (2 mu - 1)(Q - P) R^{-1} m through the derivative-free chain; zero for n = 0.
SpectralMeasure apply_ER_inv(const FlowParams& params, int n, const SpectralMeasure& m,
                             ChainStats* stats = nullptr);
// L_n^{-1} = R^{-1} sum_k (E R^{-1})^k with all bundle images.
ModeBundle apply_L_inv(const FlowParams& params, int n, const SpectralMeasure& m,
                       const NeumannControls& controls = {});

// Forward L_n by finite-difference compositions of apply_forward (test oracle only).
SpectralMeasure apply_L_forward(const FlowParams& params, int n, const SpectralMeasure& m);

enum class OpTag { R_inv, ER_inv, L_inv, PL_inv, QL_inv, QQL_inv, QQPL_inv };
const char* op_name(OpTag op);

// delta_0, delta_n (if n is on the grid), delta_{+-P_max/2} and four unit-mass hats.
std::vector<SpectralMeasure> default_probes(const PGridPtr& grid, int n);

// max over probes of |op f| / |f| -- a lower bound on the operator norm.
double estimate_norm(OpTag op, const FlowParams& params, int n,
                     const std::vector<SpectralMeasure>& probes,
                     const NeumannControls& controls = {});

} // namespace spiralis
