#pragma once

#include "spiralis/fields.hpp"

#include <array>
#include <numbers>
#include <vector>

namespace spiralis {

using Point = std::array<double, 2>;
using Polyline = std::vector<Point>;

Polyline to_polyline(const Streamline& s);

struct SpiralFit {
    double exponent = 0.0;
    double beta_lo = 0.0, beta_hi = 0.0;
    double residual = 0.0;  // rms deviation of the log-log fit
    int samples = 0;
};

// Least-squares slope of log r against log theta (theta = beta + u0) over [beta_lo, beta_hi].
// Requires theta_hi / theta_lo >= 4 and >= 16 samples covering 90% of the window in log theta.
SpiralFit fit_spiral_exponent(const Streamline& s, double beta_lo = 10.0 * std::numbers::pi,
                              double beta_hi = 40.0 * std::numbers::pi);

struct Intersection {
    int line_a, seg_a, line_b, seg_b;
    Point where;
};

struct IntersectionReport {
    double tol = 0.0;
    int segments = 0;
    std::vector<Intersection> hits;
};

// Self- and mutual intersections (segment distance < tol_x).  tol_x <= 0 selects
// 1e-9 times the diameter of all points.  Adjacent segments of one polyline are skipped.
IntersectionReport detect_intersections(const std::vector<Polyline>& lines, double tol_x = 0.0);

struct StratificationPoint {
    double beta = 0.0;
    double ratio = 0.0;  // osc(h) / sup|h| over the segment
};

// For each beta: the segment theta fixed, phi in [theta - beta, theta - beta + 2 pi), i.e. the
// beta-range [beta - 2 pi, beta].  Uses the t-free vorticity invariant h.  A beta whose segment
// leaves [h_beta, B_max] or violates a guard ends the series.
std::vector<StratificationPoint> stratification_ratio(const SolutionState& state, double theta,
                                                      const std::vector<double>& betas, int samples = 64);

struct DecayRow {
    int n = 0;
    double L = 0.0;     // ||L_n^{-1}|| <n>^2
    double PL = 0.0;    // ||P L_n^{-1}|| <n>^2
    double QL = 0.0;    // ||Q L_n^{-1}|| <n>
    double QQL = 0.0;   // ||(Q+n)(Q+1-n) L_n^{-1}||
    double QQPL = 0.0;  // ||(Q+n+1)(Q+2-n) P L_n^{-1}||
};

struct DecayReport {
    std::vector<DecayRow> rows;
    // Per column (L, PL, QL, QQL, QQPL): max over the list / first value - 1 > 0.2.
    std::array<bool, 5> growing{};
    std::array<double, 5> growth{};
};

DecayReport decay_report(const FlowParams& params, const std::vector<int>& n_list, const PGridPtr& grid,
                         const NeumannControls& controls = {});

} // namespace spiralis
