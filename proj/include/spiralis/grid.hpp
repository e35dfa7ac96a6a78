#pragma once

#include <memory>

namespace spiralis {

// Uniform cells [edge(j), edge(j+1)] covering [-p_max, p_max].  The cell count
// is even, so p = 0 is an edge and atoms at 0 sit exactly between two cells.
struct PGrid {
    double p_max = 40.0;
    double h = 0.02;
    int cells = 4000;

    double edge(int k) const { return -p_max + k * h; }
    double center(int j) const { return -p_max + (j + 0.5) * h; }
    int zero_edge() const { return cells / 2; }
    bool contains(double p) const { return p >= -p_max - 1e-12 && p <= p_max + 1e-12; }
};

using PGridPtr = std::shared_ptr<const PGrid>;

PGridPtr make_pgrid(double p_max = 40.0, double h = 0.02);

// Symmetric sample nodes beta_i = (i - half) * h, i = 0 .. 2*half.
struct BetaGrid {
    double b_max = 150.0;
    double h = 0.05;
    double taper = 0.1;
    int half = 3000;

    int size() const { return 2 * half + 1; }
    // Half-width of the window unaffected by the taper and its transition.
    double trusted() const { return (1.0 - 2.0 * taper) * b_max; }
    double node(int i) const { return (i - half) * h; }
};

BetaGrid make_beta_grid(double b_max = 150.0, double h = 0.05, double taper = 0.1);

} // namespace spiralis
