#pragma once

#include "spiralis/measure.hpp"

namespace spiralis {

// A_{z,s} = (p - z) d/dp - s, regular singular at p = z; K_{z,s} denotes its inverse.
struct FuchsianParams {
    double z;
    double s;
};

struct InversionStats {
    // Mass of the exact inverse that falls outside the p-grid and is dropped.
    double truncated_mass = 0.0;
};

// Conservative form d/dp((p - z) u) - (s + 1) u on the cell averages, with fourth-order
// edge interpolation; an atom at z maps to -(s + 1) times itself.
SpectralMeasure apply_forward(const FuchsianParams& fp, const SpectralMeasure& m);

// Exact inverse for piecewise-constant densities and for atoms:
//   u(p) = sgn(p-z) |p-z|^s  int_L^{p-z} |tau|^{-s-1} f(z + tau) dtau,
// with L = 0 for s < -1 and L = sgn(p-z) * infinity for s > -1.
SpectralMeasure invert(const FuchsianParams& fp, const SpectralMeasure& m,
                       InversionStats* stats = nullptr);

} // namespace spiralis
