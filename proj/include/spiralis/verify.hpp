#pragma once

#include "spiralis/modes.hpp"

#include <string>
#include <vector>

namespace spiralis {

// One identity or bound check: pass iff value <= tol (exact checks use tol = 0).
struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double tol = 0.0;
    std::string detail;
};

struct CheckSuite {
    std::vector<Check> checks;
    bool passed() const;
};

// K_{z,s} delta_z = -(s + 1)^{-1} delta_z bit-exactly, for `count` random (z, s).
Check check_eigenrelation(const PGridPtr& grid, int count = 20, unsigned seed = 1);
// max over random densities and (z, s) of ||K f|| |s + 1| / ||f|| (must stay <= 1 + 1e-3).
Check check_norm_bound(const PGridPtr& grid, int count = 50, unsigned seed = 2);
// | ||K 1_[1,2]|| - 1 | for z = s = 0, where the bound is attained.
Check check_norm_attained(const PGridPtr& grid);
// Interior max error of A_{z,s} K_{z,s} f - f on smooth densities.
Check check_roundtrip(const PGridPtr& grid);
// QP - PQ - Q + P = 0 and (P+2)(Q+n)(Q+1-n) = (Q+n+1)(Q+2-n)P + 2n(1-n) on `count` densities.
Check check_commutators(const PGridPtr& grid, int count = 10);
// L_0 delta_0 = -(2mu-1)^2 delta_0 and L_0^{-1} delta_0 = -(2mu-1)^{-2} delta_0.
Check check_n0_chain(const PGridPtr& grid, double mu);

// All of the above plus invertibility guards, Neumann contraction and decay flags for the
// active modes of params.
CheckSuite verify_operators(const FlowParams& params, const PGridPtr& grid);

} // namespace spiralis
