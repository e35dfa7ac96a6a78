#include "spiralis/fuchsian.hpp"

#include "spiralis/errors.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace spiralis {

namespace {

// One piece of a cell on one side of z, in the distance variable r = |p - z|.
struct Segment {
    int cell;
    double r0;
    double r1;
};

// Segments ordered by increasing r; side = +1 for p > z, -1 for p < z.
std::vector<Segment> side_segments(const PGrid& g, double z, int side)
{
    std::vector<Segment> segs;
    if (side > 0) {
        for (int j = 0; j < g.cells; ++j) {
            const double a = g.edge(j) - z;
            const double b = g.edge(j + 1) - z;
            if (b > 0.0)
                segs.push_back({j, std::max(a, 0.0), b});
        }
    } else {
        for (int j = g.cells - 1; j >= 0; --j) {
            const double a = z - g.edge(j + 1);
            const double b = z - g.edge(j);
            if (b > 0.0)
                segs.push_back({j, std::max(a, 0.0), b});
        }
    }
    return segs;
}

// (1 - exp(e * L)) / e with the e -> 0 limit -L; L = log(rho) may be -infinity.
double phi(double e, double log_rho)
{
    if (std::isinf(log_rho))
        return e > 0.0 ? 1.0 / e : std::numeric_limits<double>::infinity();
    if (e == 0.0)
        return -log_rho;
    return -std::expm1(e * log_rho) / e;
}

double snap_to_edge(const PGrid& g, double z)
{
    const double k = std::round((z + g.p_max) / g.h);
    const double e = g.edge(static_cast<int>(k));
    return std::abs(e - z) <= 1e-9 * g.h ? e : z;
}

void check_exponent(double s)
{
    if (!std::isfinite(s) || std::abs(s + 1.0) < 1e-12)
        throw Error(ErrorKind::pathological_exponent,
                    "Fuchsian exponent s = -1 has no bounded inverse");
}

// Exact cell integrals of K applied to the piecewise-constant density on one side.
void invert_density_side(const PGrid& g, double s, const std::vector<cplx>& f,
                         const std::vector<Segment>& segs, std::vector<cplx>& out, double& lost)
{
    if (segs.empty())
        return;
    const double sp1 = s + 1.0;
    if (s < -1.0) {
        // Integrate outward from z: g1 = rho^{-s} g0 + c (1 - rho^{-s}) / (-s).
        cplx g0 = 0.0;
        for (const auto& sg : segs) {
            const cplx c = f[sg.cell];
            const double lr = sg.r0 > 0.0 ? std::log(sg.r0 / sg.r1) : -std::numeric_limits<double>::infinity();
            const double decay = sg.r0 > 0.0 ? std::exp(-s * lr) : 0.0;
            const cplx g1 = decay * g0 + c * phi(-s, lr);
            const cplx integral = ((sg.r1 * g1 - sg.r0 * g0) - c * (sg.r1 - sg.r0)) / sp1;
            out[sg.cell] += integral / g.h;
            g0 = g1;
        }
        // Tail beyond the grid edge: g(r) = g(R) (r/R)^s.
        lost += std::abs(segs.back().r1 * g0) / (-sp1);
    } else {
        // Integrate inward from the grid edge with v = -u: v0 = rho^s v1 + c (1 - rho^s) / s.
        cplx v1 = 0.0;
        for (auto it = segs.rbegin(); it != segs.rend(); ++it) {
            const cplx c = f[it->cell];
            cplx r0g0 = 0.0;
            cplx v0 = 0.0;
            if (it->r0 > 0.0) {
                const double lr = std::log(it->r0 / it->r1);
                v0 = std::exp(s * lr) * v1 + c * phi(s, lr);
                r0g0 = -it->r0 * v0;
            }
            const cplx integral = ((-it->r1 * v1 - r0g0) - c * (it->r1 - it->r0)) / sp1;
            out[it->cell] += integral / g.h;
            v1 = v0;
        }
        // Gap between the grid and an off-grid z: u(r) = u(r_in) (r/r_in)^s.
        if (segs.front().r0 > 0.0)
            lost += std::abs(segs.front().r0 * v1) / sp1;
    }
}

// Closed-form cell integrals of K applied to w * delta_xi, xi != z.
void invert_atom(const PGrid& g, double z, double s, double xi, cplx w, std::vector<cplx>& out,
                 double& lost)
{
    const int side = xi > z ? 1 : -1;
    const double d = std::abs(xi - z);
    const double sp1 = s + 1.0;
    const auto segs = side_segments(g, z, side);
    auto prim = [&](double r) { return std::pow(r / d, sp1); };
    for (const auto& sg : segs) {
        double lo, hi, sign;
        if (s < -1.0) {
            lo = std::max(sg.r0, d);
            hi = sg.r1;
            sign = 1.0;
        } else {
            lo = sg.r0;
            hi = std::min(sg.r1, d);
            sign = -1.0;
        }
        if (hi > lo)
            out[sg.cell] += sign * w * ((prim(hi) - prim(lo)) / sp1) / g.h;
    }
    if (segs.empty()) {
        lost += std::abs(w) / std::abs(sp1);
    } else if (s < -1.0) {
        lost += std::abs(w) * prim(std::max(segs.back().r1, d)) / (-sp1);
    } else if (segs.front().r0 > 0.0) {
        lost += std::abs(w) * prim(std::min(segs.front().r0, d)) / sp1;
    }
}

} // namespace

SpectralMeasure apply_forward(const FuchsianParams& fp, const SpectralMeasure& m)
{
    if (!std::isfinite(fp.z) || !std::isfinite(fp.s))
        throw Error(ErrorKind::data, "non-finite Fuchsian parameters");
    const PGrid& g = m.grid();
    SpectralMeasure out(m.grid_ptr());
    for (const auto& at : m.atoms()) {
        if (std::abs(at.xi - fp.z) > 1e-9 * g.h)
            throw Error(ErrorKind::unsupported_input,
                        "forward Fuchsian operator on an atom away from its singular point "
                        "would produce a dipole");
        out.add_atom(at.xi, -(fp.s + 1.0) * at.w);
    }
    const auto& c = m.cells();
    const int n = g.cells;
    auto cell = [&](int j) { return (j < 0 || j >= n) ? cplx(0.0) : c[j]; };
    std::vector<cplx> flux(n + 1);
    for (int k = 0; k <= n; ++k) {
        const cplx edge_value =
            (-cell(k - 2) + 7.0 * cell(k - 1) + 7.0 * cell(k) - cell(k + 1)) / 12.0;
        flux[k] = (g.edge(k) - fp.z) * edge_value;
    }
    auto& oc = out.cells();
    for (int j = 0; j < n; ++j)
        oc[j] = (flux[j + 1] - flux[j]) / g.h - (fp.s + 1.0) * c[j];
    return out;
}

SpectralMeasure invert(const FuchsianParams& fp, const SpectralMeasure& m, InversionStats* stats)
{
    check_exponent(fp.s);
    if (!std::isfinite(fp.z))
        throw Error(ErrorKind::data, "non-finite singular point");
    const PGrid& g = m.grid();
    const double z = snap_to_edge(g, fp.z);
    const double s = fp.s;
    SpectralMeasure out(m.grid_ptr());
    double lost = 0.0;

    for (const auto& at : m.atoms()) {
        if (std::abs(at.xi - z) <= 1e-9 * g.h)
            out.add_atom(at.xi, -at.w / (s + 1.0));
        else
            invert_atom(g, z, s, at.xi, at.w, out.cells(), lost);
    }

    bool any_density = false;
    for (const auto& c : m.cells())
        if (c != 0.0) {
            any_density = true;
            break;
        }
    if (any_density) {
        for (int side : {1, -1})
            invert_density_side(g, s, m.cells(), side_segments(g, z, side), out.cells(), lost);
    }
    if (stats)
        stats->truncated_mass += lost;
    return out;
}

} // namespace spiralis
