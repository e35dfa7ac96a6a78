#include "spiralis/verify.hpp"

#include "spiralis/diagnostics.hpp"
#include "spiralis/fuchsian.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace spiralis {

bool CheckSuite::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

Check make_check(std::string name, double value, double tol, std::string detail = {})
{
    return {std::move(name), value <= tol, value, tol, std::move(detail)};
}

// Max |a - b| over cells with |p| <= p_max - 1.
double interior_max(const SpectralMeasure& a, const SpectralMeasure& b)
{
    const PGrid& g = a.grid();
    double err = 0.0;
    for (int j = 0; j < g.cells; ++j)
        if (std::abs(g.center(j)) <= g.p_max - 1.0)
            err = std::max(err, std::abs(a.cells()[j] - b.cells()[j]));
    return err;
}

SpectralMeasure smooth_density(const PGridPtr& g, double c, double w)
{
    return SpectralMeasure::from_density(g, [=](double p) {
        const double x = (p - c) / w;
        return cplx(std::exp(-x * x), 0.3 * x * std::exp(-x * x));
    });
}

} // namespace

Check check_eigenrelation(const PGridPtr& grid, int count, unsigned seed)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uz(-0.9 * grid->p_max, 0.9 * grid->p_max), us(-6.0, 6.0);
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
        const double z = uz(rng);
        double s = us(rng);
        if (std::abs(s + 1.0) < 1e-3)
            s += 0.5;
        const auto u = invert({z, s}, SpectralMeasure::delta(grid, z));
        worst = std::max({worst, std::abs(u.atom_at(z) - cplx(-1.0 / (s + 1.0))), u.max_abs_cell()});
        if (u.atoms().size() != 1)
            worst = INFINITY;
    }
    return make_check("fuchsian eigenrelation on atoms", worst, 0.0, std::to_string(count) + " random (z, s)");
}

Check check_norm_bound(const PGridPtr& grid, int count, unsigned seed)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uz(-10.0, 10.0), us(-6.0, 5.0), uc(-1.0, 1.0);
    const int block = std::min(600, grid->cells / 4);
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
        double s = us(rng);
        if (std::abs(s + 1.0) < 0.05)
            s += 0.2;
        const double z = uz(rng);
        SpectralMeasure f(grid);
        std::uniform_int_distribution<int> start(0, grid->cells - block);
        const int j0 = start(rng);
        for (int j = j0; j < j0 + block; ++j)
            f.cells()[j] = cplx(uc(rng), uc(rng));
        const auto u = invert({z, s}, f);
        worst = std::max(worst, l1_delta_norm(u) * std::abs(s + 1.0) / l1_delta_norm(f));
    }
    return make_check("inverse norm bound |s+1| ||Kf|| / ||f||", worst, 1.0 + 1e-3,
                      std::to_string(count) + " random densities");
}

Check check_norm_attained(const PGridPtr& grid)
{
    const auto f = SpectralMeasure::from_density(grid, [](double p) { return (p > 1 && p < 2) ? 1.0 : 0.0; });
    const double ratio = l1_delta_norm(invert({0.0, 0.0}, f)) / l1_delta_norm(f);
    return make_check("norm bound attained by 1_[1,2] (z = s = 0)", std::abs(ratio - 1.0), 1e-3);
}

Check check_roundtrip(const PGridPtr& grid)
{
    const auto f = SpectralMeasure::from_density(grid, [](double p) {
        return cplx(std::exp(-(p - 2) * (p - 2)), 0.3 * p * std::exp(-0.5 * p * p));
    });
    const FuchsianParams cases[] = {{0.0, 0.0}, {3.0, -2.5}, {-1.0, 1.5}, {4.0, -0.5}, {8.0, -10.0}, {8.0, 6.0}};
    double worst = 0.0;
    for (const auto& fp : cases) {
        const auto back = apply_forward(fp, invert(fp, f));
        const PGrid& g = *grid;
        for (int j = 0; j < g.cells; ++j) {
            const double p = g.center(j);
            if (std::abs(p - fp.z) < 0.25 || std::abs(p) > g.p_max - 1.0)
                continue;
            worst = std::max(worst, std::abs(back.cells()[j] - f.cells()[j]));
        }
    }
    return make_check("A o K = id on smooth densities (interior)", worst, 1e-4);
}

Check check_commutators(const PGridPtr& grid, int count)
{
    auto P = [](const SpectralMeasure& m) { return apply_forward({0.0, 0.0}, m); };
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
        const int n = (i % 2 ? -1 : 1) * (2 + i);
        const auto f = smooth_density(grid, 0.35 * n, 0.8 + 0.1 * i);
        auto Q = [n](const SpectralMeasure& m) { return apply_forward({double(n), 0.0}, m); };
        const auto comm = Q(P(f)) - P(Q(f)) - Q(f) + P(f);
        worst = std::max(worst, interior_max(comm, SpectralMeasure(grid)));
        const auto lhs = apply_forward({0.0, -2.0}, apply_forward({double(n), -double(n)},
                                                                  apply_forward({double(n), n - 1.0}, f)));
        auto rhs = apply_forward({double(n), -(n + 1.0)}, apply_forward({double(n), n - 2.0}, P(f)));
        rhs.axpy(2.0 * n * (1 - n), f);
        worst = std::max(worst, interior_max(lhs, rhs));
    }
    return make_check("commutator QP - PQ = Q - P and Q-elimination identity", worst, 1e-4,
                      std::to_string(count) + " densities");
}

Check check_n0_chain(const PGridPtr& grid, double mu)
{
    const FlowParams fp{mu, 8, 1};
    const double k = 2.0 * mu - 1.0;
    const auto d0 = SpectralMeasure::delta(grid, 0.0);
    const auto fwd = apply_L_forward(fp, 0, d0);
    const auto inv = apply_L_inv(fp, 0, d0).u;
    const double err = std::max({std::abs(fwd.atom_at(0.0) + k * k), fwd.max_abs_cell(),
                                 std::abs(inv.atom_at(0.0) + 1.0 / (k * k)), inv.max_abs_cell()});
    std::ostringstream name;
    name << "n = 0 chain on delta_0, mu = " << mu;
    return make_check(name.str(), err, 1e-12);
}

CheckSuite verify_operators(const FlowParams& params, const PGridPtr& grid)
{
    validate(params);
    CheckSuite suite;
    suite.checks.push_back(check_eigenrelation(grid));
    suite.checks.push_back(check_norm_bound(grid));
    suite.checks.push_back(check_norm_attained(grid));
    suite.checks.push_back(check_roundtrip(grid));
    suite.checks.push_back(check_commutators(grid));
    suite.checks.push_back(check_n0_chain(grid, params.mu));

    std::vector<int> active;
    for (int k = 1; k <= params.n_max; ++k)
        active.push_back(k * params.N);
    double guard_fail = 0.0, contraction = 0.0;
    for (int n : active) {
        if (!guard_invertibility(params, n).ok || !guard_invertibility(params, -n).ok)
            guard_fail += 1.0;
        contraction = std::max(contraction, estimate_norm(OpTag::ER_inv, params, n, default_probes(grid, n)));
    }
    suite.checks.push_back(make_check("invertibility guards on active modes (failures)", guard_fail, 0.0));
    suite.checks.push_back(make_check("Neumann contraction max ||E R^{-1}|| < 1", contraction, 1.0 - 1e-9));
    if (!active.empty()) {
        const auto rep = decay_report(params, active, grid);
        const double growth = std::max(rep.growth[0], rep.growth[1]);
        suite.checks.push_back(make_check("decay of ||L^{-1}|| <n>^2 and ||P L^{-1}|| <n>^2 (growth)", growth, 0.2));
    }
    return suite;
}

} // namespace spiralis
