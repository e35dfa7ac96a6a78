#include "spiralis/errors.hpp"
#include "spiralis/fuchsian.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace spiralis;

namespace {

// Max cell error of apply_forward(invert(f)) against f, excluding |p - z| < excl and the
// outermost unit of the grid.
double roundtrip_error(const FuchsianParams& fp, const SpectralMeasure& f, double excl)
{
    auto u = invert(fp, f);
    auto back = apply_forward(fp, u);
    const PGrid& g = f.grid();
    double err = 0.0;
    for (int j = 0; j < g.cells; ++j) {
        const double p = g.center(j);
        if (std::abs(p - fp.z) < excl || std::abs(p) > g.p_max - 1.0)
            continue;
        err = std::max(err, std::abs(back.cells()[j] - f.cells()[j]));
    }
    return err;
}

} // namespace

TEST_CASE("atom eigenrelations are exact")
{
    auto g = make_pgrid();
    auto d0 = SpectralMeasure::delta(g, 0.0);
    auto fwd = apply_forward({0.0, 0.0}, d0);
    CHECK(fwd.atom_at(0.0) == cplx(-1.0));
    auto d2 = SpectralMeasure::delta(g, 2.0);
    CHECK(apply_forward({2.0, -3.0}, d2).atom_at(2.0) == cplx(2.0));
    for (double s : {-3.5, -2.0, -0.5, 0.0, 0.25, 4.0}) {
        auto inv = invert({2.0, s}, d2);
        CHECK(inv.atom_at(2.0) == cplx(-1.0 / (s + 1.0)));
        CHECK(inv.max_abs_cell() == 0.0);
    }
}

TEST_CASE("pathological exponent and off-centre atoms are rejected")
{
    auto g = make_pgrid();
    auto d0 = SpectralMeasure::delta(g, 0.0);
    CHECK_THROWS_AS(invert({0.0, -1.0}, d0), Error);
    try {
        apply_forward({1.0, 0.5}, d0);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unsupported_input);
    }
}

TEST_CASE("forward operator on p * 1_[1,2] reproduces the density inside the support")
{
    auto g = make_pgrid();
    auto f = SpectralMeasure::from_density(g, [](double p) { return (p > 1 && p < 2) ? p : 0.0; });
    auto af = apply_forward({0.0, 0.0}, f);
    double err = 0.0;
    for (int j = 0; j < g->cells; ++j) {
        const double p = g->center(j);
        if (p > 1.0 + 3 * g->h && p < 2.0 - 3 * g->h)
            err = std::max(err, std::abs(af.cells()[j] - f.cells()[j]));
    }
    CHECK(err < 1e-10);
}

TEST_CASE("inverse of 1_[1,2] with z = 0, s = 0")
{
    auto g = make_pgrid();
    auto f = SpectralMeasure::from_density(g, [](double p) { return (p > 1 && p < 2) ? 1.0 : 0.0; });
    InversionStats st;
    auto u = invert({0.0, 0.0}, f, &st);
    auto exact = SpectralMeasure::from_density(g, [](double p) -> cplx {
        if (p > 0 && p <= 1) return -std::log(2.0);
        if (p > 1 && p < 2) return -std::log(2.0 / p);
        return 0.0;
    });
    double err = 0.0;
    for (int j = 0; j < g->cells; ++j)
        err = std::max(err, std::abs(u.cells()[j] - exact.cells()[j]));
    CHECK(err < 1e-12);
    CHECK(l1_delta_norm(u) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(st.truncated_mass == 0.0);
}

TEST_CASE("inverse of an off-centre atom: z = 3, s = -2, atom at 1")
{
    auto g = make_pgrid();
    InversionStats st;
    auto u = invert({3.0, -2.0}, SpectralMeasure::delta(g, 1.0), &st);
    CHECK(u.atoms().empty());
    // Density 2 (3 - p)^{-2} on p <= 1; cell averages from the antiderivative 2 / (3 - p).
    double err = 0.0;
    for (int j = 0; j < g->cells; ++j) {
        const double a = g->edge(j), b = g->edge(j + 1);
        const double exact = b <= 1.0 + 1e-12 ? (2.0 / (3.0 - b) - 2.0 / (3.0 - a)) / g->h : 0.0;
        err = std::max(err, std::abs(u.cells()[j] - exact));
    }
    CHECK(err < 1e-12);
    // The tail below -P_max carries mass 2/43; grid mass plus reported tail is exactly 1.
    CHECK(st.truncated_mass == doctest::Approx(2.0 / 43.0).epsilon(1e-12));
    CHECK(l1_delta_norm(u) + st.truncated_mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("norm bound for random densities")
{
    auto g = make_pgrid();
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> uz(-10.0, 10.0), us(-6.0, 5.0), uc(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        double s = us(rng);
        if (std::abs(s + 1.0) < 0.05)
            s += 0.2;
        const double z = uz(rng);
        SpectralMeasure f(g);
        const int start = 1000 + trial * 20;
        for (int j = start; j < start + 600; ++j)
            f.cells()[j] = cplx(uc(rng), uc(rng));
        InversionStats st;
        auto u = invert({z, s}, f, &st);
        CHECK(l1_delta_norm(u) <= l1_delta_norm(f) / std::abs(s + 1.0) * (1.0 + 1e-12));
    }
}

TEST_CASE("forward o inverse is the identity on smooth densities")
{
    auto g = make_pgrid();
    auto f = SpectralMeasure::from_density(g, [](double p) {
        return cplx(std::exp(-(p - 2) * (p - 2)), 0.3 * p * std::exp(-0.5 * p * p));
    });
    const FuchsianParams cases[] = {{0.0, 0.0}, {3.0, -2.5}, {-1.0, 1.5}, {4.0, -0.5}, {8.0, -10.0}, {8.0, 6.0}};
    for (const auto& fp : cases) {
        const double err = roundtrip_error(fp, f, 0.25);
        CAPTURE(fp.z);
        CAPTURE(fp.s);
        CHECK(err <= 1e-4);
    }
}

TEST_CASE("inverse handles a singular point outside the grid")
{
    auto g = make_pgrid();
    auto f = SpectralMeasure::from_density(g, [](double p) { return std::exp(-p * p); });
    InversionStats st;
    auto u = invert({64.0, -66.0}, f, &st);
    CHECK(l1_delta_norm(u) <= l1_delta_norm(f) / 65.0 * (1 + 1e-12));
    auto back = apply_forward({64.0, -66.0}, u);
    double err = 0.0;
    for (int j = 0; j < g->cells; ++j)
        if (std::abs(g->center(j)) < 30)
            err = std::max(err, std::abs(back.cells()[j] - f.cells()[j]));
    CHECK(err < 1e-4);
}
