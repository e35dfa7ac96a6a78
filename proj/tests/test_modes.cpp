#include "spiralis/errors.hpp"
#include "spiralis/fuchsian.hpp"
#include "spiralis/modes.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

using namespace spiralis;

namespace {

// Max |a - b| over cell centres p with |p - z| >= excl for every z in avoid and |p| <= p_max - 1.
double interior_diff(const SpectralMeasure& a, const SpectralMeasure& b, std::initializer_list<double> avoid,
                     double excl)
{
    const PGrid& g = a.grid();
    double err = 0.0;
    for (int j = 0; j < g.cells; ++j) {
        const double p = g.center(j);
        bool skip = std::abs(p) > g.p_max - 1.0;
        for (double z : avoid)
            skip = skip || std::abs(p - z) < excl;
        if (!skip)
            err = std::max(err, std::abs(a.cells()[j] - b.cells()[j]));
    }
    return err;
}

// Centred difference (c_{j+1} - c_{j-1}) / 2h of the cell averages.
SpectralMeasure fd_derivative(const SpectralMeasure& m)
{
    SpectralMeasure d(m.grid_ptr());
    const auto& c = m.cells();
    const double h = m.grid().h;
    for (int j = 1; j + 1 < m.grid().cells; ++j)
        d.cells()[j] = (c[j + 1] - c[j - 1]) / (2.0 * h);
    return d;
}

SpectralMeasure gaussian(const PGridPtr& g, double c, double w)
{
    return SpectralMeasure::from_density(g, [=](double p) {
        const double x = (p - c) / w;
        return cplx(std::exp(-x * x), 0.5 * x * std::exp(-x * x));
    });
}

// Weights w (w[2] = 1) such that sum w_i pu_i vanishes at p = 0 and sum w_i u_i is
// continuous there.  P^{-1} integrates from infinity on both sides of 0, so u = P^{-1} pu
// is log-singular when pu(0) != 0 and jumps at 0 when the two half-line integrals differ;
// in either case the literal derivatives of u are not measures, and the finite-difference
// oracles below only apply on this codimension-two regular subspace.
std::array<cplx, 3> regular_weights(const std::vector<SpectralMeasure>& pus, const std::vector<SpectralMeasure>& us)
{
    const int k = pus[0].grid().zero_edge();
    cplx a[3], b[3];
    for (int i = 0; i < 3; ++i) {
        const auto& pc = pus[i].cells();
        const auto& uc = us[i].cells();
        a[i] = 0.5 * (pc[k - 1] + pc[k]);
        b[i] = (1.5 * uc[k] - 0.5 * uc[k + 1]) - (1.5 * uc[k - 1] - 0.5 * uc[k - 2]);
    }
    // w0 a0 + w1 a1 = -a2, w0 b0 + w1 b1 = -b2
    const cplx det = a[0] * b[1] - a[1] * b[0];
    return {(-a[2] * b[1] + a[1] * b[2]) / det, (-a[0] * b[2] + a[2] * b[0]) / det, 1.0};
}

std::vector<SpectralMeasure> test_inputs(const PGridPtr& g)
{
    return {gaussian(g, 1.5, 1.0), gaussian(g, -2.0, 0.7), gaussian(g, 0.5, 1.5)};
}

struct RegularSolve {
    ModeBundle b;
    SpectralMeasure rhs;
};

RegularSolve regular_bundle(const FlowParams& fp, int n, const PGridPtr& g)
{
    const auto fs = test_inputs(g);
    std::vector<ModeBundle> bs;
    std::vector<SpectralMeasure> us, pus;
    for (const auto& f : fs) {
        bs.push_back(apply_L_inv(fp, n, f));
        us.push_back(bs.back().u);
        pus.push_back(bs.back().Pu);
    }
    const auto w = regular_weights(pus, us);
    RegularSolve r{ModeBundle(g, n), SpectralMeasure(g)};
    for (int i = 0; i < 3; ++i) {
        r.b.axpy(w[i], bs[i]);
        r.rhs.axpy(w[i], fs[i]);
    }
    r.b.terms = bs[0].terms;
    return r;
}

} // namespace

TEST_CASE("mode exponents and invertibility guards")
{
    auto e = exponents({1.0, 8, 4}, 4);
    CHECK(e.m_plus == 6.0);
    CHECK(e.m_minus == -2.0);
    e = exponents({1.0, 8, 4}, 0);
    CHECK(e.m_plus == 2.0);
    CHECK(e.m_minus == 2.0);
    e = exponents({2.0 / 3.0, 3, 1}, -3);
    CHECK(e.m_plus == doctest::Approx(-2.0 / 3.0));
    CHECK(e.m_minus == doctest::Approx(10.0 / 3.0));

    auto bad = guard_invertibility({1.0, 8, 4}, -1);
    CHECK_FALSE(bad.ok);
    CHECK(bad.message.find("m_plus") != std::string::npos);
    CHECK(guard_invertibility({1.0, 8, 4}, 0).ok);
    CHECK(guard_invertibility({0.75, 2, 1}, 2).ok);

    CHECK_THROWS_AS(validate({0.5, 8, 4}), Error);
    CHECK_THROWS_AS(validate({1.0, 1, 4}), Error);
    CHECK_NOTHROW(validate({1.0, 8, 4}));
}

TEST_CASE("n = 0 chain on delta_0 is exact")
{
    auto g = make_pgrid();
    for (double mu : {0.6, 2.0 / 3.0, 1.0, 2.0}) {
        FlowParams fp{mu, 8, 4};
        auto d0 = SpectralMeasure::delta(g, 0.0);
        const double k = 2 * mu - 1;
        auto r = apply_R_inv(fp, 0, d0);
        CHECK(std::abs(r.atom_at(0.0) + 1.0 / (k * k)) < 1e-14);
        CHECK(r.max_abs_cell() == 0.0);
        CHECK(apply_ER_inv(fp, 0, d0).l1_norm() == 0.0);
        auto b = apply_L_inv(fp, 0, d0);
        CHECK(b.terms == 1);
        CHECK(std::abs(b.u.atom_at(0.0) + 1.0 / (k * k)) < 1e-14);
        CHECK(std::abs(b.L_image(mu).atom_at(0.0) - 1.0) < 1e-12);
        auto fwd = apply_L_forward(fp, 0, d0);
        CHECK(std::abs(fwd.atom_at(0.0) + k * k) < 1e-12);
    }
}

TEST_CASE("R^{-1} delta_0 at mu = 1, n = 4 is a density within the norm bound")
{
    auto g = make_pgrid();
    FlowParams fp{1.0, 4, 2};
    auto r = apply_R_inv(fp, 4, SpectralMeasure::delta(g, 0.0));
    CHECK(r.atoms().empty());
    CHECK(l1_delta_norm(r) <= 1.0 / 15.0 * (1 + 1e-12));
    CHECK(l1_delta_norm(r) > 0.0);
    CHECK(apply_R_inv(fp, 4, SpectralMeasure(g)).l1_norm() == 0.0);
}

TEST_CASE("E R^{-1} chain agrees with finite differences of R^{-1} m on the regular subspace")
{
    auto g = make_pgrid();
    FlowParams fp{1.0, 4, 2};
    const int n = 4;
    const auto e = exponents(fp, n);
    const auto fs = test_inputs(g);
    std::vector<SpectralMeasure> us, pus;
    for (const auto& f : fs) {
        pus.push_back(invert({double(n), -e.m_minus}, invert({double(n), -e.m_plus}, f)));
        us.push_back(apply_R_inv(fp, n, f));
    }
    const auto w = regular_weights(pus, us);
    SpectralMeasure m(g);
    for (int i = 0; i < 3; ++i)
        m.axpy(w[i], fs[i]);
    auto chain = apply_ER_inv(fp, n, m);
    // (Q - P) = -n d/dp
    auto fd = fd_derivative(apply_R_inv(fp, n, m));
    fd *= -(2 * fp.mu - 1) * n;
    CHECK(interior_diff(chain, fd, {0.0, double(n)}, 0.5) <= 1e-3 * chain.max_abs_cell());
}

TEST_CASE("commutator and Q-elimination identities on smooth densities")
{
    auto g = make_pgrid();
    for (int n : {2, 5, -3}) {
        auto f = gaussian(g, 0.7 * n, 1.2);
        auto P = [](const SpectralMeasure& m) { return apply_forward({0.0, 0.0}, m); };
        auto Q = [n](const SpectralMeasure& m) { return apply_forward({double(n), 0.0}, m); };
        // QP - PQ - Q + P = 0
        auto lhs = Q(P(f)) - P(Q(f)) - Q(f) + P(f);
        CHECK(interior_diff(lhs, SpectralMeasure(g), {}, 0.0) <= 1e-4);
        // (P + 2)(Q + n)(Q + 1 - n) = (Q + n + 1)(Q + 2 - n) P + 2n(1 - n)
        auto a = apply_forward({0.0, -2.0}, apply_forward({double(n), -double(n)},
                                                          apply_forward({double(n), n - 1.0}, f)));
        auto b = apply_forward({double(n), -(n + 1.0)}, apply_forward({double(n), n - 2.0}, P(f)));
        b.axpy(2.0 * n * (1 - n), f);
        CHECK(interior_diff(a, b, {}, 0.0) <= 1e-4);
    }
}

TEST_CASE("bundle images agree with finite differences of u on the regular subspace")
{
    auto g = make_pgrid();
    FlowParams fp{1.0, 8, 2};
    for (int n : {8, -8, 16}) {
        CAPTURE(n);
        auto [b, rhs] = regular_bundle(fp, n, g);
        CHECK(b.terms > 1);
        auto P = [](const SpectralMeasure& m) { return apply_forward({0.0, 0.0}, m); };
        auto Q = [n](const SpectralMeasure& m) { return apply_forward({double(n), 0.0}, m); };
        const double scale = b.l1_max();
        auto check = [&, n = n](const SpectralMeasure& stored, const SpectralMeasure& fd, const char* name) {
            CAPTURE(name);
            CHECK(interior_diff(stored, fd, {0.0, double(n)}, 0.5) <= 1e-3 * scale);
        };
        check(b.Pu, P(b.u), "Pu");
        check(b.Qu, Q(b.u), "Qu");
        check(b.QPu, Q(b.Pu), "QPu");
        check(b.Q2u(), Q(Q(b.u)), "Q2u");
        check(b.Q2Pu(), Q(Q(b.Pu)), "Q2Pu");
        // L o L^{-1} = id, against the independent forward operator and the stored images.
        check(apply_L_forward(fp, n, b.u), rhs, "L u");
        check(b.L_image(fp.mu), rhs, "L image");
    }
}

TEST_CASE("reflected bundle matches the direct -n computation on the regular subspace")
{
    auto g = make_pgrid();
    FlowParams fp{1.0, 8, 2};
    auto [plus, rhs] = regular_bundle(fp, 8, g);
    auto minus = apply_L_inv(fp, -8, rhs.reflected_conj());
    auto refl = plus.reflected();
    CHECK(refl.n == -8);
    const double scale = plus.l1_max();
    CHECK(interior_diff(refl.u, minus.u, {0.0, -8.0}, 0.5) <= 1e-3 * scale);
    CHECK(interior_diff(refl.Qu, minus.Qu, {0.0, -8.0}, 0.5) <= 1e-3 * scale);
    CHECK(interior_diff(refl.QQu, minus.QQu, {0.0, -8.0}, 0.5) <= 1e-3 * scale);
    CHECK(interior_diff(refl.QQPu, minus.QQPu, {0.0, -8.0}, 0.5) <= 1e-3 * scale);
    CHECK(interior_diff(refl.Q2Pu(), minus.Q2Pu(), {0.0, -8.0}, 0.5) <= 1e-3 * scale);
}

TEST_CASE("Neumann series and norm estimates")
{
    auto g = make_pgrid();
    FlowParams fp{1.0, 8, 4};
    auto zero = apply_L_inv(fp, 8, SpectralMeasure(g));
    CHECK(zero.l1_max() == 0.0);
    auto probes = default_probes(g, 8);
    CHECK(probes.size() == 8);
    for (int k = 1; k <= 4; ++k) {
        const double c = estimate_norm(OpTag::ER_inv, fp, 8 * k, probes);
        CAPTURE(k);
        CHECK(c < 1.0);
    }
    FlowParams p0{2.0 / 3.0, 8, 4};
    const double k = 2 * p0.mu - 1;
    CHECK(estimate_norm(OpTag::R_inv, p0, 0, {SpectralMeasure::delta(g, 0.0)}) ==
          doctest::Approx(1.0 / (k * k)).epsilon(1e-14));
    CHECK_THROWS_AS(apply_L_inv({1.0, 8, 4}, -1, SpectralMeasure::delta(g, 0.0)), Error);
}
