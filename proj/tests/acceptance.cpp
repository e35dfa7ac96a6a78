// Acceptance checks: one PASS/FAIL line per criterion.
//
//   spiralis_acceptance [--only K[,K...]] [--expect-fail K[,K...]]
//
// Exit status is 0 iff the set of failing criteria equals the --expect-fail set (empty by
// default), so a known-red criterion stays visible in the output without masking regressions.

#include "spiralis/diagnostics.hpp"
#include "spiralis/errors.hpp"
#include "spiralis/linear_solve.hpp"
#include "spiralis/newton.hpp"
#include "spiralis/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace spiralis;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

VorticityData single_mode(const FlowParams& fp, cplx c)
{
    auto om = background_vorticity(fp);
    om.set(fp.N, c);
    return om;
}

// Least-squares slope of y against x.
double slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome from_check(const Check& c)
{
    return {c.pass, fmt("%s = %.3g (tol %.3g)", c.name.c_str(), c.value, c.tol)};
}

// 1. K_{z,s} delta_z = -(s+1)^{-1} delta_z with zero error.
Outcome c1()
{
    return from_check(check_eigenrelation(make_pgrid(), 20, 1));
}

// 2. Norm bound on random inputs; attained by the indicator of [1, 2].
Outcome c2()
{
    const auto g = make_pgrid();
    const auto bound = check_norm_bound(g, 50, 2);
    const auto attained = check_norm_attained(g);
    return {bound.pass && attained.pass,
            fmt("max |s+1| ||Kf|| / ||f|| = %.6f (<= %.4f); attained to %.2e", bound.value, bound.tol,
                attained.value)};
}

// 3. A K = id on smooth densities.
Outcome c3()
{
    return from_check(check_roundtrip(make_pgrid()));
}

// 4. Commutator identities on 10 densities.
Outcome c4()
{
    return from_check(check_commutators(make_pgrid(), 10));
}

// 5. n = 0 chain for several mu.
Outcome c5()
{
    const auto g = make_pgrid();
    bool ok = true;
    double worst = 0.0;
    for (double mu : {0.6, 2.0 / 3.0, 1.0, 2.0}) {
        const auto c = check_n0_chain(g, mu);
        ok = ok && c.pass;
        worst = std::max(worst, c.value);
    }
    return {ok, fmt("worst relative error %.2e over mu in {0.6, 2/3, 1, 2} (tol 1e-12)", worst)};
}

// 6. Initial-data multipliers: n = 0 against -mu^{-1/(2mu)}; n = N k, k = 1..8, ratio to
// mu^{-1/(2mu)} with a bounded, non-increasing deviation.
Outcome c6()
{
    const auto g = make_pgrid();
    const auto bg = make_beta_grid();
    bool zero_ok = true, high_ok = true;
    std::ostringstream d;
    for (double mu : {2.0 / 3.0, 1.0, 2.0}) {
        const FlowParams fp{mu, 8, 8};
        const double m = std::pow(mu, -1.0 / (2.0 * mu));
        const cplx m0 = initial_multiplier(fp, g, bg, 0);
        const double err0 = std::abs(m0 - (-m));
        zero_ok = zero_ok && err0 <= 1e-10;
        std::vector<double> ks, dev;
        for (int k = 1; k <= 8; ++k) {
            ks.push_back(k);
            dev.push_back(std::abs(initial_multiplier(fp, g, bg, k * fp.N) / m - 1.0));
        }
        const double sup = *std::max_element(dev.begin(), dev.end());
        const double trend = slope(ks, dev);
        high_ok = high_ok && sup <= 1.0 && trend <= 1e-12;
        d << fmt("mu=%.3g: m(0) = %+.12f vs -mu^{-1/2mu} = %+.12f; sup_k |m/mu^{-1/2mu} - 1| = %.1e; ", mu,
                 m0.real(), -m, sup);
    }
    d << (zero_ok ? "n=0 sign matches" : "n=0 clause unmet: the computed multiplier is +mu^{-1/(2mu)}")
      << (high_ok ? "; n>0 clause met" : "; n>0 clause unmet");
    return {zero_ok && high_ok, d.str()};
}

// 7. Decay suite at mu = 1 and the recommended N.
Outcome c7()
{
    const auto g = make_pgrid();
    const auto rec = recommend_N(1.0, 2, 64, 0.5, g);
    if (!rec.ok)
        return {false, "recommend_N found no admissible N"};
    const FlowParams fp{1.0, rec.N, 8};
    std::vector<int> ns;
    for (int k = 1; k <= 8; ++k)
        ns.push_back(k * rec.N);
    const auto rep = decay_report(fp, ns, g);
    const bool ok = rep.growth[0] < 0.2 && rep.growth[1] < 0.2;
    return {ok, fmt("N = %d; ||L^-1||<n>^2 %.4f..%.4f growth %.3f; ||PL^-1||<n>^2 %.4f..%.4f growth %.3f", rec.N,
                    rep.rows.front().L, rep.rows.back().L, rep.growth[0], rep.rows.front().PL, rep.rows.back().PL,
                    rep.growth[1])};
}

// 8. Background residual and field constants.
Outcome c8()
{
    double worst_F = 0.0, worst_c = 0.0;
    for (double mu : {0.6, 2.0 / 3.0, 1.0, 2.0}) {
        const FlowParams fp{mu, 8, 2};
        const auto s = background_state(fp, make_pgrid(), make_beta_grid());
        const auto ev = residual_F(s);
        if (!ev.guard.empty())
            return {false, "guard failure on the background: " + ev.guard};
        worst_F = std::max(worst_F, ev.F.sup_norm());
        for (double beta = 0.1; beta < 150.0; beta *= 1.7)
            for (double u : {0.0, 0.37}) {
                const auto f = eval_fields(s, beta, u, 1.0);
                worst_c = std::max({worst_c, std::abs(f.gU - 1.0 / mu), std::abs(f.gu),
                                    std::abs(f.W - (2.0 * mu - 1.0) / mu), std::abs(f.r_check - 1.0 / std::sqrt(mu))});
            }
    }
    return {worst_F <= 1e-12 && worst_c <= 1e-12,
            fmt("sup |F| on the full grid %.2e; worst constant error %.2e (tol 1e-12)", worst_F, worst_c)};
}

// 9. F(psi_bar + eps dpsi, Omega_bar + eps Omega_dot) / eps^2 with L dpsi + 2 mu^2 Omega_dot = 0.
Outcome c9()
{
    const FlowParams fp{1.0, 8, 2};
    const auto lin = linear_state(fp, make_pgrid(), make_beta_grid(), single_mode(fp, cplx(1.0, 0.0)));
    std::vector<double> ratios;
    for (double eps : {1e-2, 5e-3, 2.5e-3}) {
        const auto s = scaled_perturbation(lin, eps);
        ratios.push_back(residual_F(s).F.window_sup(s.bgrid.trusted()) / (eps * eps));
    }
    const double hi = *std::max_element(ratios.begin(), ratios.end());
    const double lo = *std::min_element(ratios.begin(), ratios.end());
    return {hi <= 2.0 * lo, fmt("ratios %.4g, %.4g, %.4g (max/min %.3f <= 2)", ratios[0], ratios[1], ratios[2], hi / lo)};
}

// 10. Newton contraction at amplitude 1e-2 and the one-step amplitude ladder.
Outcome c10()
{
    const auto g = make_pgrid();
    const auto bg = make_beta_grid();
    const auto rec = recommend_N(1.0, 2, 64, 0.5, g);
    if (!rec.ok)
        return {false, "recommend_N found no admissible N"};
    const FlowParams fp{1.0, rec.N, 2};

    NewtonControls c;
    c.iter_max = 5;
    const auto res = solve_nonlinear(fp, g, bg, single_mode(fp, cplx(1e-2, 0.0)), c);
    const auto& h = res.report.history;
    double best = h.front().residual;
    for (size_t k = 1; k < h.size() && k <= 5; ++k)
        best = std::min(best, h[k].residual);
    const double drop = h.front().residual / best;

    c.iter_max = 1;
    std::vector<double> la, lr;
    for (double a : {1e-2, 5e-3, 2.5e-3}) {
        const auto r = solve_nonlinear(fp, g, bg, single_mode(fp, cplx(a, 0.0)), c);
        la.push_back(std::log(a));
        lr.push_back(std::log(r.report.final_residual));
    }
    const double p = slope(la, lr);
    return {drop >= 10.0 && std::abs(p - 2.0) <= 0.2,
            fmt("N = %d: residual %.3e -> %.3e within %zu iterations (drop %.1fx); one-step residual ~ amplitude^%.3f",
                fp.N, h.front().residual, best, std::min<size_t>(h.size() - 1, 5), drop, p)};
}

// 11. Spiral exponents, intersections on solved states, synthetic self-intersection.
Outcome c11()
{
    std::ostringstream d;
    bool ok = true;
    const auto g = make_pgrid();
    const auto bg = make_beta_grid();
    for (double mu : {2.0 / 3.0, 1.0}) {
        const FlowParams fp{mu, 8, 2};
        const auto bgs = background_state(fp, g, bg);
        const double e0 = fit_spiral_exponent(trace_streamline(bgs, 0.0, 5.0, bg.trusted(), 1.0, 0.05)).exponent;
        const auto res = solve_nonlinear(fp, g, bg, single_mode(fp, cplx(1e-3 * fp.omega_base(), 0.0)));
        if (res.report.status != NewtonStatus::converged)
            return {false, fmt("mu=%.3g: Newton %s", mu, status_name(res.report.status))};
        std::vector<Polyline> polys;
        double e1 = 0.0;
        for (int j = 0; j < 8; ++j) {
            const auto line = trace_streamline(res.state, 2.0 * pi * j / 8, 0.1, bg.trusted(), 1.0, 0.05);
            if (j == 0)
                e1 = fit_spiral_exponent(line).exponent;
            polys.push_back(to_polyline(line));
        }
        const auto inter = detect_intersections(polys);
        const bool m_ok = std::abs(e0 + mu) <= 1e-6 && std::abs(e1 + mu) <= 0.02 * mu && inter.hits.empty();
        ok = ok && m_ok;
        d << fmt("mu=%.3g: background %.10f, perturbed %.6f, %zu hits on %d segments; ", mu, e0, e1,
                 inter.hits.size(), inter.segments);
    }
    Polyline syn;
    for (int i = 0; i <= 40000; ++i) {
        const double b = 20.0 + 380.0 * i / 40000;
        const auto z = std::exp(std::complex<double>(0.0, b)) / b
                       * (1.0 + 0.7 * std::pow(b, -0.5) * std::exp(std::complex<double>(0.0, 2.5 * b)));
        syn.push_back({z.real(), z.imag()});
    }
    const auto hits = detect_intersections({syn}).hits.size();
    ok = ok && hits > 0;
    d << fmt("synthetic frequency 2.5 curve: %zu self-intersections", hits);
    return {ok, d.str()};
}

// 12. Stratification: zero for constant Omega, positive beyond a threshold with a
// non-decreasing trend otherwise.
Outcome c12()
{
    const FlowParams fp{1.0, 8, 2};
    const auto bg = make_beta_grid();
    std::vector<double> betas;
    for (double b = 2.0 * pi + 0.1; b <= bg.trusted(); b += 2.0)
        betas.push_back(b);

    const auto bgs = background_state(fp, make_pgrid(), bg);
    double zero = 0.0;
    for (const auto& p : stratification_ratio(bgs, 0.0, betas))
        zero = std::max(zero, p.ratio);

    // Fine p-grid: on the default h_p the ratio drifts by O((h_p beta)^2) at large beta.
    const double amp = 1e-3;
    const auto om = single_mode(fp, cplx(amp, 0.0));
    const auto s = linear_state(fp, make_pgrid(40.0, 0.005), bg, om);
    const auto series = stratification_ratio(s, 0.0, betas, 256);
    if (series.size() < betas.size() / 2)
        return {false, fmt("stratification series ended early at %zu of %zu points", series.size(), betas.size())};
    const double level = 0.5 * (4.0 * amp) / (om.base + 2.0 * amp);  // half of osc(Omega) / sup |Omega|
    size_t first = series.size();
    for (size_t i = series.size(); i-- > 0;) {
        if (series[i].ratio < level)
            break;
        first = i;
    }
    if (first + 4 > series.size())
        return {false, "stratification ratio is not uniformly positive over a tail"};
    std::vector<double> b, r;
    for (size_t i = first; i < series.size(); ++i) {
        b.push_back(series[i].beta);
        r.push_back(series[i].ratio);
    }
    const double mean = [&] {
        double m = 0.0;
        for (double x : r)
            m += x;
        return m / r.size();
    }();
    const double rel = slope(b, r) * (b.back() - b.front()) / mean;
    const bool ok = zero <= 1e-10 && rel >= -0.01;
    return {ok, fmt("background ratio %.1e; threshold beta = %.2f; ratio %.5f..%.5f on [%.1f, %.1f]; "
                    "fitted relative change %+.2e (>= -1e-2)",
                    zero, b.front(), *std::min_element(r.begin(), r.end()), *std::max_element(r.begin(), r.end()),
                    b.front(), b.back(), rel)};
}

// 13. |v| r^{1/mu - 1} bounded over three decades of r at t in {0.1, 1, 10}.
Outcome c13()
{
    const FlowParams fp{1.0, 8, 2};
    const auto g = make_pgrid();
    const auto bg = make_beta_grid();
    const auto res = solve_nonlinear(fp, g, bg, single_mode(fp, cplx(1e-3, 0.0)));
    if (res.report.status != NewtonStatus::converged)
        return {false, "Newton did not converge"};
    std::vector<double> bounds;
    std::ostringstream d;
    bool ok = true;
    for (double t : {0.1, 1.0, 10.0}) {
        double rmin = INFINITY, rmax = 0.0;
        std::vector<double> decade_sup(4, 0.0);
        std::vector<std::pair<double, double>> samples;
        for (double beta = 0.1; beta <= bg.trusted(); beta *= 1.05)
            for (int j = 0; j < 16; ++j) {
                const auto f = eval_fields(res.state, beta, 2.0 * pi * j / (16 * fp.N), t);
                const double val = std::hypot(f.v[0], f.v[1]) * std::pow(f.r, 1.0 / fp.mu - 1.0);
                samples.emplace_back(f.r, val);
                rmin = std::min(rmin, f.r);
                rmax = std::max(rmax, f.r);
            }
        for (const auto& [r, val] : samples) {
            const int k = std::min(3, static_cast<int>(std::log10(r / rmin)));
            decade_sup[k] = std::max(decade_sup[k], val);
        }
        decade_sup.resize(std::log10(rmax / rmin) >= 3.0 ? 3 : 4);
        const double hi = *std::max_element(decade_sup.begin(), decade_sup.end());
        const double lo = *std::min_element(decade_sup.begin(), decade_sup.end());
        ok = ok && std::log10(rmax / rmin) >= 3.0 && std::isfinite(hi) && hi <= 1.5 * lo;
        bounds.push_back(hi);
        d << fmt("t=%g: r in [%.2e, %.2e], per-decade sup %.4f..%.4f; ", t, rmin, rmax, lo, hi);
    }
    const double spread = *std::max_element(bounds.begin(), bounds.end()) / *std::min_element(bounds.begin(), bounds.end());
    ok = ok && spread <= 1.1;
    d << fmt("bound spread across t %.2e", spread - 1.0);
    return {ok, d.str()};
}

// 14. Strength scaling doubles omega r^{1/mu}.
Outcome c14()
{
    const FlowParams fp{1.0, 8, 2};
    const auto g = make_pgrid();
    const auto bg = make_beta_grid();
    const auto om = single_mode(fp, cplx(1e-3, 5e-4));
    const auto res = solve_nonlinear(fp, g, bg, om);
    if (res.report.status != NewtonStatus::converged)
        return {false, "Newton did not converge"};
    const auto init = sample_initial_vorticity(res.state).omega0;
    const auto sc = scale_solution(2.0, om, init);
    double worst = 0.0;
    worst = std::max(worst, std::abs(sc.omega.base - 2.0 * om.base));
    for (const auto& [n, c] : om.coeffs)
        worst = std::max(worst, std::abs(sc.omega.at(n) - 2.0 * c));
    for (const auto& [n, c] : init.coeffs)
        worst = std::max(worst, std::abs(sc.initial.at(n) - 2.0 * c));

    // v^(s)(x, t) = s v(x, s t): sample the scaled state at t and the original at s t.
    auto scaled = res.state;
    scaled.strength = 2.0;
    double worst_x = 0.0;
    for (double beta = 0.2; beta <= bg.trusted(); beta *= 1.3)
        for (int j = 0; j < 8; ++j)
            for (double t : {0.1, 1.0, 10.0}) {
                const double u = 2.0 * pi * j / (8 * fp.N);
                const auto a = eval_fields(res.state, beta, u, 2.0 * t);
                const auto b = eval_fields(scaled, beta, u, t);
                worst_x = std::max(worst_x, std::hypot(a.x[0] - b.x[0], a.x[1] - b.x[1]) / a.r);
                const double ha = a.omega * std::pow(a.r, 1.0 / fp.mu);
                const double hb = b.omega * std::pow(b.r, 1.0 / fp.mu);
                worst = std::max(worst, std::abs(hb - 2.0 * ha) / std::abs(2.0 * ha));
            }
    return {worst <= 1e-10 && worst_x <= 1e-12,
            fmt("worst relative deviation from doubling %.2e; sample positions agree to %.1e", worst, worst_x)};
}

std::set<int> parse_list(const char* s)
{
    std::set<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty())
            out.insert(std::stoi(tok));
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> only, expected;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string a = argv[i];
        if (a == "--only")
            only = parse_list(argv[i + 1]);
        else if (a == "--expect-fail")
            expected = parse_list(argv[i + 1]);
        else {
            std::fprintf(stderr, "unknown option %s\n", a.c_str());
            return 2;
        }
    }
    const std::vector<std::function<Outcome()>> criteria{c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12, c13, c14};
    std::set<int> failed;
    for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) {
        if (!only.empty() && !only.count(k))
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k - 1]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %d: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", k, o.detail.c_str(), secs);
        std::fflush(stdout);
        if (!o.pass)
            failed.insert(k);
    }
    if (!only.empty())
        std::erase_if(expected, [&](int k) { return !only.count(k); });
    return failed == expected ? 0 : 1;
}
