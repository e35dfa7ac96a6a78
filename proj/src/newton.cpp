#include "spiralis/newton.hpp"

#include "spiralis/errors.hpp"
#include "spiralis/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spiralis {

const char* status_name(NewtonStatus s)
{
    switch (s) {
    case NewtonStatus::converged: return "converged";
    case NewtonStatus::max_iterations: return "max_iterations";
    case NewtonStatus::stagnation: return "stagnation";
    case NewtonStatus::guard_violation: return "guard_violation";
    }
    return "unknown";
}

namespace {

struct Evaluated {
    double residual;
    ResidualEval eval;
};

Evaluated evaluate(const SolutionState& s)
{
    ResidualEval e = residual_F(s);
    const double r = e.F.window_sup(s.bgrid.trusted());
    return {r, std::move(e)};
}

double truncation_level(const SolutionState& s, const PhysicalField& F)
{
    if (s.params.n_max + 1 > F.u_points / 2)
        return 0.0;
    const auto row = harmonic_row(F, s.params.n_max + 1);
    double m = 0.0;
    for (int i = 0; i < s.bgrid.size(); ++i)
        if (std::abs(s.bgrid.node(i)) <= s.bgrid.trusted())
            m = std::max(m, 2.0 * std::abs(row[i]));
    return m;
}

std::vector<ModeBundle> increments(const SolutionState& s, const PhysicalField& F,
                                   const NewtonControls& c)
{
    const int nm = s.params.n_max;
    std::vector<ModeBundle> inc;
    for (int k = 0; k <= nm; ++k)
        inc.emplace_back(s.pgrid, k * s.params.N);
    parallel_for(nm + 1, [&](int k) {
        SpectralMeasure src = physical_to_spectral(harmonic_row(F, k), s.bgrid, s.pgrid);
        src *= -1.0;
        inc[k] = solve_mode(s.params, k * s.params.N, src, s.bgrid, c.neumann, c.literal);
    });
    return inc;
}

SolutionState step(const SolutionState& s, const std::vector<ModeBundle>& inc, double lambda)
{
    SolutionState out = s;
    for (size_t k = 0; k < inc.size(); ++k)
        out.modes.bundles[k].axpy(lambda, inc[k]);
    out.increments += 1;
    return out;
}

} // namespace

NewtonResult solve_nonlinear(const FlowParams& params, PGridPtr pgrid, const BetaGrid& bgrid,
                             const VorticityData& omega, const NewtonControls& controls)
{
    if (controls.iter_max < 0 || !(controls.damping > 0.0 && controls.damping <= 1.0))
        throw Error(ErrorKind::config, "Newton controls: iter_max >= 0 and damping in (0, 1] required");
    validate(params);
    validate_series(params, omega, "vorticity data");

    NewtonResult res{background_state(params, pgrid, bgrid), {}};
    res.state.omega = omega;
    NewtonReport& rep = res.report;
    const double obar = std::abs(params.omega_base());
    rep.tol = controls.tol_residual > 0.0 ? controls.tol_residual : 1e-8 * obar;

    const double size = omega.l1();
    if (size > controls.smallness * obar) {
        std::ostringstream msg;
        msg << "smallness guard: l1(Omega_dot) = " << size << " exceeds " << controls.smallness
            << " * |Omega_bar| = " << controls.smallness * obar;
        rep.status = NewtonStatus::guard_violation;
        rep.message = msg.str();
        return res;
    }

    Evaluated cur = evaluate(res.state);
    if (!cur.eval.guard.empty()) {
        rep.status = NewtonStatus::guard_violation;
        rep.message = "guard at the starting state: " + cur.eval.guard;
        return res;
    }
    rep.initial_residual = rep.final_residual = cur.residual;
    rep.truncation = truncation_level(res.state, cur.eval.F);
    rep.history.push_back({0, cur.residual, 0.0, cur.eval.min_margin});
    if (cur.residual <= rep.tol) {
        rep.status = NewtonStatus::converged;
        return res;
    }

    for (int it = 1; it <= controls.iter_max; ++it) {
        const auto inc = increments(res.state, cur.eval.F, controls);
        double lambda = controls.damping;
        bool accepted = false;
        std::string guard;
        for (int b = 0; b <= controls.backtrack; ++b, lambda *= 0.5) {
            SolutionState trial = step(res.state, inc, lambda);
            Evaluated ev = evaluate(trial);
            if (!ev.eval.guard.empty()) {
                guard = ev.eval.guard;
                continue;
            }
            if (ev.residual <= cur.residual) {
                res.state = std::move(trial);
                cur = std::move(ev);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            rep.truncation = truncation_level(res.state, cur.eval.F);
            rep.status = guard.empty() ? NewtonStatus::stagnation : NewtonStatus::guard_violation;
            std::ostringstream msg;
            if (guard.empty())
                msg << "no residual decrease after " << controls.backtrack << " step halvings at iteration " << it
                    << "; non-retained harmonic k = n_max + 1 carries " << rep.truncation;
            else
                msg << "guard " << guard << " at iteration " << it;
            rep.message = msg.str();
            return res;
        }
        rep.iterations = it;
        rep.final_residual = cur.residual;
        rep.history.push_back({it, cur.residual, lambda, cur.eval.min_margin});
        rep.truncation = truncation_level(res.state, cur.eval.F);
        if (cur.residual <= rep.tol) {
            rep.status = NewtonStatus::converged;
            return res;
        }
        if (it >= 3 && cur.residual > 0.95 * rep.history[it - 3].residual) {
            rep.status = NewtonStatus::stagnation;
            std::ostringstream msg;
            msg << "residual reduced by less than 5% over 3 iterations (" << rep.history[it - 3].residual
                << " -> " << cur.residual << "); non-retained harmonic k = n_max + 1 carries " << rep.truncation;
            rep.message = msg.str();
            return res;
        }
    }
    rep.status = NewtonStatus::max_iterations;
    rep.message = "iteration limit reached";
    return res;
}

void require_converged(const NewtonReport& report)
{
    switch (report.status) {
    case NewtonStatus::converged:
        return;
    case NewtonStatus::guard_violation:
        throw Error(ErrorKind::guard_violation, report.message);
    case NewtonStatus::stagnation:
        throw Error(ErrorKind::stagnation, report.message);
    case NewtonStatus::max_iterations:
        throw Error(ErrorKind::divergence, report.message + " (final residual " +
                                               std::to_string(report.final_residual) + ")");
    }
}

} // namespace spiralis
