#include "spiralis/linear_solve.hpp"

#include "spiralis/errors.hpp"
#include "spiralis/parallel.hpp"

#include <cmath>
#include <sstream>

namespace spiralis {

cplx AngularSeries::at(int n) const
{
    auto it = coeffs.find(n);
    return it == coeffs.end() ? cplx(0.0) : it->second;
}

void AngularSeries::set(int n, cplx c)
{
    if (n == 0) {
        coeffs[0] = cplx(c.real(), 0.0);
        return;
    }
    coeffs[n] = c;
    coeffs[-n] = std::conj(c);
}

double AngularSeries::eval(double u) const
{
    cplx s = base;
    for (const auto& [n, c] : coeffs)
        s += c * std::polar(1.0, n * u);
    return s.real();
}

double AngularSeries::l1() const
{
    double s = 0.0;
    for (const auto& [n, c] : coeffs)
        s += std::abs(c);
    return s;
}

double AngularSeries::hermitian_defect() const
{
    double d = 0.0;
    for (const auto& [n, c] : coeffs)
        d = std::max(d, std::abs(c - std::conj(at(-n))));
    return d;
}

int AngularSeries::max_k() const
{
    int k = 0;
    for (const auto& [n, c] : coeffs)
        if (c != cplx(0.0))
            k = std::max(k, std::abs(n) / std::max(N, 1));
    return k;
}

VorticityData background_vorticity(const FlowParams& params)
{
    VorticityData v;
    v.N = params.N;
    v.base = params.omega_base();
    return v;
}

double initial_vorticity_base(const FlowParams& params)
{
    return params.omega_base() * std::pow(params.mu, -1.0 / (2.0 * params.mu));
}

void validate_series(const FlowParams& params, const AngularSeries& s, const char* what)
{
    std::ostringstream msg;
    if (s.N != params.N) {
        msg << what << ": symmetry N = " << s.N << " does not match the configured N = " << params.N;
        throw Error(ErrorKind::data, msg.str());
    }
    if (!std::isfinite(s.base)) {
        msg << what << ": base value is not finite";
        throw Error(ErrorKind::data, msg.str());
    }
    double scale = std::abs(s.base);
    for (const auto& [n, c] : s.coeffs) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
            msg << what << ": coefficient " << n << " is not finite";
            throw Error(ErrorKind::data, msg.str());
        }
        if (n % params.N != 0) {
            msg << what << ": coefficient index " << n << " is not a multiple of N = " << params.N;
            throw Error(ErrorKind::data, msg.str());
        }
        if (std::abs(n) > params.N * params.n_max && c != cplx(0.0)) {
            msg << what << ": coefficient index " << n << " exceeds N * n_max = " << params.N * params.n_max;
            throw Error(ErrorKind::data, msg.str());
        }
        scale = std::max(scale, std::abs(c));
    }
    if (s.hermitian_defect() > 1e-12 * std::max(scale, 1.0)) {
        msg << what << ": coefficients are not Hermitian (defect " << s.hermitian_defect() << ")";
        throw Error(ErrorKind::data, msg.str());
    }
}

ModeSet zero_modes(const FlowParams& params, const PGridPtr& grid)
{
    ModeSet set;
    for (int k = 0; k <= params.n_max; ++k)
        set.bundles.emplace_back(grid, k * params.N);
    return set;
}

std::vector<cplx> literal_L_row(const FlowParams& params, const ModeBundle& b, const BetaGrid& bg)
{
    std::vector<cplx> row = eval_on_grid(b.Ru, bg);
    if (b.n == 0)
        return row;
    const std::vector<cplx> ut = eval_on_grid(b.u, bg);
    const cplx e = (2.0 * params.mu - 1.0) * cplx(0.0, b.n);
    for (int i = 0; i < bg.size(); ++i)
        row[i] -= e * bg.node(i) * ut[i];
    return row;
}

cplx literal_Q_minus_P(const ModeBundle& b, double beta)
{
    if (b.n == 0 || beta == 0.0)
        return 0.0;
    return cplx(0.0, b.n) * beta * eval_at_beta(b.u, beta);
}

ModeBundle solve_mode(const FlowParams& params, int n, const SpectralMeasure& source,
                      const BetaGrid& bg, const NeumannControls& controls,
                      const LiteralControls& literal, LiteralStats* stats)
{
    ModeBundle b = apply_L_inv(params, n, source, controls);
    LiteralStats st;
    if (n == 0 || source.l1_norm() == 0.0) {
        // E vanishes identically for n = 0, so the chain inverse is already literal.
        if (stats)
            *stats = st;
        return b;
    }
    const double window = bg.trusted();
    const std::vector<cplx> src = eval_on_grid(source, bg);
    for (int i = 0; i < bg.size(); ++i)
        if (std::abs(bg.node(i)) <= window)
            st.source = std::max(st.source, std::abs(src[i]));

    double prev = INFINITY;
    int slow = 0;
    for (st.iterations = 0;; ++st.iterations) {
        const std::vector<cplx> lu = literal_L_row(params, b, bg);
        std::vector<cplx> r(bg.size());
        st.residual = 0.0;
        for (int i = 0; i < bg.size(); ++i) {
            r[i] = src[i] - lu[i];
            if (std::abs(bg.node(i)) <= window)
                st.residual = std::max(st.residual, std::abs(r[i]));
        }
        if (st.residual <= literal.tol * st.source || st.iterations >= literal.iter_max)
            break;
        // The correction stalls at the discretization floor; stop rather than chase it.
        slow = st.residual > 0.8 * prev ? slow + 1 : 0;
        if (slow >= 2)
            break;
        prev = st.residual;
        b.axpy(1.0, apply_L_inv(params, n, physical_to_spectral(r, bg, source.grid_ptr()), controls));
    }
    if (stats)
        *stats = st;
    return b;
}

ModeSet solve_linearized(const FlowParams& params, const PGridPtr& grid, const BetaGrid& bg,
                         const VorticityData& omega, const NeumannControls& controls,
                         const LiteralControls& literal)
{
    validate(params);
    validate_series(params, omega, "vorticity data");
    ModeSet set = zero_modes(params, grid);
    const double c = -2.0 * params.mu * params.mu;
    parallel_for(params.n_max + 1, [&](int k) {
        const int n = k * params.N;
        const cplx w = omega.at(n);
        if (w == cplx(0.0))
            return;
        set.bundles[k] = solve_mode(params, n, SpectralMeasure::delta(grid, 0.0, c * w), bg, controls, literal);
    });
    return set;
}

namespace {

cplx first_order_image(const FlowParams& params, const ModeBundle& b)
{
    // Linearizing h = Omega q r^{1/mu} gives -(1/2mu)(dt_U + dt_beta) delta psi times Omega_bar
    // mu^{-1/2mu}; dt_U + dt_beta = beta d_u, i.e. (Q - P) <-> i n beta, evaluated at beta = 0.
    const double mu = params.mu;
    return -(2.0 * mu - 1.0) / (2.0 * mu * mu) * literal_Q_minus_P(b, 0.0);
}

} // namespace

InitialVorticity initial_vorticity_linear(const FlowParams& params, const ModeSet& modes,
                                          const VorticityData& omega)
{
    if (modes.n_max() < params.n_max)
        throw Error(ErrorKind::missing, "initial_vorticity: mode bundles missing for some active modes");
    const double f = std::pow(params.mu, -1.0 / (2.0 * params.mu));
    InitialVorticity out;
    out.N = params.N;
    out.base = initial_vorticity_base(params);
    for (int k = 0; k <= params.n_max; ++k) {
        const int n = k * params.N;
        const cplx d = f * (first_order_image(params, modes.at_k(k)) + omega.at(n));
        if (d != cplx(0.0))
            out.set(n, d);
    }
    return out;
}

cplx initial_multiplier(const FlowParams& params, const PGridPtr& grid, const BetaGrid& bg, int n,
                        const NeumannControls& controls)
{
    const double mu = params.mu;
    auto b = solve_mode(params, n, SpectralMeasure::delta(grid, 0.0, -2.0 * mu * mu), bg, controls);
    return std::pow(mu, -1.0 / (2.0 * mu)) * (first_order_image(params, b) + 1.0);
}

namespace {

double mismatch(const AngularSeries& a, const AngularSeries& b)
{
    double d = std::abs(a.base + a.at(0).real() - b.base - b.at(0).real());
    for (const auto& [n, c] : a.coeffs)
        if (n != 0)
            d += std::abs(c - b.at(n));
    for (const auto& [n, c] : b.coeffs)
        if (n != 0 && a.coeffs.find(n) == a.coeffs.end())
            d += std::abs(c);
    return d;
}

} // namespace

InversionReport invert_initial_map(const FlowParams& params, const InitialVorticity& target,
                                   const InitialMap& forward, double tol, int iter_max)
{
    validate_series(params, target, "target initial vorticity");
    const double d_inv = std::pow(params.mu, 1.0 / (2.0 * params.mu));
    InversionReport rep;
    rep.omega = background_vorticity(params);
    for (int it = 0; it <= iter_max; ++it) {
        const InitialVorticity cur = forward(rep.omega);
        rep.mismatch = mismatch(target, cur);
        rep.history.push_back(rep.mismatch);
        rep.iterations = it;
        if (rep.mismatch < tol)
            return rep;
        if (it == iter_max)
            break;
        // The n = 0 correction carries the base mismatch as well.
        const double base_gap = target.base - cur.base;
        for (int k = 0; k <= params.n_max; ++k) {
            const int n = k * params.N;
            cplx gap = target.at(n) - cur.at(n);
            if (n == 0)
                gap += base_gap;
            if (gap != cplx(0.0))
                rep.omega.set(n, rep.omega.at(n) + d_inv * gap);
        }
    }
    std::ostringstream msg;
    msg << "initial-data inversion did not converge in " << iter_max << " iterations (final mismatch "
        << rep.mismatch << ")";
    throw Error(ErrorKind::divergence, msg.str());
}

RecommendResult recommend_N(double mu, int n_max, int N_cap, double target, const PGridPtr& grid)
{
    if (!(target > 0.0 && target < 1.0))
        throw Error(ErrorKind::config, "contraction target must lie in (0, 1)");
    RecommendResult res;
    double best = INFINITY;
    int best_N = 0;
    for (int N = 2; N <= N_cap; ++N) {
        FlowParams fp{mu, N, n_max};
        bool guards = true;
        for (int k = -n_max; k <= n_max && guards; ++k)
            guards = guard_invertibility(fp, k * N).ok;
        if (!guards) {
            res.scanned.emplace_back(N, INFINITY);
            continue;
        }
        std::vector<double> f(2 * n_max, 0.0);
        parallel_for(2 * n_max, [&](int i) {
            const int k = i / 2 + 1;
            const int n = (i % 2 == 0 ? 1 : -1) * k * N;
            f[i] = estimate_norm(OpTag::ER_inv, fp, n, default_probes(grid, n));
        });
        double worst = 0.0;
        for (double x : f)
            worst = std::max(worst, x);
        res.scanned.emplace_back(N, worst);
        if (worst < best) {
            best = worst;
            best_N = N;
        }
        if (worst <= target) {
            res.ok = true;
            res.N = N;
            res.factor = worst;
            return res;
        }
    }
    res.N = best_N;
    res.factor = best;
    return res;
}

ScaledData scale_solution(double s, const VorticityData& omega, const InitialVorticity& initial)
{
    if (s == 0.0 || !std::isfinite(s))
        throw Error(ErrorKind::config, "scale factor must be finite and nonzero");
    ScaledData out{s, omega, initial};
    out.omega.base *= s;
    for (auto& [n, c] : out.omega.coeffs)
        c *= s;
    out.initial.base *= s;
    for (auto& [n, c] : out.initial.coeffs)
        c *= s;
    return out;
}

} // namespace spiralis
