#include "spiralis/fields.hpp"

#include "spiralis/errors.hpp"
#include "spiralis/parallel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace spiralis {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

enum Image { I_u, I_Pu, I_QPu, I_Q2Pu, I_count };

// The transformed images u, Pu, QPu, Q^2 P u of one bundle.  All of them reflect to the -n mode
// by p -> -p plus conjugation, so the -n coefficient is the conjugate of the +n one.  Q u and
// Q^2 u are formed on the transform side (see literal_L_row):
//   (Q u)^ = (P u)^ + i n beta u^,   (Q^2 u)^ = (QP u)^ + i n beta ((Q u)^ - u^).
const SpectralMeasure& image(const ModeBundle& b, int which, SpectralMeasure& scratch)
{
    switch (which) {
    case I_u: return b.u;
    case I_Pu: return b.Pu;
    case I_QPu: return b.QPu;
    default: return scratch = b.Q2Pu();
    }
}

// Mode coefficients of the fields at one beta.  The dictionary is
//   dt_beta <-> -(P + 2mu), dt_U <-> Q + 2mu, beta d_U <-> Q + 1, d_u <-> i n.
struct ModeFields {
    cplx psi, T, U, Y, V, Yb;
    cplx dT, dU, dY, dV, dYb;  // beta d_U images
};

ModeFields mode_fields(const std::array<cplx, I_count>& im, int n, double beta, double mu)
{
    const double m2 = 2.0 * mu;
    const cplx in(0.0, n);
    const cplx u = im[I_u], Pu = im[I_Pu], QPu = im[I_QPu], Q2Pu = im[I_Q2Pu];
    const cplx Qu = Pu + in * beta * u;
    const cplx Q2u = QPu + in * beta * (Qu - u);
    ModeFields f;
    f.psi = u;
    f.T = -Pu - m2 * u;
    f.U = Qu + m2 * u;
    f.Y = in * u;
    f.V = -(QPu + m2 * Qu + (m2 + 1.0) * Pu + m2 * (m2 + 1.0) * u);
    f.Yb = in * f.T;
    f.dT = -(QPu + Pu + m2 * Qu + m2 * u);
    f.dU = Q2u + (m2 + 1.0) * Qu + m2 * u;
    f.dY = in * (Qu + u);
    f.dV = -(Q2Pu + m2 * Q2u + (m2 + 2.0) * QPu + m2 * (m2 + 2.0) * Qu + (m2 + 1.0) * Pu
             + m2 * (m2 + 1.0) * u);
    f.dYb = in * f.dT;
    return f;
}

LocalFields background_fields(const SolutionState& s, double u)
{
    const double mu = s.params.mu;
    LocalFields lf;
    lf.psi = s.psi_base();
    lf.T[0] = -1.0;
    lf.U[0] = 1.0;
    lf.V[0] = -2.0 * mu;
    lf.Omega = s.omega.eval(u);
    return lf;
}

// Adds the mode-n contribution with phase e^{i n u}; k = 0 enters once, k > 0 twice (real part).
void add_mode(LocalFields& lf, const ModeFields& f, int n, cplx phase)
{
    const double w = n == 0 ? 1.0 : 2.0;
    const cplx in(0.0, n);
    auto put = [&](std::array<double, 3>& X, cplx v, cplx dv) {
        X[0] += w * (v * phase).real();
        X[1] += w * (dv * phase).real();
        X[2] += w * (in * v * phase).real();
    };
    lf.psi += w * (f.psi * phase).real();
    put(lf.T, f.T, f.dT);
    put(lf.U, f.U, f.dU);
    put(lf.Y, f.Y, f.dY);
    put(lf.V, f.V, f.dV);
    put(lf.Yb, f.Yb, f.dYb);
}

// Image values of all modes on a uniform beta row.
struct ModeRows {
    double beta0 = 0.0, dbeta = 0.0;
    std::vector<int> n;
    std::vector<std::array<std::vector<cplx>, I_count>> img;
};

ModeRows mode_rows(const SolutionState& s, double beta0, double dbeta, int count)
{
    ModeRows rows;
    rows.beta0 = beta0;
    rows.dbeta = dbeta;
    const int nm = s.modes.n_max();
    rows.n.resize(nm + 1);
    rows.img.resize(nm + 1);
    parallel_for((nm + 1) * I_count, [&](int idx) {
        const int k = idx / I_count, which = idx % I_count;
        const ModeBundle& b = s.modes.at_k(k);
        rows.n[k] = b.n;
        SpectralMeasure scratch(b.u.grid_ptr());
        rows.img[k][which] = eval_uniform(image(b, which, scratch), beta0, dbeta, count);
    });
    return rows;
}

std::vector<ModeFields> row_mode_fields(const ModeRows& rows, int i, double mu)
{
    std::vector<ModeFields> out(rows.n.size());
    for (size_t k = 0; k < rows.n.size(); ++k) {
        std::array<cplx, I_count> im;
        for (int w = 0; w < I_count; ++w)
            im[w] = rows.img[k][w][i];
        out[k] = mode_fields(im, rows.n[k], rows.beta0 + i * rows.dbeta, mu);
    }
    return out;
}

LocalFields fields_from_modes(const SolutionState& s, const std::vector<ModeFields>& mf,
                              const std::vector<int>& ns, double u)
{
    LocalFields lf = background_fields(s, u);
    for (size_t k = 0; k < mf.size(); ++k)
        add_mode(lf, mf[k], ns[k], std::polar(1.0, ns[k] * u));
    return lf;
}

double r_check_of(double T, double mu) { return std::sqrt(T / (-mu)); }

} // namespace

SolutionState background_state(const FlowParams& params, PGridPtr pgrid, const BetaGrid& bgrid)
{
    validate(params);
    SolutionState s;
    s.params = params;
    s.pgrid = pgrid;
    s.bgrid = bgrid;
    s.omega = background_vorticity(params);
    s.modes = zero_modes(params, pgrid);
    return s;
}

SolutionState linear_state(const FlowParams& params, PGridPtr pgrid, const BetaGrid& bgrid,
                           const VorticityData& omega, const NeumannControls& controls)
{
    SolutionState s = background_state(params, pgrid, bgrid);
    s.omega = omega;
    s.modes = solve_linearized(params, pgrid, bgrid, omega, controls);
    s.increments = 1;
    return s;
}

SolutionState scaled_perturbation(const SolutionState& state, double eps)
{
    SolutionState s = state;
    for (auto& [n, c] : s.omega.coeffs)
        c *= eps;
    for (auto& b : s.modes.bundles) {
        ModeBundle z(b.u.grid_ptr(), b.n);
        b = z.axpy(eps, b);
    }
    return s;
}

PointResidual assemble_residual(const LocalFields& lf, double mu)
{
    const auto& [T, dT, uT] = lf.T;
    const auto& [U, dU, uU] = lf.U;
    const auto& [Y, dY, uY] = lf.Y;
    const auto& [V, dV, uV] = lf.V;
    const auto& [Yb, dYb, uYb] = lf.Yb;

    PointResidual r;
    r.A = 2.0 * T * U / V;
    r.B = Y - Yb * U / V;
    const double c = Yb / (2.0 * T);
    const double d = V / (2.0 * T);
    r.gU = r.A - c * r.B;
    r.gu = d * r.B;
    r.W = -(1.0 / (2.0 * mu)) * V * std::pow(U, -1.0 / (2.0 * mu)) * lf.Omega;

    // Derivations delta in {beta d_U, d_u} by product and quotient rules.
    auto dgU = [&](double dT_, double dU_, double dY_, double dV_, double dYb_) {
        const double dA = 2.0 * (dT_ * U + T * dU_) / V - 2.0 * T * U * dV_ / (V * V);
        const double dB = dY_ - (dYb_ * U + Yb * dU_) / V + Yb * U * dV_ / (V * V);
        const double dc = dYb_ / (2.0 * T) - Yb * dT_ / (2.0 * T * T);
        return dA - dc * r.B - c * dB;
    };
    auto dgu = [&](double dT_, double dU_, double dY_, double dV_, double dYb_) {
        const double dB = dY_ - (dYb_ * U + Yb * dU_) / V + Yb * U * dV_ / (V * V);
        const double dd = dV_ / (2.0 * T) - V * dT_ / (2.0 * T * T);
        return dd * r.B + d * dB;
    };
    r.dU_gU = dgU(dT, dU, dY, dV, dYb) + (2.0 * mu - 1.0) * r.gU;
    r.du_gu = dgu(uT, uU, uY, uV, uYb);
    r.F = 2.0 * mu * mu * (-r.dU_gU - r.du_gu + r.W);
    return r;
}

std::string guard_failure(const LocalFields& lf)
{
    if (!(-lf.T[0] > 0.0))
        return "-dt_beta psi > 0";
    if (!(lf.U[0] > 0.0))
        return "dt_U psi > 0";
    if (!(-lf.V[0] > 0.0))
        return "-(dt_U + 1) dt_beta psi > 0";
    return {};
}

LocalFields local_fields(const SolutionState& state, double beta, double u)
{
    std::vector<ModeFields> mf;
    std::vector<int> ns;
    for (const auto& b : state.modes.bundles) {
        SpectralMeasure scratch(b.u.grid_ptr());
        std::array<cplx, I_count> im;
        for (int w = 0; w < I_count; ++w)
            im[w] = eval_at_beta(image(b, w, scratch), beta);
        mf.push_back(mode_fields(im, b.n, beta, state.params.mu));
        ns.push_back(b.n);
    }
    return fields_from_modes(state, mf, ns, u);
}

FieldSample eval_fields(const SolutionState& state, double beta, double u, double t)
{
    if (!(beta > 0.0) || !(t > 0.0))
        throw Error(ErrorKind::config, "eval_fields requires beta > 0 and t > 0");
    const double s = state.strength;
    const double te = s * t;
    if (!(te > 0.0))
        throw Error(ErrorKind::config, "eval_fields requires strength * t > 0");
    const double mu = state.params.mu;
    const LocalFields lf = local_fields(state, beta, u);
    if (auto g = guard_failure(lf); !g.empty()) {
        std::ostringstream msg;
        msg << "guard violated at beta = " << beta << ", u = " << u << ": " << g;
        throw Error(ErrorKind::guard_violation, msg.str());
    }
    const PointResidual pr = assemble_residual(lf, mu);

    FieldSample f;
    f.beta = beta;
    f.u = u;
    f.t = t;
    f.psi = lf.psi;
    f.d_beta = lf.T[0];
    f.d_U = lf.U[0];
    f.d_u = lf.Y[0];
    f.r_check = r_check_of(lf.T[0], mu);
    f.q_check = std::pow(lf.U[0], -1.0 / (2.0 * mu));
    f.o_check = f.q_check * lf.Omega;
    f.gU = pr.gU;
    f.gu = pr.gu;
    f.W = pr.W;
    f.F = pr.F;
    f.d_a = pr.A;
    f.d_theta = pr.B;
    f.theta = beta + u;
    f.r = std::pow(te / beta, mu) * f.r_check;
    f.a = std::log(f.r);
    f.x = {f.r * std::cos(f.theta), f.r * std::sin(f.theta)};
    // v = (t/beta)^{mu-1} J r_check^{-1} Rot(theta) (A, B)^T, J = [[0, -1], [1, 0]].
    const double c = std::cos(f.theta), sn = std::sin(f.theta);
    const double ex = pr.A * c - pr.B * sn, ey = pr.A * sn + pr.B * c;
    const double pre = s * std::pow(te / beta, mu - 1.0) / f.r_check;
    f.v = {-pre * ey, pre * ex};
    f.omega = s * (beta / te) * f.o_check;
    f.h = s * f.o_check * std::pow(f.r_check, 1.0 / mu);
    return f;
}

double PhysicalField::sup_norm() const
{
    double m = 0.0;
    for (double v : values)
        m = std::max(m, std::abs(v));
    return m;
}

double PhysicalField::window_sup(double limit) const
{
    double m = 0.0;
    for (int i = 0; i < bgrid.size(); ++i)
        if (std::abs(bgrid.node(i)) <= limit)
            for (int j = 0; j < u_points; ++j)
                m = std::max(m, std::abs(at(i, j)));
    return m;
}

ResidualEval residual_F(const SolutionState& state)
{
    const BetaGrid& bg = state.bgrid;
    const int nb = bg.size(), M = state.u_points;
    const double mu = state.params.mu;
    const ModeRows rows = mode_rows(state, bg.node(0), bg.h, nb);

    ResidualEval out;
    out.F.bgrid = bg;
    out.F.u_points = M;
    out.F.period = two_pi / state.params.N;
    out.F.values.assign(static_cast<size_t>(nb) * M, 0.0);

    std::vector<double> margin(nb, INFINITY);
    std::vector<std::string> guard(nb);
    parallel_for(nb, [&](int i) {
        const auto mf = row_mode_fields(rows, i, mu);
        for (int j = 0; j < M; ++j) {
            const LocalFields lf = fields_from_modes(state, mf, rows.n, out.F.u_node(j));
            margin[i] = std::min({margin[i], -lf.T[0], lf.U[0], -lf.V[0]});
            if (guard[i].empty())
                if (auto g = guard_failure(lf); !g.empty()) {
                    std::ostringstream msg;
                    msg << g << " fails at beta = " << bg.node(i) << ", u = " << out.F.u_node(j);
                    guard[i] = msg.str();
                }
            out.F.values[static_cast<size_t>(i) * M + j] = assemble_residual(lf, mu).F;
        }
    });
    // Guards concern the physical half-line; beta <= 0 and the taper zone exist only for the
    // transforms.
    out.min_margin = INFINITY;
    for (int i = 0; i < nb; ++i) {
        if (!(bg.node(i) > 0.0 && bg.node(i) <= bg.trusted()))
            continue;
        out.min_margin = std::min(out.min_margin, margin[i]);
        if (out.guard.empty() && !guard[i].empty())
            out.guard = guard[i];
    }
    return out;
}

double residual_F_fd(const SolutionState& state, double beta, double u, double h)
{
    const double mu = state.params.mu;
    auto at = [&](double b, double uu) { return assemble_residual(local_fields(state, b, uu), mu); };
    const PointResidual c = at(beta, u);
    const PointResidual bp = at(beta + h, u), bm = at(beta - h, u);
    const PointResidual up = at(beta, u + h), um = at(beta, u - h);
    const double dbeta_gU = (bp.gU - bm.gU) / (2.0 * h);
    const double du_gU = (up.gU - um.gU) / (2.0 * h);
    const double du_gu = (up.gu - um.gu) / (2.0 * h);
    const double dU_gU = beta * (du_gU - dbeta_gU) + (2.0 * mu - 1.0) * c.gU;
    return 2.0 * mu * mu * (-dU_gU - du_gu + c.W);
}

std::vector<cplx> harmonic_row(const PhysicalField& f, int k)
{
    const int nb = f.bgrid.size(), M = f.u_points;
    std::vector<cplx> ph(M);
    for (int j = 0; j < M; ++j)
        ph[j] = std::polar(1.0 / M, -two_pi * k * j / M);
    std::vector<cplx> row(nb);
    for (int i = 0; i < nb; ++i) {
        cplx s = 0.0;
        for (int j = 0; j < M; ++j)
            s += f.at(i, j) * ph[j];
        row[i] = s;
    }
    return row;
}

namespace {

double eval_T(const SolutionState& state, double beta, double u)
{
    const double mu = state.params.mu;
    double T = -1.0;
    for (const auto& b : state.modes.bundles) {
        const cplx v = -eval_at_beta(b.Pu, beta) - 2.0 * mu * eval_at_beta(b.u, beta);
        T += (b.n == 0 ? 1.0 : 2.0) * (v * std::polar(1.0, b.n * u)).real();
    }
    return T;
}

} // namespace

CoordinateResult invert_coordinates(const SolutionState& state, std::array<double, 2> x, double t,
                                    double tol_r)
{
    const double rx = std::hypot(x[0], x[1]);
    const double te = state.strength * t;
    if (!(rx > 0.0) || !(te > 0.0))
        throw Error(ErrorKind::config, "invert_coordinates requires x != 0 and strength * t > 0");
    const double mu = state.params.mu;
    double vt = std::atan2(x[1], x[0]);
    if (vt < 0.0)
        vt += two_pi;
    auto log_r = [&](double phi) {
        const double beta = vt - phi;
        const double T = eval_T(state, beta, phi);
        if (!(T < 0.0))
            throw Error(ErrorKind::guard_violation, "invert_coordinates: -dt_beta psi > 0 fails");
        return mu * std::log(te / beta) + std::log(r_check_of(T, mu));
    };
    const double target = std::log(rx);
    double lo = vt - state.bgrid.b_max, hi = vt - state.bgrid.h;
    const double f_lo = log_r(lo) - target, f_hi = log_r(hi) - target;
    if (f_lo > 0.0 || f_hi < 0.0) {
        std::ostringstream msg;
        msg << "radius " << rx << " is outside the range covered by beta in [" << state.bgrid.h << ", "
            << state.bgrid.b_max << "] at t = " << t;
        throw Error(ErrorKind::range, msg.str());
    }
    CoordinateResult res;
    for (res.iterations = 0; res.iterations < 200; ++res.iterations) {
        const double mid = 0.5 * (lo + hi);
        const double f = log_r(mid) - target;
        if (f > 0.0)
            hi = mid;
        else
            lo = mid;
        if (std::abs(std::expm1(f)) * rx < tol_r || hi - lo < 1e-15 * std::max(1.0, std::abs(mid)))
            break;
    }
    const double phi = 0.5 * (lo + hi);
    res.beta = vt - phi;
    res.u = std::fmod(phi, two_pi);
    if (res.u < 0.0)
        res.u += two_pi;
    return res;
}

Streamline trace_streamline(const SolutionState& state, double u0, double beta_lo, double beta_hi,
                            double t, double step)
{
    if (!(beta_lo > 0.0) || beta_hi < beta_lo || !(step > 0.0) || !(t > 0.0))
        throw Error(ErrorKind::config, "trace_streamline requires 0 < beta_lo <= beta_hi, step > 0, t > 0");
    const double te = state.strength * t;
    if (!(te > 0.0))
        throw Error(ErrorKind::config, "trace_streamline requires strength * t > 0");
    const double mu = state.params.mu, s = state.strength;
    const int count = static_cast<int>(std::floor((beta_hi - beta_lo) / step + 1e-9)) + 1;
    const ModeRows rows = mode_rows(state, beta_lo, step, count);

    Streamline sl;
    sl.u0 = u0;
    sl.points.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double beta = beta_lo + i * step;
        const LocalFields lf = fields_from_modes(state, row_mode_fields(rows, i, mu), rows.n, u0);
        if (auto g = guard_failure(lf); !g.empty()) {
            std::ostringstream msg;
            msg << "guard " << g << " fails at beta = " << beta << "; streamline truncated";
            sl.truncated = true;
            sl.warning = msg.str();
            break;
        }
        const double rc = r_check_of(lf.T[0], mu);
        const double oc = std::pow(lf.U[0], -1.0 / (2.0 * mu)) * lf.Omega;
        const double r = std::pow(te / beta, mu) * rc;
        sl.points.push_back({beta,
                             {r * std::cos(beta + u0), r * std::sin(beta + u0)},
                             s * (beta / te) * oc,
                             s * oc * std::pow(rc, 1.0 / mu)});
    }
    return sl;
}

InitialSample sample_initial_vorticity(const SolutionState& state, double beta_min, int u_points)
{
    if (beta_min <= 0.0)
        beta_min = state.bgrid.h;
    if (u_points < 2 * state.params.n_max + 1)
        throw Error(ErrorKind::config, "sample_initial_vorticity: too few u points for n_max");
    const double mu = state.params.mu;
    const double period = two_pi / state.params.N;
    auto coefficients = [&](double beta) {
        const ModeRows rows = mode_rows(state, beta, 1.0, 1);
        const auto mf = row_mode_fields(rows, 0, mu);
        std::vector<double> h(u_points);
        for (int j = 0; j < u_points; ++j) {
            const LocalFields lf = fields_from_modes(state, mf, rows.n, j * period / u_points);
            if (auto g = guard_failure(lf); !g.empty())
                throw Error(ErrorKind::guard_violation, "sample_initial_vorticity: guard " + g + " fails");
            h[j] = state.strength * std::pow(lf.U[0], -1.0 / (2.0 * mu)) * lf.Omega
                   * std::pow(r_check_of(lf.T[0], mu), 1.0 / mu);
        }
        std::vector<cplx> c(state.params.n_max + 1);
        for (int k = 0; k <= state.params.n_max; ++k) {
            cplx s = 0.0;
            for (int j = 0; j < u_points; ++j)
                s += h[j] * std::polar(1.0 / u_points, -two_pi * k * j / u_points);
            c[k] = s;
        }
        return c;
    };
    const auto c1 = coefficients(beta_min);
    const auto c2 = coefficients(2.0 * beta_min);

    InitialSample out;
    out.beta_min = beta_min;
    out.omega0.N = state.params.N;
    out.omega0.base = state.strength * initial_vorticity_base(state.params);
    for (int k = 0; k <= state.params.n_max; ++k) {
        const cplx d = k == 0 ? c1[0] - out.omega0.base : c1[k];
        out.omega0.set(k * state.params.N, d);
        out.sensitivity += (k == 0 ? 1.0 : 2.0) * std::abs(c2[k] - c1[k]);
    }
    return out;
}

} // namespace spiralis
