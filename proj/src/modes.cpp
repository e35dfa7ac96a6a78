#include "spiralis/modes.hpp"

#include "spiralis/errors.hpp"
#include "spiralis/fuchsian.hpp"

#include <cmath>
#include <sstream>

namespace spiralis {

ModeExponents exponents(const FlowParams& params, int n)
{
    return {(2.0 + n) * params.mu, (2.0 - n) * params.mu};
}

GuardReport guard_invertibility(const FlowParams& params, int n)
{
    const auto e = exponents(params, n);
    GuardReport r;
    std::ostringstream msg;
    if (std::abs(e.m_plus - 1.0) < 1e-12) {
        r.ok = false;
        msg << "mode n = " << n << ": m_plus = (2+n)mu = 1, Q + m_plus is not invertible";
    } else if (std::abs(e.m_minus - 1.0) < 1e-12) {
        r.ok = false;
        msg << "mode n = " << n << ": m_minus = (2-n)mu = 1, Q + m_minus is not invertible";
    }
    r.message = msg.str();
    return r;
}

void validate(const FlowParams& params)
{
    if (!std::isfinite(params.mu) || params.mu <= 0.5)
        throw Error(ErrorKind::config, "mu must exceed 1/2");
    if (params.N < 2)
        throw Error(ErrorKind::config, "N-fold symmetry requires N >= 2");
    if (params.n_max < 0)
        throw Error(ErrorKind::config, "n_max must be non-negative");
    for (int k = -params.n_max; k <= params.n_max; ++k) {
        const auto g = guard_invertibility(params, k * params.N);
        if (!g.ok)
            throw Error(ErrorKind::guard_violation, g.message);
    }
}

ModeBundle::ModeBundle(PGridPtr grid, int n_)
    : n(n_), u(grid), Pu(grid), Qu(grid), QQu(grid), QPu(grid), QQPu(grid), Ru(grid)
{
}

SpectralMeasure ModeBundle::Q2u() const
{
    SpectralMeasure r = QQu;
    r.axpy(-1.0, Qu);
    r.axpy(-static_cast<double>(n) * (1.0 - n), u);
    return r;
}

SpectralMeasure ModeBundle::Q2Pu() const
{
    SpectralMeasure r = QQPu;
    r.axpy(-3.0, QPu);
    r.axpy(-(n + 1.0) * (2.0 - n), Pu);
    return r;
}

SpectralMeasure ModeBundle::L_image(double mu) const
{
    const double mp = (2.0 + n) * mu, mm = (2.0 - n) * mu;
    SpectralMeasure r = Q2Pu();
    r.axpy(mp + mm, QPu);
    r.axpy(mp * mm, Pu);
    r.axpy(-(2.0 * mu - 1.0), Qu);
    r.axpy(2.0 * mu - 1.0, Pu);
    return r;
}

ModeBundle ModeBundle::reflected() const
{
    ModeBundle r(u.grid_ptr(), -n);
    r.u = u.reflected_conj();
    r.Pu = Pu.reflected_conj();
    r.Qu = Qu.reflected_conj();
    // The stored second- and third-order images depend on n through their shifts:
    // (Q - n)(Q + 1 + n) = (Q + n)(Q + 1 - n) - 2n and likewise -2n P for QQPu.
    r.QQu = QQu.reflected_conj();
    r.QQu.axpy(-2.0 * n, r.u);
    r.QPu = QPu.reflected_conj();
    r.QQPu = QQPu.reflected_conj();
    r.QQPu.axpy(-2.0 * n, r.Pu);
    r.Ru = Ru.reflected_conj();
    r.terms = terms;
    r.tail_norm = tail_norm;
    r.contraction = contraction;
    r.truncated_mass = truncated_mass;
    return r;
}

ModeBundle& ModeBundle::axpy(cplx a, const ModeBundle& other)
{
    if (other.n != n)
        throw Error(ErrorKind::data, "adding bundles of different modes");
    u.axpy(a, other.u);
    Pu.axpy(a, other.Pu);
    Qu.axpy(a, other.Qu);
    QQu.axpy(a, other.QQu);
    QPu.axpy(a, other.QPu);
    QQPu.axpy(a, other.QQPu);
    Ru.axpy(a, other.Ru);
    truncated_mass += std::abs(a) * other.truncated_mass;
    return *this;
}

double ModeBundle::l1_max() const
{
    double m = 0.0;
    for (const auto* x : {&u, &Pu, &Qu, &QQu, &QPu, &QQPu})
        m = std::max(m, x->l1_norm());
    return m;
}

namespace {

void require_guard(const FlowParams& params, int n)
{
    const auto g = guard_invertibility(params, n);
    if (!g.ok)
        throw Error(ErrorKind::guard_violation, g.message);
}

// All images of R^{-1} m obtainable without differentiation.
struct Chain {
    SpectralMeasure w1;   // K_{n,-m+} m        = (Q + m_-) P R^{-1} m
    SpectralMeasure w2;   // K_{n,-m-} w1       = P R^{-1} m
    SpectralMeasure t3;   // (Q + n + 1)(Q + 2 - n) P R^{-1} m
    SpectralMeasure u;    // K_{0,0} w2         = R^{-1} m
    SpectralMeasure g;    // (Q + n)(Q + 1 - n) R^{-1} m
    SpectralMeasure qu;   // Q R^{-1} m
};

Chain run_chain(const FlowParams& params, int n, const SpectralMeasure& m, ChainStats* stats)
{
    require_guard(params, n);
    const auto e = exponents(params, n);
    InversionStats st;
    const double z = n;
    SpectralMeasure w1 = invert({z, -e.m_plus}, m, &st);
    SpectralMeasure w2 = invert({z, -e.m_minus}, w1, &st);
    SpectralMeasure km = invert({z, -e.m_minus}, m, &st);

    // (Q+a)(Q+b)P R^{-1} = id + (b - m_-) K_- + (a - m_+) K_+ + (a - m_+)(b - m_-) K_- K_+,
    // with (a, b) = (n + 1, 2 - n).
    const double da = (n + 1.0) - e.m_plus;
    const double db = (2.0 - n) - e.m_minus;
    SpectralMeasure t3 = m;
    t3.axpy(db, km);
    t3.axpy(da, w1);
    t3.axpy(da * db, w2);

    SpectralMeasure u = invert({0.0, 0.0}, w2, &st);

    // Q-elimination: (Q+n)(Q+1-n) R^{-1} = K_{0,-2} [(Q+n+1)(Q+2-n) P R^{-1} + 2n(1-n) R^{-1}].
    SpectralMeasure rhs = t3;
    rhs.axpy(2.0 * n * (1.0 - n), u);
    SpectralMeasure g = invert({0.0, -2.0}, rhs, &st);

    // (Q + 1 - n) R^{-1} = K_{n,-n} (Q+n)(Q+1-n) R^{-1};  Q R^{-1} = that + (n - 1) R^{-1}.
    SpectralMeasure qu = invert({z, -static_cast<double>(n)}, g, &st);
    qu.axpy(n - 1.0, u);

    if (stats)
        stats->truncated_mass += st.truncated_mass;
    return {std::move(w1), std::move(w2), std::move(t3), std::move(u), std::move(g), std::move(qu)};
}

} // namespace

SpectralMeasure apply_R_inv(const FlowParams& params, int n, const SpectralMeasure& m, ChainStats* stats)
{
    require_guard(params, n);
    const auto e = exponents(params, n);
    InversionStats st;
    auto r = invert({0.0, 0.0},
                    invert({static_cast<double>(n), -e.m_minus},
                           invert({static_cast<double>(n), -e.m_plus}, m, &st), &st),
                    &st);
    if (stats)
        stats->truncated_mass += st.truncated_mass;
    return r;
}

SpectralMeasure apply_ER_inv(const FlowParams& params, int n, const SpectralMeasure& m, ChainStats* stats)
{
    require_guard(params, n);
    if (n == 0)
        return SpectralMeasure(m.grid_ptr());
    Chain c = run_chain(params, n, m, stats);
    SpectralMeasure r = std::move(c.qu);
    r.axpy(-1.0, c.w2);
    r *= 2.0 * params.mu - 1.0;
    return r;
}

ModeBundle apply_L_inv(const FlowParams& params, int n, const SpectralMeasure& m,
                       const NeumannControls& controls)
{
    require_guard(params, n);
    ChainStats stats;
    const double norm_in = m.l1_norm();
    SpectralMeasure sum = m;
    int terms = 1;
    double tail = 0.0;
    double last_ratio = 0.0;
    if (n != 0 && norm_in > 0.0) {
        SpectralMeasure y = m;
        double prev = norm_in;
        int growing = 0;
        for (int k = 1; k < controls.k_max; ++k) {
            y = apply_ER_inv(params, n, y, &stats);
            const double ny = y.l1_norm();
            last_ratio = prev > 0.0 ? ny / prev : 0.0;
            growing = last_ratio >= 1.0 ? growing + 1 : 0;
            if (growing >= 3) {
                std::ostringstream msg;
                msg << "Neumann series for mode n = " << n
                    << " does not contract (measured ratio " << last_ratio << ")";
                throw Error(ErrorKind::divergence, msg.str());
            }
            sum += y;
            ++terms;
            tail = ny;
            prev = ny;
            if (ny < controls.tol * norm_in)
                break;
        }
    }

    Chain c = run_chain(params, n, sum, &stats);
    const auto e = exponents(params, n);
    ModeBundle b(m.grid_ptr(), n);
    b.u = std::move(c.u);
    b.Pu = c.w2;
    b.Qu = std::move(c.qu);
    b.QQu = std::move(c.g);
    b.QPu = c.w1;
    b.QPu.axpy(-e.m_minus, c.w2);
    b.QQPu = std::move(c.t3);
    b.Ru = std::move(sum);
    b.terms = terms;
    b.tail_norm = tail;
    b.contraction = last_ratio;
    b.truncated_mass = stats.truncated_mass;
    return b;
}

SpectralMeasure apply_L_forward(const FlowParams& params, int n, const SpectralMeasure& m)
{
    const auto e = exponents(params, n);
    const double z = n;
    SpectralMeasure pm = apply_forward({0.0, 0.0}, m);
    SpectralMeasure r = apply_forward({z, -e.m_minus}, apply_forward({z, -e.m_plus}, pm));
    SpectralMeasure qm = apply_forward({z, 0.0}, m);
    r.axpy(-(2.0 * params.mu - 1.0), qm);
    r.axpy(2.0 * params.mu - 1.0, pm);
    return r;
}

const char* op_name(OpTag op)
{
    switch (op) {
    case OpTag::R_inv: return "R_inv";
    case OpTag::ER_inv: return "ER_inv";
    case OpTag::L_inv: return "L_inv";
    case OpTag::PL_inv: return "PL_inv";
    case OpTag::QL_inv: return "QL_inv";
    case OpTag::QQL_inv: return "QQL_inv";
    case OpTag::QQPL_inv: return "QQPL_inv";
    }
    return "unknown";
}

std::vector<SpectralMeasure> default_probes(const PGridPtr& grid, int n)
{
    std::vector<SpectralMeasure> probes;
    probes.push_back(SpectralMeasure::delta(grid, 0.0));
    if (n != 0 && grid->contains(n))
        probes.push_back(SpectralMeasure::delta(grid, n));
    probes.push_back(SpectralMeasure::delta(grid, 0.5 * grid->p_max));
    probes.push_back(SpectralMeasure::delta(grid, -0.5 * grid->p_max));
    for (double c : {-3.0, -0.75, 0.75, 3.0}) {
        probes.push_back(SpectralMeasure::from_density(grid, [c](double p) -> cplx {
            const double t = std::abs(p - c);
            return t < 0.5 ? (1.0 - t / 0.5) / 0.5 : 0.0;
        }));
    }
    return probes;
}

double estimate_norm(OpTag op, const FlowParams& params, int n,
                     const std::vector<SpectralMeasure>& probes, const NeumannControls& controls)
{
    double best = 0.0;
    for (const auto& f : probes) {
        const double nf = f.l1_norm();
        if (nf == 0.0)
            continue;
        double out = 0.0;
        switch (op) {
        case OpTag::R_inv: out = apply_R_inv(params, n, f).l1_norm(); break;
        case OpTag::ER_inv: out = apply_ER_inv(params, n, f).l1_norm(); break;
        default: {
            const ModeBundle b = apply_L_inv(params, n, f, controls);
            const SpectralMeasure* img = &b.u;
            if (op == OpTag::PL_inv) img = &b.Pu;
            if (op == OpTag::QL_inv) img = &b.Qu;
            if (op == OpTag::QQL_inv) img = &b.QQu;
            if (op == OpTag::QQPL_inv) img = &b.QQPu;
            out = img->l1_norm();
        }
        }
        best = std::max(best, out / nf);
    }
    return best;
}

} // namespace spiralis
