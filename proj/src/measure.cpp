#include "spiralis/measure.hpp"

#include "spiralis/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace spiralis {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double sinc(double x)
{
    return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
}

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& fftw_plan_mutex()
{
    static std::mutex m;
    return m;
}

} // namespace

PGridPtr make_pgrid(double p_max, double h)
{
    if (!(p_max > 0.0) || !(h > 0.0) || !std::isfinite(p_max) || !std::isfinite(h))
        throw Error(ErrorKind::config, "p-grid needs p_max > 0 and h_p > 0");
    const double ratio = 2.0 * p_max / h;
    const long cells = std::lround(ratio);
    if (std::abs(ratio - cells) > 1e-8 * ratio || cells % 2 != 0 || cells < 4)
        throw Error(ErrorKind::config, "p-grid: 2*p_max/h_p must be an even integer >= 4");
    auto g = std::make_shared<PGrid>();
    g->p_max = p_max;
    g->h = h;
    g->cells = static_cast<int>(cells);
    return g;
}

BetaGrid make_beta_grid(double b_max, double h, double taper)
{
    if (!(b_max > 0.0) || !(h > 0.0) || !std::isfinite(b_max) || !std::isfinite(h))
        throw Error(ErrorKind::config, "beta grid needs B_max > 0 and h_beta > 0");
    if (!(taper > 0.0 && taper <= 0.25))
        throw Error(ErrorKind::config, "beta grid taper fraction must lie in (0, 0.25]");
    const double ratio = b_max / h;
    const long half = std::lround(ratio);
    if (std::abs(ratio - half) > 1e-8 * ratio || half < 8)
        throw Error(ErrorKind::config, "beta grid: B_max/h_beta must be an integer >= 8");
    BetaGrid bg;
    bg.b_max = b_max;
    bg.h = h;
    bg.taper = taper;
    bg.half = static_cast<int>(half);
    return bg;
}

SpectralMeasure::SpectralMeasure(PGridPtr grid) : grid_(std::move(grid))
{
    if (!grid_)
        throw Error(ErrorKind::config, "measure without grid");
    cells_.assign(grid_->cells, cplx(0.0));
}

SpectralMeasure SpectralMeasure::delta(PGridPtr grid, double xi, cplx w)
{
    SpectralMeasure m(std::move(grid));
    m.add_atom(xi, w);
    return m;
}

SpectralMeasure SpectralMeasure::from_density(PGridPtr grid, const std::function<cplx(double)>& f)
{
    // 4 sub-intervals x 4-point Gauss-Legendre per cell.
    static const double x4[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                 0.8611363115940526};
    static const double w4[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                 0.3478548451374538};
    SpectralMeasure m(std::move(grid));
    const PGrid& g = m.grid();
    const int sub = 4;
    for (int j = 0; j < g.cells; ++j) {
        cplx acc = 0.0;
        const double a = g.edge(j);
        const double hs = g.h / sub;
        for (int s = 0; s < sub; ++s) {
            const double mid = a + (s + 0.5) * hs;
            for (int q = 0; q < 4; ++q)
                acc += w4[q] * f(mid + 0.5 * hs * x4[q]);
        }
        m.cells_[j] = acc / (2.0 * sub);
    }
    return m;
}

void SpectralMeasure::add_atom(double xi, cplx w)
{
    if (!std::isfinite(xi) || !std::isfinite(w.real()) || !std::isfinite(w.imag()))
        throw Error(ErrorKind::data, "non-finite atom");
    if (!grid_->contains(xi))
        throw Error(ErrorKind::data, "atom location outside the p-grid");
    const double tol = 1e-9 * grid_->h;
    for (auto& a : atoms_) {
        if (std::abs(a.xi - xi) <= tol) {
            a.w += w;
            return;
        }
    }
    atoms_.push_back({xi, w});
    std::sort(atoms_.begin(), atoms_.end(), [](const Atom& x, const Atom& y) { return x.xi < y.xi; });
}

cplx SpectralMeasure::atom_at(double xi) const
{
    const double tol = 1e-9 * grid_->h;
    for (const auto& a : atoms_)
        if (std::abs(a.xi - xi) <= tol)
            return a.w;
    return 0.0;
}

SpectralMeasure& SpectralMeasure::axpy(cplx a, const SpectralMeasure& other)
{
    if (other.grid_.get() != grid_.get() && (other.grid_->cells != grid_->cells ||
                                             other.grid_->h != grid_->h))
        throw Error(ErrorKind::config, "measures on different p-grids");
    for (size_t j = 0; j < cells_.size(); ++j)
        cells_[j] += a * other.cells_[j];
    for (const auto& at : other.atoms_)
        add_atom(at.xi, a * at.w);
    return *this;
}

SpectralMeasure& SpectralMeasure::operator+=(const SpectralMeasure& other) { return axpy(1.0, other); }
SpectralMeasure& SpectralMeasure::operator-=(const SpectralMeasure& other) { return axpy(-1.0, other); }

SpectralMeasure& SpectralMeasure::operator*=(cplx a)
{
    for (auto& c : cells_)
        c *= a;
    for (auto& at : atoms_)
        at.w *= a;
    return *this;
}

SpectralMeasure operator+(SpectralMeasure a, const SpectralMeasure& b) { return a += b; }
SpectralMeasure operator-(SpectralMeasure a, const SpectralMeasure& b) { return a -= b; }
SpectralMeasure operator*(cplx a, SpectralMeasure m) { return m *= a; }

SpectralMeasure SpectralMeasure::reflected_conj() const
{
    SpectralMeasure r(grid_);
    const int n = grid_->cells;
    for (int j = 0; j < n; ++j)
        r.cells_[j] = std::conj(cells_[n - 1 - j]);
    for (const auto& at : atoms_)
        r.add_atom(-at.xi, std::conj(at.w));
    return r;
}

double SpectralMeasure::l1_norm() const
{
    double s = 0.0;
    for (const auto& at : atoms_)
        s += std::abs(at.w);
    double d = 0.0;
    for (const auto& c : cells_)
        d += std::abs(c);
    return s + d * grid_->h;
}

cplx SpectralMeasure::total_mass() const
{
    cplx s = 0.0;
    for (const auto& at : atoms_)
        s += at.w;
    cplx d = 0.0;
    for (const auto& c : cells_)
        d += c;
    return s + d * grid_->h;
}

double SpectralMeasure::max_abs_cell() const
{
    double m = 0.0;
    for (const auto& c : cells_)
        m = std::max(m, std::abs(c));
    return m;
}

double SpectralMeasure::hermitian_defect() const
{
    double d = 0.0;
    const int n = grid_->cells;
    for (int j = 0; j < n; ++j)
        d = std::max(d, std::abs(cells_[j] - std::conj(cells_[n - 1 - j])));
    for (const auto& at : atoms_)
        d = std::max(d, std::abs(at.w - std::conj(atom_at(-at.xi))));
    return d;
}

double l1_delta_norm(const SpectralMeasure& m) { return m.l1_norm(); }

WeightRule beta_dbeta_weight() { return {{cplx(0.0, 1.0), 1, 1}}; }

namespace {

cplx weight_value(const WeightRule& q, double p, double beta)
{
    if (q.empty())
        return 1.0;
    cplx v = 0.0;
    for (const auto& t : q)
        v += t.c * std::pow(p, t.p_pow) * std::pow(beta, t.beta_pow);
    return v;
}

} // namespace

cplx eval_at_beta(const SpectralMeasure& m, double beta, const WeightRule& q)
{
    if (!std::isfinite(beta))
        throw Error(ErrorKind::data, "non-finite beta");
    const PGrid& g = m.grid();
    cplx acc = 0.0;
    for (const auto& at : m.atoms())
        acc += at.w * weight_value(q, at.xi, beta) * std::polar(1.0, at.xi * beta);

    // Phase recurrence, re-synchronised every 64 cells to bound rounding drift.
    const auto& c = m.cells();
    const cplx step = std::polar(1.0, g.h * beta);
    cplx dens = 0.0;
    cplx z;
    for (int j = 0; j < g.cells; ++j) {
        if (j % 64 == 0)
            z = std::polar(1.0, g.center(j) * beta);
        if (c[j] != 0.0)
            dens += c[j] * weight_value(q, g.center(j), beta) * z;
        z *= step;
    }
    return acc + dens * g.h / sinc(0.5 * g.h * beta);
}

std::vector<cplx> chirp_sum(const std::vector<cplx>& x, double a, int count)
{
    const int m = static_cast<int>(x.size());
    if (m == 0 || count <= 0)
        return std::vector<cplx>(std::max(count, 0), cplx(0.0));
    int len = 1;
    while (len < m + count - 1)
        len <<= 1;

    auto* y = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * len));
    auto* b = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * len));
    fftw_plan py, pb, pinv;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        py = fftw_plan_dft_1d(len, y, y, FFTW_FORWARD, FFTW_ESTIMATE);
        pb = fftw_plan_dft_1d(len, b, b, FFTW_FORWARD, FFTW_ESTIMATE);
        pinv = fftw_plan_dft_1d(len, y, y, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    auto chirp = [a](long k) { return std::polar(1.0, 0.5 * a * static_cast<double>(k * k)); };
    for (int i = 0; i < len; ++i) {
        y[i][0] = y[i][1] = 0.0;
        b[i][0] = b[i][1] = 0.0;
    }
    for (int j = 0; j < m; ++j) {
        const cplx v = x[j] * chirp(j);
        y[j][0] = v.real();
        y[j][1] = v.imag();
    }
    // Kernel exp(-i a (k-j)^2 / 2) for k-j in [-(m-1), count-1], stored cyclically.
    for (long d = -(m - 1); d <= count - 1; ++d) {
        const cplx v = std::conj(chirp(d));
        const long idx = (d % len + len) % len;
        b[idx][0] = v.real();
        b[idx][1] = v.imag();
    }
    fftw_execute(py);
    fftw_execute(pb);
    for (int i = 0; i < len; ++i) {
        const cplx p = cplx(y[i][0], y[i][1]) * cplx(b[i][0], b[i][1]);
        y[i][0] = p.real();
        y[i][1] = p.imag();
    }
    fftw_execute(pinv);
    std::vector<cplx> out(count);
    for (int k = 0; k < count; ++k)
        out[k] = cplx(y[k][0], y[k][1]) / static_cast<double>(len) * chirp(k);
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(py);
        fftw_destroy_plan(pb);
        fftw_destroy_plan(pinv);
    }
    fftw_free(y);
    fftw_free(b);
    return out;
}

std::vector<cplx> eval_uniform(const SpectralMeasure& m, double beta0, double dbeta, int count)
{
    const PGrid& g = m.grid();
    const double p0 = g.center(0);
    std::vector<cplx> x(g.cells);
    bool any = false;
    for (int j = 0; j < g.cells; ++j) {
        const cplx c = m.cells()[j];
        if (c != 0.0)
            any = true;
        x[j] = c * g.h * std::polar(1.0, j * g.h * beta0);
    }
    std::vector<cplx> out(count, cplx(0.0));
    if (any) {
        out = chirp_sum(x, g.h * dbeta, count);
        for (int k = 0; k < count; ++k) {
            const double beta = beta0 + k * dbeta;
            out[k] *= std::polar(1.0, p0 * beta) / sinc(0.5 * g.h * beta);
        }
    }
    for (const auto& at : m.atoms())
        for (int k = 0; k < count; ++k)
            out[k] += at.w * std::polar(1.0, at.xi * (beta0 + k * dbeta));
    return out;
}

std::vector<cplx> eval_on_grid(const SpectralMeasure& m, const BetaGrid& bg)
{
    return eval_uniform(m, bg.node(0), bg.h, bg.size());
}

SpectralMeasure physical_to_spectral(const std::vector<cplx>& samples, const BetaGrid& bg,
                                     PGridPtr grid)
{
    const int nb = bg.size();
    if (static_cast<int>(samples.size()) != nb)
        throw Error(ErrorKind::data, "physical_to_spectral: sample count does not match the beta grid");
    for (const auto& s : samples)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw Error(ErrorKind::data, "physical_to_spectral: NaN/Inf in samples");

    const double inner = (1.0 - bg.taper) * bg.b_max;
    cplx tail = 0.0;
    int tail_count = 0;
    for (int k = 0; k < nb; ++k) {
        if (std::abs(bg.node(k)) >= inner - 1e-12) {
            tail += samples[k];
            ++tail_count;
        }
    }
    tail /= static_cast<double>(tail_count);

    SpectralMeasure m(grid);
    const PGrid& g = *grid;
    const double p0 = g.center(0);
    const double beta0 = bg.node(0);
    std::vector<cplx> x(nb);
    for (int k = 0; k < nb; ++k) {
        const double beta = bg.node(k);
        const double ab = std::abs(beta);
        double taper = 1.0;
        if (ab > inner)
            taper = 0.5 * (1.0 + std::cos(std::numbers::pi * (ab - inner) / (bg.b_max - inner)));
        const double trap = (k == 0 || k == nb - 1) ? 0.5 : 1.0;
        x[k] = (samples[k] - tail) * (taper * trap * bg.h * sinc(0.5 * g.h * beta)) *
               std::polar(1.0, -p0 * k * bg.h);
    }
    const auto y = chirp_sum(x, -g.h * bg.h, g.cells);
    for (int j = 0; j < g.cells; ++j)
        m.cells()[j] = y[j] * std::polar(1.0, -g.center(j) * beta0) / two_pi;
    if (tail != 0.0)
        m.add_atom(0.0, tail);
    return m;
}

} // namespace spiralis
