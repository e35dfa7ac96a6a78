#include "spiralis/diagnostics.hpp"

#include "spiralis/errors.hpp"
#include "spiralis/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spiralis {

Polyline to_polyline(const Streamline& s)
{
    Polyline p;
    p.reserve(s.points.size());
    for (const auto& q : s.points)
        p.push_back(q.x);
    return p;
}

SpiralFit fit_spiral_exponent(const Streamline& s, double beta_lo, double beta_hi)
{
    std::vector<double> lx, ly;
    for (const auto& q : s.points) {
        if (q.beta < beta_lo || q.beta > beta_hi)
            continue;
        lx.push_back(std::log(q.beta + s.u0));
        ly.push_back(std::log(std::hypot(q.x[0], q.x[1])));
    }
    const int m = static_cast<int>(lx.size());
    const double window = std::log((beta_hi + s.u0) / (beta_lo + s.u0));
    if (m < 16 || window < std::log(4.0) - 1e-12 || lx.back() - lx.front() < 0.9 * window) {
        std::ostringstream msg;
        msg << "fit_spiral_exponent: need >= 16 samples in a window with theta ratio >= 4 (have " << m << ")";
        throw Error(ErrorKind::data, msg.str());
    }
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < m; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    SpiralFit f;
    f.exponent = sxy / sxx;
    f.beta_lo = beta_lo;
    f.beta_hi = beta_hi;
    f.samples = m;
    double ss = 0.0;
    for (int i = 0; i < m; ++i) {
        const double e = ly[i] - (my + f.exponent * (lx[i] - mx));
        ss += e * e;
    }
    f.residual = std::sqrt(ss / m);
    return f;
}

namespace {

struct Segment {
    int line, idx;
    Point a, b;
    double xmin, xmax, ymin, ymax;
};

double cross(Point o, Point a, Point b) { return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]); }

double point_segment_distance(Point p, Point a, Point b)
{
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    const double l2 = dx * dx + dy * dy;
    double t = l2 > 0.0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p[0] - a[0] - t * dx, p[1] - a[1] - t * dy);
}

// Returns true and the meeting point when the segments cross or come closer than tol.
bool segments_meet(const Segment& s, const Segment& t, double tol, Point& where)
{
    const double d1 = cross(s.a, s.b, t.a), d2 = cross(s.a, s.b, t.b);
    const double d3 = cross(t.a, t.b, s.a), d4 = cross(t.a, t.b, s.b);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
        const double w = d1 / (d1 - d2);
        where = {t.a[0] + w * (t.b[0] - t.a[0]), t.a[1] + w * (t.b[1] - t.a[1])};
        return true;
    }
    const std::array<std::pair<Point, const Segment*>, 4> probes{
        {{s.a, &t}, {s.b, &t}, {t.a, &s}, {t.b, &s}}};
    for (const auto& [p, seg] : probes)
        if (point_segment_distance(p, seg->a, seg->b) < tol) {
            where = p;
            return true;
        }
    return false;
}

} // namespace

IntersectionReport detect_intersections(const std::vector<Polyline>& lines, double tol_x)
{
    std::vector<Segment> segs;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (int l = 0; l < static_cast<int>(lines.size()); ++l) {
        const auto& pl = lines[l];
        for (const auto& p : pl) {
            xmin = std::min(xmin, p[0]);
            xmax = std::max(xmax, p[0]);
            ymin = std::min(ymin, p[1]);
            ymax = std::max(ymax, p[1]);
        }
        for (int i = 0; i + 1 < static_cast<int>(pl.size()); ++i) {
            const Point a = pl[i], b = pl[i + 1];
            segs.push_back({l, i, a, b, std::min(a[0], b[0]), std::max(a[0], b[0]), std::min(a[1], b[1]),
                            std::max(a[1], b[1])});
        }
    }
    IntersectionReport rep;
    rep.segments = static_cast<int>(segs.size());
    if (segs.empty())
        return rep;
    const double diameter = std::hypot(xmax - xmin, ymax - ymin);
    rep.tol = tol_x > 0.0 ? tol_x : 1e-9 * diameter;
    const double tol = rep.tol;

    // Sweep over x: segments sorted by xmin, each checked against later ones that overlap in x.
    std::sort(segs.begin(), segs.end(), [](const Segment& s, const Segment& t) {
        return std::tie(s.xmin, s.line, s.idx) < std::tie(t.xmin, t.line, t.idx);
    });
    const int ns = static_cast<int>(segs.size());
    std::vector<std::vector<Intersection>> found(ns);
    parallel_for(ns, [&](int i) {
        const Segment& s = segs[i];
        for (int j = i + 1; j < ns && segs[j].xmin <= s.xmax + tol; ++j) {
            const Segment& t = segs[j];
            if (t.ymin > s.ymax + tol || t.ymax < s.ymin - tol)
                continue;
            if (s.line == t.line && std::abs(s.idx - t.idx) <= 1)
                continue;
            Point w;
            if (segments_meet(s, t, tol, w)) {
                const bool swap = std::tie(t.line, t.idx) < std::tie(s.line, s.idx);
                const Segment& first = swap ? t : s;
                const Segment& second = swap ? s : t;
                found[i].push_back({first.line, first.idx, second.line, second.idx, w});
            }
        }
    });
    for (auto& f : found)
        rep.hits.insert(rep.hits.end(), f.begin(), f.end());
    std::sort(rep.hits.begin(), rep.hits.end(), [](const Intersection& a, const Intersection& b) {
        return std::tie(a.line_a, a.seg_a, a.line_b, a.seg_b) < std::tie(b.line_a, b.seg_a, b.line_b, b.seg_b);
    });
    return rep;
}

std::vector<StratificationPoint> stratification_ratio(const SolutionState& state, double theta,
                                                      const std::vector<double>& betas, int samples)
{
    if (samples < 64)
        throw Error(ErrorKind::config, "stratification_ratio: at least 64 samples per segment");
    const double mu = state.params.mu;
    const double two_pi = 2.0 * std::numbers::pi;
    const int nb = static_cast<int>(betas.size());
    std::vector<StratificationPoint> pts(nb);
    std::vector<char> ok(nb, 0);
    parallel_for(nb, [&](int b) {
        const double beta = betas[b];
        if (beta - two_pi < state.bgrid.h || beta > state.bgrid.b_max)
            return;
        double lo = INFINITY, hi = -INFINITY, sup = 0.0;
        for (int j = 0; j < samples; ++j) {
            const double phi = theta - beta + two_pi * j / samples;
            const LocalFields lf = local_fields(state, theta - phi, phi);
            if (!guard_failure(lf).empty())
                return;
            const double h = state.strength * std::pow(lf.U[0], -1.0 / (2.0 * mu)) * lf.Omega
                             * std::pow(-lf.T[0] / mu, 1.0 / (2.0 * mu));
            lo = std::min(lo, h);
            hi = std::max(hi, h);
            sup = std::max(sup, std::abs(h));
        }
        pts[b] = {beta, sup > 0.0 ? (hi - lo) / sup : 0.0};
        ok[b] = 1;
    });
    std::vector<StratificationPoint> out;
    for (int b = 0; b < nb && ok[b]; ++b)
        out.push_back(pts[b]);
    return out;
}

DecayReport decay_report(const FlowParams& params, const std::vector<int>& n_list, const PGridPtr& grid,
                         const NeumannControls& controls)
{
    DecayReport rep;
    const int m = static_cast<int>(n_list.size());
    rep.rows.resize(m);
    for (int n : n_list)
        if (auto g = guard_invertibility(params, n); !g.ok)
            throw Error(ErrorKind::guard_violation, g.message);
    const std::array<OpTag, 5> ops{OpTag::L_inv, OpTag::PL_inv, OpTag::QL_inv, OpTag::QQL_inv, OpTag::QQPL_inv};
    std::vector<double> vals(static_cast<size_t>(m) * ops.size());
    parallel_for(m * static_cast<int>(ops.size()), [&](int idx) {
        const int i = idx / static_cast<int>(ops.size()), o = idx % static_cast<int>(ops.size());
        const int n = n_list[i];
        const double bracket = std::sqrt(1.0 + double(n) * n);
        const double weight = o <= 1 ? bracket * bracket : o == 2 ? bracket : 1.0;
        vals[idx] = weight * estimate_norm(ops[o], params, n, default_probes(grid, n), controls);
    });
    for (int i = 0; i < m; ++i) {
        const double* v = &vals[static_cast<size_t>(i) * ops.size()];
        rep.rows[i] = {n_list[i], v[0], v[1], v[2], v[3], v[4]};
    }
    for (size_t o = 0; o < ops.size() && m > 0; ++o) {
        const double first = vals[o];
        double mx = first;
        for (int i = 0; i < m; ++i)
            mx = std::max(mx, vals[static_cast<size_t>(i) * ops.size() + o]);
        rep.growth[o] = first > 0.0 ? mx / first - 1.0 : 0.0;
        rep.growing[o] = rep.growth[o] > 0.2;
    }
    return rep;
}

} // namespace spiralis
