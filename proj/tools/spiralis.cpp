#include "spiralis/diagnostics.hpp"
#include "spiralis/errors.hpp"
#include "spiralis/io.hpp"
#include "spiralis/newton.hpp"
#include "spiralis/parallel.hpp"
#include "spiralis/verify.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

using namespace spiralis;

namespace {

struct Options {
    std::string config_path;
    std::optional<double> mu;
    std::optional<int> n_fold;
    std::string omega;
    std::string out;
    unsigned threads = 0;
    std::string format;
    std::string state_path;
    std::string target;
    double t = 0.0;
    int decay_k = 8;
    int field_beta = 64, field_u = 32;
};

struct Context {
    RunConfig cfg;
    json header;
    PGridPtr pgrid;
    BetaGrid bgrid;
};

Context make_context(const Options& o)
{
    Context c;
    json doc = o.config_path.empty() ? json::object() : read_json_file(o.config_path);
    c.cfg = parse_config(doc);
    if (o.mu)
        c.cfg.mu = *o.mu;
    if (o.n_fold) {
        c.cfg.N = *o.n_fold;
        c.cfg.N_auto = false;
    }
    if (!o.omega.empty())
        c.cfg.omega = parse_series_arg(o.omega);
    if (!o.out.empty())
        c.cfg.out = o.out;
    if (!o.format.empty())
        c.cfg.formats = {o.format};
    if (o.t > 0.0)
        c.cfg.trace.t = o.t;
    if (!(c.cfg.mu > 0.5))
        throw Error(ErrorKind::config, "mu must exceed 1/2");
    c.pgrid = make_pgrid(c.cfg.grid.p_max, c.cfg.grid.h_p);
    c.bgrid = make_beta_grid(c.cfg.grid.b_max, c.cfg.grid.h_beta, c.cfg.grid.taper);
    if (c.cfg.N_auto) {
        const auto rec = recommend_N(c.cfg.mu, c.cfg.n_max, c.cfg.N_cap, c.cfg.contraction_target, c.pgrid);
        if (!rec.ok)
            throw Error(ErrorKind::guard_violation, "recommend-n: no N <= N_cap meets the contraction target");
        c.cfg.N = rec.N;
        c.cfg.N_auto = false;
    }
    c.cfg.omega.N = c.cfg.N;
    c.cfg.omega.base = c.cfg.params().omega_base();
    if (c.cfg.initial_target)
        c.cfg.initial_target->N = c.cfg.N;
    c.header = artifact_header(c.cfg.to_json());
    return c;
}

std::filesystem::path require_out(const Context& c, const char* command)
{
    if (c.cfg.out.empty())
        throw Error(ErrorKind::config, std::string(command) + ": --out DIR is required");
    std::filesystem::path dir(c.cfg.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw Error(ErrorKind::config, "cannot create output directory " + c.cfg.out);
    return dir;
}

bool wants(const Context& c, const std::string& fmt)
{
    return std::find(c.cfg.formats.begin(), c.cfg.formats.end(), fmt) != c.cfg.formats.end();
}

json with_header(const Context& c, json body)
{
    body["header"] = c.header;
    return body;
}

void emit(const Context& c, const json& body, const char* file)
{
    const json doc = with_header(c, body);
    if (!c.cfg.out.empty())
        write_text_file((require_out(c, file) / file).string(), doc.dump(2) + "\n");
    std::cout << doc.dump(2) << "\n";
}

NewtonResult run_newton(const Context& c)
{
    return solve_nonlinear(c.cfg.params(), c.pgrid, c.bgrid, c.cfg.omega, c.cfg.newton);
}

// A loaded state (--state), the background, or a converged Newton solution.
SolutionState obtain_state(const Context& c, const Options& o)
{
    if (!o.state_path.empty())
        return state_from_json(read_json_file(o.state_path));
    auto res = run_newton(c);
    require_converged(res.report);
    res.state.strength = c.cfg.strength;
    return res.state;
}

std::vector<Streamline> trace_family(const Context& c, const SolutionState& s)
{
    const int lines = c.cfg.trace.lines > 0 ? c.cfg.trace.lines : s.params.N;
    std::vector<Streamline> out(lines);
    parallel_for(lines, [&](int j) {
        out[j] = trace_streamline(s, 2.0 * std::numbers::pi * j / lines, c.cfg.trace.beta_lo, c.cfg.trace.beta_hi,
                                  c.cfg.trace.t, c.cfg.trace.step);
    });
    return out;
}

int cmd_verify(const Context& c)
{
    const auto suite = verify_operators(c.cfg.params(), c.pgrid);
    emit(c, suite_to_json(suite), "verify.json");
    return suite.passed() ? 0 : 1;
}

int cmd_recommend(const Context& c)
{
    const auto rec = recommend_N(c.cfg.mu, c.cfg.n_max, c.cfg.N_cap, c.cfg.contraction_target, c.pgrid);
    json scanned = json::array();
    for (const auto& [n, f] : rec.scanned)
        scanned.push_back({{"N", n}, {"factor", f}});
    emit(c, {{"ok", rec.ok}, {"N", rec.N}, {"factor", rec.factor}, {"target", c.cfg.contraction_target},
             {"scanned", scanned}},
         "recommend.json");
    if (!rec.ok)
        throw Error(ErrorKind::guard_violation, "no N <= N_cap meets the contraction target");
    return 0;
}

int cmd_solve_linear(const Context& c)
{
    const auto dir = require_out(c, "solve-linear");
    validate_series(c.cfg.params(), c.cfg.omega, "vorticity data");
    auto s = linear_state(c.cfg.params(), c.pgrid, c.bgrid, c.cfg.omega, c.cfg.newton.neumann);
    s.strength = c.cfg.strength;
    const auto ev = residual_F(s);
    json st = state_to_json(s);
    st["header"] = c.header;
    write_text_file((dir / "state.json").string(), st.dump() + "\n");
    json rep = {{"residual", ev.F.window_sup(s.bgrid.trusted())}, {"residual_full", ev.F.sup_norm()},
                {"min_margin", ev.min_margin}, {"guard", ev.guard}};
    emit(c, rep, "linear_report.json");
    return 0;
}

int cmd_solve(const Context& c)
{
    const auto dir = require_out(c, "solve");
    auto res = run_newton(c);
    res.state.strength = c.cfg.strength;
    json st = state_to_json(res.state);
    st["header"] = c.header;
    write_text_file((dir / "state.json").string(), st.dump() + "\n");
    emit(c, newton_report_to_json(res.report), "convergence.json");
    require_converged(res.report);
    return 0;
}

int cmd_initial_data(const Context& c, const Options& o)
{
    const auto s = obtain_state(c, o);
    const auto smp = sample_initial_vorticity(s);
    emit(c, {{"omega0", series_to_json(smp.omega0)}, {"beta_min", smp.beta_min}, {"sensitivity", smp.sensitivity},
             {"multiplier", std::pow(c.cfg.mu, -1.0 / (2.0 * c.cfg.mu))}},
         "initial.json");
    return 0;
}

int cmd_match_initial(Context& c, const Options& o)
{
    if (!o.target.empty()) {
        c.cfg.initial_target = parse_series_arg(o.target);
        c.cfg.initial_target->N = c.cfg.N;
    }
    if (!c.cfg.initial_target)
        throw Error(ErrorKind::config, "match-initial-data: give the target profile via config \"initial\" or --target");
    AngularSeries target = *c.cfg.initial_target;
    if (target.base == 0.0)
        target.base = initial_vorticity_base(c.cfg.params());
    validate_series(c.cfg.params(), target, "initial profile");
    const auto params = c.cfg.params();
    const InitialMap forward = [&](const VorticityData& om) {
        auto res = solve_nonlinear(params, c.pgrid, c.bgrid, om, c.cfg.newton);
        require_converged(res.report);
        return sample_initial_vorticity(res.state).omega0;
    };
    const auto rep = invert_initial_map(params, target, forward);
    emit(c, {{"omega", series_to_json(rep.omega)}, {"iterations", rep.iterations}, {"mismatch", rep.mismatch},
             {"history", rep.history}},
         "match.json");
    return 0;
}

int cmd_trace(const Context& c, const Options& o)
{
    const auto dir = require_out(c, "trace");
    const auto s = obtain_state(c, o);
    const auto lines = trace_family(c, s);
    const bool all = c.cfg.formats.size() == 1 && c.cfg.formats[0] == "json";  // default: csv + svg
    if (all || wants(c, "csv"))
        write_text_file((dir / "streamlines.csv").string(), streamlines_csv(lines, c.header));
    if (all || wants(c, "svg"))
        write_text_file((dir / "streamlines.svg").string(), streamlines_svg(lines, c.header));
    json summary = json::array();
    for (const auto& l : lines)
        summary.push_back({{"u0", l.u0}, {"points", l.points.size()}, {"truncated", l.truncated}, {"warning", l.warning}});
    emit(c, {{"lines", summary}, {"t", c.cfg.trace.t}}, "trace.json");
    return 0;
}

int cmd_fields(const Context& c, const Options& o)
{
    const auto dir = require_out(c, "fields");
    const auto s = obtain_state(c, o);
    const int nb = std::max(2, o.field_beta), nu = std::max(1, o.field_u);
    const double lo = c.cfg.trace.beta_lo, hi = c.cfg.trace.beta_hi;
    const double period = 2.0 * std::numbers::pi / s.params.N;
    std::vector<FieldSample> samples(static_cast<size_t>(nb) * nu);
    parallel_for(nb * nu, [&](int idx) {
        const int i = idx / nu, j = idx % nu;
        const double beta = lo * std::pow(hi / lo, double(i) / (nb - 1));
        samples[idx] = eval_fields(s, beta, period * j / nu, c.cfg.trace.t);
    });
    if (wants(c, "json")) {
        json rows = json::array();
        for (const auto& f : samples)
            rows.push_back({f.beta, f.u, f.x[0], f.x[1], f.v[0], f.v[1], f.omega, f.h, f.gU, f.gu, f.W, f.F});
        json doc = {{"columns", {"beta", "u", "x", "y", "vx", "vy", "omega", "h", "gU", "gu", "W", "F"}},
                    {"t", c.cfg.trace.t}, {"rows", rows}, {"header", c.header}};
        write_text_file((dir / "fields.json").string(), doc.dump() + "\n");
    }
    if (wants(c, "csv") || !wants(c, "json")) {
        std::ostringstream out;
        out << "# " << c.header.dump() << "\n" << "beta,u,x,y,vx,vy,omega,h,gU,gu,W,F\n" << std::setprecision(12);
        for (const auto& f : samples)
            out << f.beta << ',' << f.u << ',' << f.x[0] << ',' << f.x[1] << ',' << f.v[0] << ',' << f.v[1] << ','
                << f.omega << ',' << f.h << ',' << f.gU << ',' << f.gu << ',' << f.W << ',' << f.F << '\n';
        write_text_file((dir / "fields.csv").string(), out.str());
    }
    std::cout << with_header(c, {{"samples", samples.size()}, {"t", c.cfg.trace.t}}).dump(2) << "\n";
    return 0;
}

int cmd_diagnose(const Context& c, const Options& o)
{
    const auto s = obtain_state(c, o);
    const auto lines = trace_family(c, s);
    json out;
    try {
        const auto fit = fit_spiral_exponent(lines.front());
        out["spiral_fit"] = {{"exponent", fit.exponent}, {"expected", -s.params.mu}, {"beta_lo", fit.beta_lo},
                             {"beta_hi", fit.beta_hi}, {"samples", fit.samples}, {"residual", fit.residual}};
    } catch (const Error& e) {
        out["spiral_fit"] = {{"error", e.what()}};
    }
    std::vector<Polyline> polys;
    for (const auto& l : lines)
        polys.push_back(to_polyline(l));
    const auto inter = detect_intersections(polys);
    json hits = json::array();
    for (const auto& h : inter.hits)
        hits.push_back({{"line_a", h.line_a}, {"seg_a", h.seg_a}, {"line_b", h.line_b}, {"seg_b", h.seg_b},
                        {"x", h.where[0]}, {"y", h.where[1]}});
    out["intersections"] = {{"count", inter.hits.size()}, {"tol", inter.tol}, {"segments", inter.segments},
                            {"hits", hits}};
    std::vector<double> betas;
    for (double b = 2.0 * std::numbers::pi + 2.0 * s.bgrid.h; b <= s.bgrid.trusted(); b += 2.0)
        betas.push_back(b);
    json strat = json::array();
    for (const auto& p : stratification_ratio(s, 0.0, betas))
        strat.push_back({p.beta, p.ratio});
    out["stratification"] = {{"theta", 0.0}, {"series", strat}};
    std::vector<int> nl;
    for (int k = 1; k <= o.decay_k; ++k)
        nl.push_back(k * s.params.N);
    out["decay"] = decay_to_json(decay_report(s.params, nl, s.pgrid));
    emit(c, out, "diagnose.json");
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"spiralis: self-similar algebraic-spiral Euler flows"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config_path, "JSON configuration file");
    app.add_option("--mu", o.mu, "similarity exponent (> 1/2)");
    app.add_option("--n-fold", o.n_fold, "N-fold symmetry");
    app.add_option("--omega", o.omega, "vorticity perturbation: file path or inline JSON [[n,re,im],...]");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--threads", o.threads, "worker threads (default: logical cores)");
    app.add_option("--format", o.format, "json|csv|svg")->check(CLI::IsMember({"json", "csv", "svg"}));

    auto* verify = app.add_subcommand("verify-operators", "operator identity suites");
    auto* recommend = app.add_subcommand("recommend-n", "smallest N meeting the contraction target");
    auto* solve_lin = app.add_subcommand("solve-linear", "linearized solution");
    auto* solve = app.add_subcommand("solve", "nonlinear chord-Newton solution");
    auto* initial = app.add_subcommand("initial-data", "initial vorticity profile of a solution");
    auto* match = app.add_subcommand("match-initial-data", "vorticity data for a given initial profile");
    auto* trace = app.add_subcommand("trace", "pseudo-streamlines (CSV + SVG)");
    auto* fields = app.add_subcommand("fields", "field samples on a (beta, u) grid");
    auto* diagnose = app.add_subcommand("diagnose", "spiral fit, intersections, stratification, decay");
    for (auto* sc : {initial, trace, fields, diagnose})
        sc->add_option("--state", o.state_path, "state.json from solve or solve-linear");
    for (auto* sc : {trace, fields})
        sc->add_option("--t", o.t, "physical time (> 0)");
    match->add_option("--target", o.target, "initial profile: file path or inline JSON");
    fields->add_option("--beta-samples", o.field_beta, "beta samples (log-spaced)");
    fields->add_option("--u-samples", o.field_u, "u samples per period");
    diagnose->add_option("--decay-k", o.decay_k, "decay report over n = N k, k = 1..K");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (o.threads > 0)
            set_thread_count(o.threads);
        Context c = make_context(o);
        if (verify->parsed()) return cmd_verify(c);
        if (recommend->parsed()) return cmd_recommend(c);
        if (solve_lin->parsed()) return cmd_solve_linear(c);
        if (solve->parsed()) return cmd_solve(c);
        if (initial->parsed()) return cmd_initial_data(c, o);
        if (match->parsed()) return cmd_match_initial(c, o);
        if (trace->parsed()) return cmd_trace(c, o);
        if (fields->parsed()) return cmd_fields(c, o);
        if (diagnose->parsed()) return cmd_diagnose(c, o);
    } catch (const Error& e) {
        std::cerr << error_json(kind_name(e.kind()), e.what(), e.exit_code()).dump() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << error_json("internal", e.what(), 1).dump() << "\n";
        return 1;
    }
    return 0;
}
