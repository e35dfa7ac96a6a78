#include "spiralis/io.hpp"

#include "spiralis/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace spiralis {

json series_to_json(const AngularSeries& s)
{
    json coeffs = json::array();
    for (const auto& [n, c] : s.coeffs)
        if (n >= 0)
            coeffs.push_back({n, c.real(), c.imag()});
    return {{"N", s.N}, {"base", s.base}, {"coeffs", coeffs}};
}

AngularSeries series_from_json(const json& j)
{
    if (!j.is_object())
        throw Error(ErrorKind::config, "series: expected an object with \"coeffs\"");
    AngularSeries s;
    s.N = j.value("N", s.N);
    s.base = j.value("base", 0.0);
    if (j.contains("coeffs")) {
        for (const auto& e : j.at("coeffs")) {
            if (!e.is_array() || e.size() < 2 || e.size() > 3)
                throw Error(ErrorKind::config, "series: each coefficient is [n, re] or [n, re, im]");
            const int n = e[0].get<int>();
            const cplx c(e[1].get<double>(), e.size() == 3 ? e[2].get<double>() : 0.0);
            if (n < 0)
                s.set(-n, std::conj(c));
            else
                s.set(n, c);
        }
    }
    return s;
}

json measure_to_json(const SpectralMeasure& m)
{
    json atoms = json::array();
    for (const auto& a : m.atoms())
        atoms.push_back({a.xi, a.w.real(), a.w.imag()});
    json density = json::array();
    for (const auto& c : m.cells())
        density.push_back({c.real(), c.imag()});
    return {{"grid", {{"p_max", m.grid().p_max}, {"h", m.grid().h}}}, {"atoms", atoms}, {"density", density}};
}

SpectralMeasure measure_from_json(const json& j, const PGridPtr& grid)
{
    const auto& g = j.at("grid");
    if (std::abs(g.at("p_max").get<double>() - grid->p_max) > 1e-12 || std::abs(g.at("h").get<double>() - grid->h) > 1e-15)
        throw Error(ErrorKind::data, "measure: grid does not match the state grid");
    SpectralMeasure m(grid);
    for (const auto& a : j.at("atoms"))
        m.add_atom(a[0].get<double>(), cplx(a[1].get<double>(), a[2].get<double>()));
    const auto& d = j.at("density");
    if (static_cast<int>(d.size()) != grid->cells)
        throw Error(ErrorKind::data, "measure: density length does not match the grid");
    for (int i = 0; i < grid->cells; ++i)
        m.cells()[i] = cplx(d[i][0].get<double>(), d[i][1].get<double>());
    return m;
}

namespace {

json bgrid_json(const BetaGrid& b) { return {{"b_max", b.b_max}, {"h", b.h}, {"taper", b.taper}}; }

} // namespace

json state_to_json(const SolutionState& s)
{
    json bundles = json::array();
    for (const auto& b : s.modes.bundles) {
        bundles.push_back({{"n", b.n},
                           {"terms", b.terms},
                           {"u", measure_to_json(b.u)},
                           {"Pu", measure_to_json(b.Pu)},
                           {"Qu", measure_to_json(b.Qu)},
                           {"QQu", measure_to_json(b.QQu)},
                           {"QPu", measure_to_json(b.QPu)},
                           {"QQPu", measure_to_json(b.QQPu)},
                           {"Ru", measure_to_json(b.Ru)}});
    }
    return {{"params", {{"mu", s.params.mu}, {"N", s.params.N}, {"n_max", s.params.n_max}}},
            {"pgrid", {{"p_max", s.pgrid->p_max}, {"h", s.pgrid->h}}},
            {"bgrid", bgrid_json(s.bgrid)},
            {"omega", series_to_json(s.omega)},
            {"strength", s.strength},
            {"increments", s.increments},
            {"u_points", s.u_points},
            {"modes", bundles}};
}

SolutionState state_from_json(const json& j)
{
    try {
        const auto& p = j.at("params");
        const FlowParams params{p.at("mu").get<double>(), p.at("N").get<int>(), p.at("n_max").get<int>()};
        const auto pgrid = make_pgrid(j.at("pgrid").at("p_max").get<double>(), j.at("pgrid").at("h").get<double>());
        const auto& bj = j.at("bgrid");
        const auto bgrid = make_beta_grid(bj.at("b_max").get<double>(), bj.at("h").get<double>(),
                                          bj.at("taper").get<double>());
        SolutionState s = background_state(params, pgrid, bgrid);
        s.omega = series_from_json(j.at("omega"));
        validate_series(params, s.omega, "state vorticity");
        s.strength = j.value("strength", 1.0);
        s.increments = j.value("increments", 0);
        s.u_points = j.value("u_points", s.u_points);
        const auto& modes = j.at("modes");
        if (static_cast<int>(modes.size()) != params.n_max + 1)
            throw Error(ErrorKind::data, "state: expected n_max + 1 mode bundles");
        for (int k = 0; k <= params.n_max; ++k) {
            const auto& mj = modes[k];
            ModeBundle b(pgrid, mj.at("n").get<int>());
            if (b.n != k * params.N)
                throw Error(ErrorKind::data, "state: bundle order does not match n = kN");
            b.terms = mj.value("terms", 0);
            b.u = measure_from_json(mj.at("u"), pgrid);
            b.Pu = measure_from_json(mj.at("Pu"), pgrid);
            b.Qu = measure_from_json(mj.at("Qu"), pgrid);
            b.QQu = measure_from_json(mj.at("QQu"), pgrid);
            b.QPu = measure_from_json(mj.at("QPu"), pgrid);
            b.QQPu = measure_from_json(mj.at("QQPu"), pgrid);
            b.Ru = measure_from_json(mj.at("Ru"), pgrid);
            s.modes.bundles[k] = std::move(b);
        }
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::data, std::string("state: malformed document: ") + e.what());
    }
}

json newton_report_to_json(const NewtonReport& r)
{
    json hist = json::array();
    for (const auto& h : r.history)
        hist.push_back({{"iteration", h.iteration}, {"residual", h.residual}, {"lambda", h.lambda},
                        {"min_margin", h.min_margin}});
    return {{"status", status_name(r.status)},
            {"message", r.message},
            {"tol", r.tol},
            {"iterations", r.iterations},
            {"initial_residual", r.initial_residual},
            {"final_residual", r.final_residual},
            {"truncation", r.truncation},
            {"history", hist}};
}

json suite_to_json(const CheckSuite& s)
{
    json checks = json::array();
    for (const auto& c : s.checks)
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"tol", c.tol}, {"detail", c.detail}});
    return {{"passed", s.passed()}, {"checks", checks}};
}

json decay_to_json(const DecayReport& r)
{
    json rows = json::array();
    for (const auto& d : r.rows)
        rows.push_back({{"n", d.n}, {"L", d.L}, {"PL", d.PL}, {"QL", d.QL}, {"QQL", d.QQL}, {"QQPL", d.QQPL}});
    const char* names[] = {"L", "PL", "QL", "QQL", "QQPL"};
    json growth = json::object(), flags = json::object();
    for (int o = 0; o < 5; ++o) {
        growth[names[o]] = r.growth[o];
        flags[names[o]] = r.growing[o];
    }
    return {{"rows", rows}, {"growth", growth}, {"growing", flags}};
}

std::string config_hash(const json& config)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

json artifact_header(const json& config)
{
    return {{"software", "spiralis"}, {"version", software_version}, {"config_hash", config_hash(config)}};
}

json RunConfig::to_json() const
{
    json nc = {{"tol", newton.tol_residual},     {"iter_max", newton.iter_max}, {"damping", newton.damping},
               {"backtrack", newton.backtrack}, {"smallness", newton.smallness}};
    json j = {{"mu", mu},
              {"N", N_auto ? json("auto") : json(N)},
              {"N_cap", N_cap},
              {"contraction_target", contraction_target},
              {"n_max", n_max},
              {"omega", series_to_json(omega)},
              {"strength", strength},
              {"grid",
               {{"p_max", grid.p_max}, {"h_p", grid.h_p}, {"b_max", grid.b_max}, {"h_beta", grid.h_beta},
                {"taper", grid.taper}}},
              {"newton", nc},
              {"trace",
               {{"t", trace.t}, {"beta_lo", trace.beta_lo}, {"beta_hi", trace.beta_hi}, {"step", trace.step},
                {"lines", trace.lines}}}};
    if (initial_target)
        j["initial"] = series_to_json(*initial_target);
    return j;
}

namespace {

template <class T>
void take(const json& j, const char* key, T& dst)
{
    if (!j.contains(key))
        return;
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::config, std::string("config: bad value for \"") + key + "\"");
    }
}

AngularSeries series_value(const json& j)
{
    if (j.is_string())
        return parse_series_arg(j.get<std::string>());
    return series_from_json(j);
}

} // namespace

RunConfig parse_config(const json& j)
{
    if (!j.is_object())
        throw Error(ErrorKind::config, "config: expected a JSON object");
    RunConfig c;
    take(j, "mu", c.mu);
    if (j.contains("N")) {
        if (j["N"].is_string()) {
            if (j["N"].get<std::string>() != "auto")
                throw Error(ErrorKind::config, "config: N must be an integer or \"auto\"");
            c.N_auto = true;
        } else {
            take(j, "N", c.N);
        }
    }
    take(j, "N_cap", c.N_cap);
    take(j, "contraction_target", c.contraction_target);
    take(j, "n_max", c.n_max);
    take(j, "strength", c.strength);
    take(j, "out", c.out);
    if (j.contains("formats"))
        take(j, "formats", c.formats);
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        take(g, "p_max", c.grid.p_max);
        take(g, "h_p", c.grid.h_p);
        take(g, "b_max", c.grid.b_max);
        take(g, "h_beta", c.grid.h_beta);
        take(g, "taper", c.grid.taper);
    }
    if (j.contains("newton")) {
        const auto& n = j["newton"];
        take(n, "tol", c.newton.tol_residual);
        take(n, "iter_max", c.newton.iter_max);
        take(n, "damping", c.newton.damping);
        take(n, "backtrack", c.newton.backtrack);
        take(n, "smallness", c.newton.smallness);
    }
    if (j.contains("trace")) {
        const auto& t = j["trace"];
        take(t, "t", c.trace.t);
        take(t, "beta_lo", c.trace.beta_lo);
        take(t, "beta_hi", c.trace.beta_hi);
        take(t, "step", c.trace.step);
        take(t, "lines", c.trace.lines);
    }
    if (j.contains("omega"))
        c.omega = series_value(j["omega"]);
    if (j.contains("initial"))
        c.initial_target = series_value(j["initial"]);
    if (!(c.mu > 0.5) || !std::isfinite(c.mu))
        throw Error(ErrorKind::config, "config: mu must exceed 1/2");
    if (!(c.strength > 0.0))
        throw Error(ErrorKind::config, "config: strength must be positive");
    return c;
}

AngularSeries parse_series_arg(const std::string& arg)
{
    const auto first = arg.find_first_not_of(" \t\n");
    if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) {
        json j;
        try {
            j = json::parse(arg);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::config, std::string("--omega: invalid inline JSON: ") + e.what());
        }
        if (j.is_array())
            j = json{{"coeffs", j}};
        return series_from_json(j);
    }
    return series_from_json(read_json_file(arg));
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::config, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, path + ": invalid JSON: " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorKind::config, "cannot write " + path);
    out << text;
    if (!out)
        throw Error(ErrorKind::config, "write failed: " + path);
}

std::string streamlines_csv(const std::vector<Streamline>& lines, const json& header)
{
    std::ostringstream out;
    out << "# " << header.dump() << "\n";
    out << "line,u0,beta,x,y,omega,h\n";
    out << std::setprecision(12);
    for (size_t l = 0; l < lines.size(); ++l)
        for (const auto& p : lines[l].points)
            out << l << ',' << lines[l].u0 << ',' << p.beta << ',' << p.x[0] << ',' << p.x[1] << ',' << p.omega
                << ',' << p.h << '\n';
    return out.str();
}

std::string streamlines_svg(const std::vector<Streamline>& lines, const json& header)
{
    double ext = 0.0;
    for (const auto& l : lines)
        for (const auto& p : l.points)
            ext = std::max({ext, std::abs(p.x[0]), std::abs(p.x[1])});
    if (ext == 0.0)
        ext = 1.0;
    const double size = 800.0, pad = 20.0;
    const double scale = (size / 2.0 - pad) / ext;
    std::ostringstream out;
    out << std::setprecision(7);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
        << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
    std::string meta = header.dump();
    std::replace(meta.begin(), meta.end(), '-', '_');  // "--" is not allowed inside comments
    out << "<!-- " << meta << " -->\n";
    out << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << size - 2 * pad << "\" height=\""
        << size - 2 * pad << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << pad << "\" y1=\"" << size / 2 << "\" x2=\"" << size - pad << "\" y2=\"" << size / 2
        << "\" stroke=\"#bbb\" stroke-width=\"0.5\"/>\n";
    out << "<line x1=\"" << size / 2 << "\" y1=\"" << pad << "\" x2=\"" << size / 2 << "\" y2=\"" << size - pad
        << "\" stroke=\"#bbb\" stroke-width=\"0.5\"/>\n";
    for (size_t l = 0; l < lines.size(); ++l) {
        out << "<polyline fill=\"none\" stroke=\"hsl(" << (360 * l) / std::max<size_t>(lines.size(), 1)
            << ",70%,40%)\" stroke-width=\"0.6\" points=\"";
        for (const auto& p : lines[l].points)
            out << size / 2 + scale * p.x[0] << ',' << size / 2 - scale * p.x[1] << ' ';
        out << "\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

json error_json(const std::string& kind, const std::string& message, int exit_code)
{
    return {{"error", {{"kind", kind}, {"message", message}, {"exit_code", exit_code}}}};
}

} // namespace spiralis
