#pragma once

#include "spiralis/diagnostics.hpp"
#include "spiralis/newton.hpp"
#include "spiralis/verify.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace spiralis {

using json = nlohmann::json;

inline constexpr const char* software_version = "0.1.0";

// {"N", "base", "coeffs": [[n, re, im], ...]} with n >= 0 only (the -n entries are implied).
// An n = 0 entry is a perturbation of the mean and stays separate from base.
json series_to_json(const AngularSeries& s);
AngularSeries series_from_json(const json& j);

// {"grid": {"p_max", "h"}, "atoms": [[xi, re, im]], "density": [[re, im], ...]}
json measure_to_json(const SpectralMeasure& m);
SpectralMeasure measure_from_json(const json& j, const PGridPtr& grid);

json state_to_json(const SolutionState& s);
SolutionState state_from_json(const json& j);

json newton_report_to_json(const NewtonReport& r);
json suite_to_json(const CheckSuite& s);
json decay_to_json(const DecayReport& r);

// 64-bit FNV-1a of the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string config_hash(const json& config);
// {"software", "version", "config_hash"}; every artifact carries it.
json artifact_header(const json& config);

struct GridConfig {
    double p_max = 40.0, h_p = 0.02;
    double b_max = 150.0, h_beta = 0.05, taper = 0.1;
};

struct TraceConfig {
    double t = 1.0;
    double beta_lo = 0.1, beta_hi = 120.0, step = 0.05;
    int lines = 0;  // <= 0: one streamline per symmetry sector, N in total
};

struct RunConfig {
    double mu = 1.0;
    int N = 8;
    bool N_auto = false;
    int N_cap = 64;
    double contraction_target = 0.5;
    int n_max = 2;
    VorticityData omega;               // perturbation coefficients (base is set from mu)
    std::optional<AngularSeries> initial_target;  // for match-initial-data
    double strength = 1.0;
    GridConfig grid;
    NewtonControls newton;
    TraceConfig trace;
    std::string out;
    std::vector<std::string> formats{"json"};

    FlowParams params() const { return {mu, N, n_max}; }
    // The effective configuration (after overrides), used for the artifact hash.
    json to_json() const;
};

// Parses the JSON config document; missing keys keep their defaults.  Coefficient lists may be
// inline ({"coeffs": ...}) or a path to such a document.  Config errors on bad values.
RunConfig parse_config(const json& j);
// Reads an inline JSON value or a file path for --omega.
AngularSeries parse_series_arg(const std::string& arg);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Streamline CSV (header comment lines carry the artifact header).
std::string streamlines_csv(const std::vector<Streamline>& lines, const json& header);
// Polylines plus an axis box, equal aspect; one <polyline> per streamline.
std::string streamlines_svg(const std::vector<Streamline>& lines, const json& header);

json error_json(const std::string& kind, const std::string& message, int exit_code);

} // namespace spiralis
