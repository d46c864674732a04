#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace eft::cli {

using Json = nlohmann::ordered_json;

inline const std::vector<std::string> kModes = {"qksd-sweep", "qksd-budget", "spe-run",  "spe-bound-curve",
                                                "overlap-analysis", "norms", "compare", "acdf-curve"};

inline const char* kArtifactVersion = "0.1.0";

struct Synthesis {
    std::string kind;  // "exponential" or "explicit"
    std::vector<double> energies;
    double p0 = 0.5;
    double alpha = 0.1;
    std::vector<double> values;
    std::vector<double> weights;
    double shift = 0.0;
    double scale = 1.0;
};

struct ExperimentConfig {
    std::string mode;
    std::optional<std::string> spectrum_path;
    std::optional<Synthesis> synthesis;
    std::vector<int> K;
    std::vector<int> dk;
    std::vector<std::string> policies;
    std::optional<double> target_err;  // Hartree
    int n_trials = 100;
    std::optional<std::uint64_t> seed;
    double p_success = 0.99;
    std::string output_dir = "out";
    unsigned jobs = 1;

    // qksd
    std::optional<std::int64_t> m_total;
    double m_cap = 1e12;
    // spe
    double epsilon = 0.0;
    double flip_margin = 1e-3;
    bool redraw_per_query = false;
    bool amplification_aware = false;
    int spe_runs = 1;
    // spe-bound-curve
    std::vector<double> beta_erf;
    int grid_points = 100000;
    // acdf-curve
    std::optional<double> delta_radians;
    int x_points = 2001;
    // norms
    std::optional<std::string> integrals_path;
    std::optional<std::string> thc_path;
    std::vector<std::string> representations;
    std::optional<int> n_df;
    std::optional<double> bliss_alpha1;
    std::optional<double> bliss_alpha2;

    Json raw;  // effective document, echoed into reports
};

// Schema violations, one message each; empty means valid. Relative paths are
// resolved against base_dir.
std::vector<std::string> validate(const Json& doc, const std::string& base_dir = ".");

// Throws ConfigError listing every violation.
ExperimentConfig parse_config(const Json& doc, const std::string& base_dir = ".");

// Reads a JSON document; ParseError on malformed text, IoError when unreadable.
Json read_config_file(const std::string& path);

struct Overrides {
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
};

// Applies command-line overrides to the document before validation.
Json apply_overrides(Json doc, const Overrides& o);

struct RunResult {
    Json report;
    std::vector<std::string> files;  // written paths, report.json last
};

// Runs the configured mode and writes its files under output_dir. Library
// errors keep their type and gain the failing mode and point as a prefix.
RunResult run(const ExperimentConfig& cfg);

// 0 success, 2 config, 3 numeric or bounded search, 4 parse or I/O.
int exit_code_for(const std::exception& e);

// Writes through a sibling temporary and renames into place.
void write_file_atomic(const std::string& path, const std::string& body);

std::string format_double(double x);

}  // namespace eft::cli
