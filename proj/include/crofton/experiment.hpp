#pragma once

// Named scenarios, INI configuration, and CSV/JSON run records. Shared by the
// command-line front end and the acceptance suite.
//
// Config layout: top-level keys (scenario, n_samples, seed, threads,
// curve_grid, surface_grid, quadrature_nodes, output, format, timing)
// followed by one optional [section] per scenario holding its parameters.
// Unknown keys and sections are rejected.

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace crofton::cli {

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ParamSpec {
    std::string name;
    std::string default_value;
    std::string help;
};

struct ScenarioInfo {
    std::string name;
    std::string description;
    std::vector<ParamSpec> params;
    std::size_t default_samples;
};

const std::vector<ScenarioInfo>& scenarios();
// Throws UsageError listing the valid names.
const ScenarioInfo& find_scenario(const std::string& name);

struct GridConfig {
    std::size_t curve = 4096;     // counting nodes per curve chart
    std::size_t surface = 128;    // counting cells per surface axis
    std::size_t quadrature = 256; // prediction nodes per parameter axis
};

struct ExperimentConfig {
    std::string scenario;
    // Parameter overrides per scenario section; defaults fill the rest.
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::optional<std::size_t> n_samples;  // scenario default when unset
    std::uint64_t seed = 1;
    unsigned threads = 1;
    GridConfig grids;
    std::string output;  // empty: standard output
    std::string format = "csv";
    bool timing = true;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

// Applies "key=value" to a top-level key or a parameter of the selected scenario.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
// Checks scenario name, section names, parameter names and value syntax.
void validate(const ExperimentConfig& cfg);

// Every parameter of the selected scenario with defaults filled in.
std::map<std::string, std::string> resolved_params(const ExperimentConfig& cfg);
nlohmann::json resolved_config(const ExperimentConfig& cfg);

struct RunRecord {
    std::string scenario;
    double estimate = 0.0;
    double std_error = 0.0;
    std::optional<double> prediction;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::size_t degenerate_events = 0;
    bool flagged = false;
    double wall_time = 0.0;
    nlohmann::json config;
    nlohmann::json details;  // scenario-specific extras (routes, radii, ...)
    std::optional<std::string> sweep_parameter;
    std::optional<std::string> sweep_value;

    std::optional<double> abs_err() const;
    std::optional<double> rel_err() const;
    // |estimate - prediction| <= 4 stderr, with a round-off allowance when stderr = 0.
    bool within_tolerance(double k = 4.0) const;
};

RunRecord run(const ExperimentConfig& cfg);
// One run per value of a numeric parameter (a scenario parameter, n_samples or seed).
std::vector<RunRecord> sweep(const ExperimentConfig& cfg, const std::string& parameter,
                             const std::vector<std::string>& values);

// RFC 4180, '.' decimal separator, 17 significant digits. wall_time is left
// empty when timing is off so that reruns compare byte for byte.
void write_csv(std::ostream& out, const std::vector<RunRecord>& records, bool timing);
void write_json(std::ostream& out, const std::vector<RunRecord>& records, bool timing);
void write_records(const ExperimentConfig& cfg, const std::vector<RunRecord>& records);

struct SelftestLine {
    std::string name;
    bool pass = false;
    std::string detail;
};
std::vector<SelftestLine> selftest(unsigned threads = 1);

}  // namespace crofton::cli
