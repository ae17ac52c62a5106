#include "crofton/error.hpp"
#include "crofton/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

using namespace crofton;

namespace {

struct Common {
    std::string config;
    std::string scenario;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<unsigned> threads;
    std::string out;
    std::string format;
    bool no_timing = false;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "INI experiment config");
    app->add_option("--scenario", c.scenario, "scenario name (overrides the config)");
    app->add_option("--set", c.sets, "scenario parameter or config key, key=value (repeatable)");
    app->add_option("--seed", c.seed, "base seed");
    app->add_option("--samples", c.samples, "number of Monte Carlo samples");
    app->add_option("--threads", c.threads, "worker threads (0 = all cores)");
    app->add_option("--out", c.out, "output path (default: standard output)");
    app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app->add_flag("--no-timing", c.no_timing, "leave wall_time empty so reruns compare byte for byte");
}

cli::ExperimentConfig build(const Common& c) {
    cli::ExperimentConfig cfg = c.config.empty() ? cli::ExperimentConfig{} : cli::load_config(c.config);
    if (!c.scenario.empty()) cli::apply_setting(cfg, "scenario", c.scenario);
    for (const auto& kv : c.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw cli::UsageError("--set expects key=value, got '" + kv + "'");
        cli::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (c.seed) cfg.seed = *c.seed;
    if (c.samples) cfg.n_samples = *c.samples;
    if (c.threads) cfg.threads = *c.threads;
    if (!c.out.empty()) cfg.output = c.out;
    if (!c.format.empty()) cfg.format = c.format;
    if (c.no_timing) cfg.timing = false;
    cli::validate(cfg);
    return cfg;
}

int report(const std::vector<cli::RunRecord>& records) {
    int status = 0;
    for (const auto& r : records) {
        if (r.flagged)
            std::cerr << r.scenario << ": degenerate draws reached " << r.degenerate_events << " of " << r.n_samples
                      << "\n";
        if (!r.within_tolerance()) {
            std::cerr << r.scenario << ": |estimate - prediction| exceeds 4 stderr\n";
            status = 1;
        }
    }
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo integral geometry: Crofton formulas, mixed volumes and average root counts"};
    app.require_subcommand(1);

    Common run_opts;
    auto* run = app.add_subcommand("run", "run one scenario");
    add_common(run, run_opts);

    Common sweep_opts;
    std::string parameter;
    std::vector<std::string> values;
    auto* sweep = app.add_subcommand("sweep", "repeat a scenario over values of one numeric parameter");
    add_common(sweep, sweep_opts);
    sweep->add_option("--param", parameter, "parameter to vary (scenario parameter, n_samples or seed)")->required();
    sweep->add_option("--values", values, "comma-separated values")->required()->delimiter(',');

    auto* list = app.add_subcommand("list-scenarios", "list scenarios and their parameters");
    Common st_opts;
    auto* selftest = app.add_subcommand("selftest", "oracle checks for kappa_d, planar mixed areas and the diagonal identity");
    selftest->add_option("--threads", st_opts.threads, "worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto cfg = build(run_opts);
            const std::vector<cli::RunRecord> records{cli::run(cfg)};
            cli::write_records(cfg, records);
            return report(records);
        }
        if (*sweep) {
            const auto cfg = build(sweep_opts);
            const auto records = cli::sweep(cfg, parameter, values);
            cli::write_records(cfg, records);
            return report(records);
        }
        if (*list) {
            for (const auto& s : cli::scenarios()) {
                std::cout << s.name << "  (default n_samples " << s.default_samples << ")\n    " << s.description << "\n";
                for (const auto& p : s.params)
                    std::cout << "      " << p.name << " = " << (p.default_value.empty() ? "\"\"" : p.default_value)
                              << "    " << p.help << "\n";
            }
            return 0;
        }
        if (*selftest) {
            int status = 0;
            for (const auto& line : cli::selftest(st_opts.threads.value_or(1))) {
                std::cout << (line.pass ? "[PASS] " : "[FAIL] ") << line.name << ": " << line.detail << "\n";
                if (!line.pass) status = 1;
            }
            return status;
        }
    } catch (const cli::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ContractError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
