#include "crofton/experiment.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

using namespace crofton::cli;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto e = s.find("\r\n", pos);
        REQUIRE(e != std::string::npos);
        out.push_back(s.substr(pos, e - pos));
        pos = e + 2;
    }
    return out;
}

}  // namespace

TEST_CASE("scenario registry") {
    CHECK(scenarios().size() == 11);
    CHECK(find_scenario("zeros_torus").name == "zeros_torus");
    try {
        find_scenario("nope");
        FAIL("no throw");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("crofton_euclid_circle") != std::string::npos);
    }
}

TEST_CASE("INI configuration") {
    const ExperimentConfig cfg = parse(
        "scenario = crofton_sphere_latitude\n"
        "n_samples = 500\n"
        "seed = 9\n"
        "threads = 2\n"
        "timing = false\n"
        "format = json\n"
        "[crofton_sphere_latitude]\n"
        "theta0 = 0.25\n");
    CHECK(cfg.scenario == "crofton_sphere_latitude");
    CHECK(cfg.n_samples == 500u);
    CHECK(cfg.seed == 9u);
    CHECK(cfg.threads == 2u);
    CHECK_FALSE(cfg.timing);
    CHECK(cfg.format == "json");
    CHECK(resolved_params(cfg).at("theta0") == "0.25");
    const auto j = resolved_config(cfg);
    CHECK(j["params"]["theta0"] == "0.25");
    CHECK(j["n_samples"] == 500);

    CHECK_THROWS_AS(parse("scenario = crofton_sphere_latitude\nbogus = 1\n"), UsageError);
    CHECK_THROWS_AS(parse("scenario = crofton_sphere_latitude\n[crofton_sphere_latitude]\nr = 1\n"), UsageError);
    CHECK_THROWS_AS(parse("scenario = crofton_sphere_latitude\n[not_a_scenario]\nr = 1\n"), UsageError);
    CHECK_THROWS_AS(parse("seed = minus one\n"), UsageError);
    CHECK_THROWS_AS(parse("timing = maybe\n"), UsageError);
    CHECK_THROWS_AS(parse("format = xml\n"), UsageError);
}

TEST_CASE("settings from the command line") {
    ExperimentConfig cfg;
    CHECK_THROWS_AS(apply_setting(cfg, "r", "2"), UsageError);
    apply_setting(cfg, "scenario", "crofton_euclid_circle");
    apply_setting(cfg, " r ", " 2 ");
    CHECK(resolved_params(cfg).at("r") == "2");
    CHECK(resolved_params(cfg).at("cx") == "0");
    CHECK_THROWS_AS(apply_setting(cfg, "theta0", "1"), UsageError);
    CHECK_THROWS_AS(apply_setting(cfg, "scenario", "nope"), UsageError);
    cfg.n_samples = 1;
    CHECK_THROWS_AS(validate(cfg), UsageError);
}

TEST_CASE("tolerance and errors of a record") {
    RunRecord r;
    r.estimate = 10.0;
    r.std_error = 0.5;
    CHECK(r.within_tolerance());
    CHECK_FALSE(r.abs_err());
    r.prediction = 11.9;
    CHECK(*r.abs_err() == doctest::Approx(1.9));
    CHECK(*r.rel_err() == doctest::Approx(1.9 / 11.9));
    CHECK(r.within_tolerance());
    CHECK_FALSE(r.within_tolerance(3.0));
    r.std_error = 0.0;
    r.prediction = 10.0 * (1.0 + 1e-14);
    CHECK(r.within_tolerance());
    r.prediction = 0.0;
    CHECK(std::isinf(*r.rel_err()));
}

TEST_CASE("CSV and JSON records") {
    ExperimentConfig cfg;
    apply_setting(cfg, "scenario", "crofton_euclid_circle");
    cfg.n_samples = 1000;
    const RunRecord r = run(cfg);
    CHECK(r.estimate == 2.0 * std::numbers::pi);
    CHECK(r.n_samples == 1000);

    std::ostringstream timed, plain;
    write_csv(timed, {r}, true);
    write_csv(plain, {r}, false);
    const auto rows = lines(plain.str());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == "scenario,estimate,stderr,prediction,abs_err,rel_err,n_samples,seed,degenerate_events,wall_time");
    CHECK(rows[1].rfind("crofton_euclid_circle,6.2831853071795862,0,", 0) == 0);
    CHECK(rows[1].back() == ',');
    CHECK(lines(timed.str())[1].back() != ',');

    std::ostringstream js;
    write_json(js, {r}, false);
    const auto j = nlohmann::json::parse(js.str());
    REQUIRE(j.is_array());
    CHECK(j[0]["estimate"] == 2.0 * std::numbers::pi);
    CHECK(j[0]["wall_time"].is_null());
    CHECK(j[0]["within_tolerance"] == true);
    CHECK(j[0]["config"]["params"]["r"] == "1");
}

TEST_CASE("sweeps record the swept value") {
    ExperimentConfig cfg;
    apply_setting(cfg, "scenario", "crofton_euclid_circle");
    cfg.n_samples = 200;
    const auto rs = sweep(cfg, "r", {"0.5", "2"});
    REQUIRE(rs.size() == 2);
    CHECK(rs[1].estimate == doctest::Approx(4.0 * std::numbers::pi));
    CHECK(*rs[0].sweep_value == "0.5");
    std::ostringstream out;
    write_csv(out, rs, false);
    CHECK(lines(out.str())[1].rfind("r,0.5,crofton_euclid_circle,", 0) == 0);
    CHECK_THROWS_AS(sweep(cfg, "r", {"big"}), UsageError);
    CHECK_THROWS_AS(sweep(cfg, "r", {}), UsageError);
}

TEST_CASE("selftest") {
    const auto ls = selftest();
    CHECK(ls.size() >= 5);
    for (const auto& l : ls) {
        CAPTURE(l.name);
        CAPTURE(l.detail);
        CHECK(l.pass);
    }
}
