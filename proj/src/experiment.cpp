#include "crofton/experiment.hpp"

#include "crofton/croftonsim.hpp"
#include "crofton/error.hpp"
#include "crofton/mixvol.hpp"
#include "crofton/simd/kernels.hpp"
#include "crofton/zeros.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

namespace crofton::cli {

namespace {

const std::vector<std::string> top_level_keys = {"scenario",   "n_samples",    "seed",
                                                 "threads",    "curve_grid",   "surface_grid",
                                                 "quadrature_nodes", "output", "format", "timing"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string valid_names() {
    std::string out;
    for (const auto& s : scenarios()) out += "\n  " + s.name;
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || trim(value.substr(pos)) != "" || !std::isfinite(v))
        throw UsageError("'" + key + "' expects a number, got '" + value + "'");
    return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    if (v < 0.0 || v != std::floor(v) || v > 1e18)
        throw UsageError("'" + key + "' expects a non-negative integer, got '" + value + "'");
    return static_cast<std::uint64_t>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw UsageError("'" + key + "' expects true or false, got '" + value + "'");
}

// "a b; c d" -> rows.
Mat parse_matrix(const std::string& key, const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::stringstream all(text);
    std::string row;
    while (std::getline(all, row, ';')) {
        if (trim(row).empty()) continue;
        std::stringstream rs(row);
        std::string tok;
        rows.emplace_back();
        while (rs >> tok) rows.back().push_back(parse_double(key, tok));
    }
    if (rows.empty()) throw UsageError("'" + key + "' is an empty matrix");
    const std::size_t n = rows.size();
    Mat m(static_cast<int>(n), static_cast<int>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) throw UsageError("'" + key + "' must be a square matrix, rows separated by ';'");
        for (std::size_t j = 0; j < n; ++j) m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
    return m;
}

struct Params {
    std::map<std::string, std::string> values;

    const std::string& text(const std::string& k) const { return values.at(k); }
    double num(const std::string& k) const { return parse_double(k, text(k)); }
    int integer(const std::string& k) const {
        const double v = num(k);
        if (v != std::floor(v) || std::fabs(v) > 1e6) throw UsageError("'" + k + "' expects an integer");
        return static_cast<int>(v);
    }
    bool is_auto(const std::string& k) const { return text(k) == "auto"; }
};

struct Context {
    const ExperimentConfig& cfg;
    Params params;
    std::size_t n_samples;

    CountOptions counting() const {
        CountOptions c;
        c.curve_grid = cfg.grids.curve;
        c.surface_grid = cfg.grids.surface;
        return c;
    }
    IntegrationOptions integration() const {
        IntegrationOptions io;
        io.nodes_per_axis = cfg.grids.quadrature;
        io.threads = cfg.threads;
        io.mixed.seed = cfg.seed;
        return io;
    }
    EstimateOptions estimate() const {
        EstimateOptions o;
        o.n_samples = n_samples;
        o.seed = cfg.seed;
        o.threads = cfg.threads;
        o.counting = counting();
        o.integration = integration();
        return o;
    }
    ZerosOptions zeros() const {
        ZerosOptions o;
        o.n_samples = n_samples;
        o.seed = cfg.seed;
        o.threads = cfg.threads;
        o.counting = counting();
        o.integration = integration();
        o.radius_scale = params.values.count("radius_scale") ? params.num("radius_scale") : 1.0;
        return o;
    }
};

void fill(RunRecord& rec, const EstimateReport& r) {
    rec.estimate = r.estimate;
    rec.std_error = r.std_error;
    rec.prediction = r.prediction;
    rec.n_samples = r.n_samples;
    rec.degenerate_events = r.degenerate_events;
    rec.flagged = r.flagged;
    rec.details["mean_count"] = r.mean_count;
    rec.details["prediction_quadrature_error"] = r.prediction_quadrature_error;
    rec.details["counting_failures"] = r.counting_failures;
}

double auto_radius(const Params& p, const std::string& key, const ParamManifold& m, int offset, int size) {
    if (!p.is_auto(key)) return p.num(key);
    return 1.000001 * m.bounding_radius(offset, size);
}

using Runner = std::function<void(const Context&, RunRecord&)>;

void run_euclid_circle(const Context& c, RunRecord& rec) {
    const double r = c.params.num("r");
    Vec center(2);
    center << c.params.num("cx"), c.params.num("cy");
    const ParamManifold m = manifolds::circle(r, center);
    const double radius = c.params.is_auto("R") ? center.norm() + r : c.params.num("R");
    rec.details["R"] = radius;
    fill(rec, estimate_crofton(m, CroftonData::euclid(2, radius), c.estimate()));
}

void run_sphere_great_circle(const Context& c, RunRecord& rec) {
    fill(rec, estimate_crofton(manifolds::great_circle(), CroftonData::sphere(3), c.estimate()));
}

void run_sphere_latitude(const Context& c, RunRecord& rec) {
    fill(rec, estimate_crofton(manifolds::latitude_circle(c.params.num("theta0")), CroftonData::sphere(3),
                               c.estimate()));
}

void product_details(const Context& c, RunRecord& rec, const ParamManifold& m, const CroftonData& data) {
    const ProductPrediction p = predict_product(m, data, c.integration());
    rec.details["ring_route"] = p.ring_route;
    rec.details["mixed_riemannian_route"] = p.mixed_riemannian_route;
    rec.details["theorem_constant"] = p.theorem_constant;
}

void run_product_torus(const Context& c, RunRecord& rec) {
    const ParamManifold m = manifolds::torus_embedded(c.params.num("r1"), c.params.num("r2"));
    const double r1 = auto_radius(c.params, "R1", m, 0, 2), r2 = auto_radius(c.params, "R2", m, 2, 2);
    const CroftonData data = CroftonData::product({CroftonData::euclid(2, r1), CroftonData::euclid(2, r2)});
    fill(rec, estimate_crofton(m, data, c.estimate()));
    product_details(c, rec, m, data);
}

void run_sphere_product(const Context& c, RunRecord& rec) {
    const ParamManifold m =
        manifolds::product_of_circles_on_spheres(c.params.num("theta1"), c.params.num("theta2"));
    const CroftonData data = CroftonData::product({CroftonData::sphere(3), CroftonData::sphere(3)});
    fill(rec, estimate_crofton(m, data, c.estimate()));
    product_details(c, rec, m, data);
}

void run_product_graph(const Context& c, RunRecord& rec) {
    const ParamManifold m = manifolds::graph_surface(
        {c.params.num("s0_lo"), c.params.num("s0_hi")}, {c.params.num("s1_lo"), c.params.num("s1_hi")},
        Polynomial::parse(2, c.params.text("p1")), Polynomial::parse(2, c.params.text("p2")));
    const double r1 = auto_radius(c.params, "R1", m, 0, 2), r2 = auto_radius(c.params, "R2", m, 2, 2);
    rec.details["R1"] = r1;
    rec.details["R2"] = r2;
    const CroftonData data = CroftonData::product({CroftonData::euclid(2, r1), CroftonData::euclid(2, r2)});
    fill(rec, estimate_crofton(m, data, c.estimate()));
    product_details(c, rec, m, data);
}

void run_mixed_volume_check(const Context& c, RunRecord& rec) {
    const int m = c.params.integer("m");
    if (m < 1 || m > 3) throw UsageError("mixed_volume_check: m must be 1, 2 or 3");
    std::vector<QuadForm> qs;
    for (int i = 1; i <= m; ++i) {
        const std::string key = "q" + std::to_string(i);
        const std::string& text = c.params.text(key);
        const Mat q = text.empty() ? Mat(Mat::Identity(m, m)) : parse_matrix(key, text);
        if (q.rows() != m) throw UsageError("mixed_volume_check: " + key + " must be " + std::to_string(m) + "x" +
                                            std::to_string(m));
        qs.emplace_back(q);
    }
    const MixedVolumeResult est = mixed_volume_gauss(qs, c.n_samples, c.cfg.seed, c.cfg.threads);
    MixedVolumeResult ref;
    if (m <= 2) {
        MixedVolumeOptions mo;
        ref = mixed_volume(qs, mo);
    } else {
        OracleOptions oo;
        oo.seed = c.cfg.seed;
        oo.threads = c.cfg.threads;
        ref = mixed_volume_oracle(qs, oo);
    }
    rec.estimate = est.value;
    rec.std_error = std::hypot(est.std_error, ref.std_error);
    rec.prediction = ref.value;
    rec.n_samples = c.n_samples;
    rec.details["estimator_stderr"] = est.std_error;
    rec.details["reference_stderr"] = ref.std_error;
    rec.details["reference_method"] = std::string(method_name(ref.method));
}

void zeros_record(const Context& c, RunRecord& rec, const std::vector<EvalMap>& maps) {
    fill(rec, empirical_zeros(maps, c.zeros()));
}

void run_zeros_fourier(const Context& c, RunRecord& rec) {
    const ParamManifold x = manifolds::circle(1.0);
    zeros_record(c, rec, {build_eval_map(spaces::fourier(c.params.integer("k")), x)});
}

void run_zeros_torus(const Context& c, RunRecord& rec) {
    const ParamManifold x = manifolds::torus_embedded(1.0, 1.0);
    zeros_record(c, rec,
                 {build_eval_map(spaces::fourier_on_axis(c.params.integer("k1"), 0), x),
                  build_eval_map(spaces::fourier_on_axis(c.params.integer("k2"), 1), x)});
}

void run_zeros_sphere_linear(const Context& c, RunRecord& rec) {
    const ParamManifold x = manifolds::sphere2();
    const FunctionSpace v = spaces::linear_coords(x);
    zeros_record(c, rec, {build_eval_map(v, x), build_eval_map(v, x)});
}

ParamManifold interval(double lo, double hi) {
    if (!(hi > lo)) throw UsageError("zeros_polynomial: need lo < hi");
    Chart ch;
    ch.box = {{lo, hi}};
    ch.periodic = {false};
    ch.immersion = [](const Vec& t) { return t; };
    ch.differential = [](const Vec&) { return Mat(Mat::Identity(1, 1)); };
    return ParamManifold("interval", 1, 1, {ch});
}

void run_zeros_polynomial(const Context& c, RunRecord& rec) {
    const ParamManifold x = interval(c.params.num("lo"), c.params.num("hi"));
    std::vector<Polynomial> basis;
    std::stringstream all(c.params.text("basis"));
    std::string item;
    while (std::getline(all, item, '|'))
        if (!trim(item).empty()) basis.push_back(Polynomial::parse(1, item));
    if (basis.empty()) throw UsageError("zeros_polynomial: empty basis");
    const std::string& g = c.params.text("gram");
    const QuadForm gram(g.empty() ? Mat(Mat::Identity(static_cast<int>(basis.size()), static_cast<int>(basis.size())))
                                  : parse_matrix("gram", g));
    zeros_record(c, rec, {build_eval_map(spaces::polynomial(basis, gram), x)});
}

struct Entry {
    ScenarioInfo info;
    Runner runner;
};

const std::vector<Entry>& registry() {
    static const std::vector<Entry> entries = {
        {{"crofton_euclid_circle",
          "Random lines against a circle in R^2; predicts the circumference 2 pi r",
          {{"r", "1", "circle radius"},
           {"cx", "0", "center x"},
           {"cy", "0", "center y"},
           {"R", "auto", "sampling ball radius (auto: |center| + r)"}},
          100000},
         run_euclid_circle},
        {{"crofton_sphere_great_circle",
          "Random great circles against a great circle of S^2; every count is 2",
          {},
          100000},
         run_sphere_great_circle},
        {{"crofton_sphere_latitude",
          "Random great circles against the latitude circle at polar angle theta0; predicts 2 sin(theta0)",
          {{"theta0", "0.52359877559829882", "polar angle"}},
          100000},
         run_sphere_latitude},
        {{"crofton_product_torus",
          "Pairs of random lines against C1 x C2 in R^2 x R^2; predicts (2 pi r1)(2 pi r2)",
          {{"r1", "1", "first radius"},
           {"r2", "0.5", "second radius"},
           {"R1", "1", "first sampling radius (or auto)"},
           {"R2", "1", "second sampling radius (or auto)"}},
          20000},
         run_product_torus},
        {{"crofton_sphere_product",
          "Pairs of great circles against latitude circles on S^2 x S^2; predicts 4 sin(theta1) sin(theta2)",
          {{"theta1", "1.5707963267948966", "first polar angle"},
           {"theta2", "1.0471975511965976", "second polar angle"}},
          20000},
         run_sphere_product},
        {{"crofton_product_graph",
          "Pairs of random lines against the graph (s, p1(s), p2(s)) in R^2 x R^2",
          {{"s0_lo", "-1", "box"},
           {"s0_hi", "1", "box"},
           {"s1_lo", "-1", "box"},
           {"s1_hi", "1", "box"},
           {"p1", "1 1 0; 0.5 0 2", "polynomial table 'c p0 p1; ...'"},
           {"p2", "1 0 1; -0.3 2 0", "polynomial table"},
           {"R1", "auto", "first sampling radius"},
           {"R2", "auto", "second sampling radius"}},
          20000},
         run_product_graph},
        {{"mixed_volume_check",
          "Gaussian-determinant mixed volume against the exact route (m <= 2) or the polynomial-fit oracle (m = 3)",
          {{"m", "2", "number of bodies"},
           {"q1", "4 0; 0 1", "first form, rows separated by ';' (empty: identity)"},
           {"q2", "", "second form (empty: identity)"},
           {"q3", "", "third form (empty: identity)"}},
          100000},
         run_mixed_volume_check},
        {{"zeros_fourier",
          "Roots of a cos kt + b sin kt = c on S^1; predicts 2 pi k",
          {{"k", "1", "frequency"}, {"radius_scale", "1", "sampling radius over max |theta|"}},
          100000},
         run_zeros_fourier},
        {{"zeros_torus",
          "Common zeros on S^1 x S^1 of functions of the two separate angles; predicts 4 pi^2 k1 k2",
          {{"k1", "1", "first frequency"},
           {"k2", "2", "second frequency"},
           {"radius_scale", "1", "sampling radius over max |theta|"}},
          20000},
         run_zeros_torus},
        {{"zeros_sphere_linear",
          "Common zeros on S^2 of two random affine-linear functions; predicts 2 pi^2",
          {{"radius_scale", "1", "sampling radius over max |theta|"}},
          20000},
         run_zeros_sphere_linear},
        {{"zeros_polynomial",
          "Roots on an interval of random functions from a polynomial space",
          {{"basis", "1 0 | 1 1 | 1 2", "polynomials separated by '|', each 'c p; c p'"},
           {"gram", "", "Gram matrix (empty: identity)"},
           {"lo", "-1", "interval start"},
           {"hi", "1", "interval end"},
           {"radius_scale", "1", "sampling radius over max |theta|"}},
          100000},
         run_zeros_polynomial},
    };
    return entries;
}

const Entry& find_entry(const std::string& name) {
    for (const auto& e : registry())
        if (e.info.name == name) return e;
    throw UsageError("unknown scenario '" + name + "'; valid scenarios:" + valid_names());
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace

const std::vector<ScenarioInfo>& scenarios() {
    static const std::vector<ScenarioInfo> infos = [] {
        std::vector<ScenarioInfo> v;
        for (const auto& e : registry()) v.push_back(e.info);
        return v;
    }();
    return infos;
}

const ScenarioInfo& find_scenario(const std::string& name) {
    for (const auto& s : scenarios())
        if (s.name == name) return s;
    throw UsageError("unknown scenario '" + name + "'; valid scenarios:" + valid_names());
}

void apply_setting(ExperimentConfig& cfg, const std::string& key_in, const std::string& value_in) {
    const std::string key = trim(key_in), value = trim(value_in);
    if (key == "scenario") {
        find_scenario(value);
        cfg.scenario = value;
    } else if (key == "n_samples") {
        cfg.n_samples = parse_count(key, value);
    } else if (key == "seed") {
        cfg.seed = parse_count(key, value);
    } else if (key == "threads") {
        cfg.threads = static_cast<unsigned>(parse_count(key, value));
    } else if (key == "curve_grid") {
        cfg.grids.curve = parse_count(key, value);
    } else if (key == "surface_grid") {
        cfg.grids.surface = parse_count(key, value);
    } else if (key == "quadrature_nodes") {
        cfg.grids.quadrature = parse_count(key, value);
    } else if (key == "output") {
        cfg.output = value;
    } else if (key == "format") {
        if (value != "csv" && value != "json") throw UsageError("format must be csv or json");
        cfg.format = value;
    } else if (key == "timing") {
        cfg.timing = parse_bool(key, value);
    } else {
        if (cfg.scenario.empty()) throw UsageError("unknown key '" + key + "' (no scenario selected)");
        const ScenarioInfo& s = find_scenario(cfg.scenario);
        const bool known = std::any_of(s.params.begin(), s.params.end(), [&](const auto& p) { return p.name == key; });
        if (!known) throw UsageError("unknown key '" + key + "' for scenario " + cfg.scenario);
        cfg.sections[cfg.scenario][key] = value;
    }
}

ExperimentConfig parse_config(std::istream& in) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    ExperimentConfig cfg;
    // Top-level keys first so sections can be checked against the scenario list.
    for (const auto& [key, node] : tree) {
        if (!node.empty()) continue;
        if (std::find(top_level_keys.begin(), top_level_keys.end(), key) == top_level_keys.end())
            throw UsageError("config: unknown key '" + key + "'");
        apply_setting(cfg, key, node.data());
    }
    for (const auto& [section, node] : tree) {
        if (node.empty()) continue;
        const ScenarioInfo& s = find_scenario(section);
        for (const auto& [key, leaf] : node) {
            const bool known =
                std::any_of(s.params.begin(), s.params.end(), [&](const auto& p) { return p.name == key; });
            if (!known) throw UsageError("config: unknown key '" + key + "' in [" + section + "]");
            cfg.sections[section][key] = trim(leaf.data());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config '" + path + "'");
    return parse_config(in);
}

std::map<std::string, std::string> resolved_params(const ExperimentConfig& cfg) {
    const ScenarioInfo& s = find_scenario(cfg.scenario);
    std::map<std::string, std::string> out;
    for (const auto& p : s.params) out[p.name] = p.default_value;
    if (auto it = cfg.sections.find(cfg.scenario); it != cfg.sections.end())
        for (const auto& [k, v] : it->second) out[k] = v;
    return out;
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.scenario.empty()) throw UsageError("no scenario given; valid scenarios:" + valid_names());
    find_scenario(cfg.scenario);
    for (const auto& [section, kv] : cfg.sections) {
        const ScenarioInfo& s = find_scenario(section);
        for (const auto& [k, v] : kv) {
            (void)v;
            if (std::none_of(s.params.begin(), s.params.end(), [&](const auto& p) { return p.name == k; }))
                throw UsageError("unknown key '" + k + "' for scenario " + section);
        }
    }
    if (cfg.n_samples && *cfg.n_samples < 2) throw UsageError("n_samples must be at least 2");
    if (cfg.format != "csv" && cfg.format != "json") throw UsageError("format must be csv or json");
}

nlohmann::json resolved_config(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["scenario"] = cfg.scenario;
    j["n_samples"] = cfg.n_samples.value_or(find_scenario(cfg.scenario).default_samples);
    j["seed"] = cfg.seed;
    j["curve_grid"] = cfg.grids.curve;
    j["surface_grid"] = cfg.grids.surface;
    j["quadrature_nodes"] = cfg.grids.quadrature;
    j["format"] = cfg.format;
    j["params"] = resolved_params(cfg);
    return j;
}

std::optional<double> RunRecord::abs_err() const {
    if (!prediction) return std::nullopt;
    return std::fabs(estimate - *prediction);
}

std::optional<double> RunRecord::rel_err() const {
    if (!prediction) return std::nullopt;
    const double a = std::fabs(estimate - *prediction);
    if (*prediction == 0.0) return a == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return a / std::fabs(*prediction);
}

bool RunRecord::within_tolerance(double k) const {
    if (!prediction) return true;
    const double slack = 1e-9 * std::max(1.0, std::fabs(*prediction));
    return std::fabs(estimate - *prediction) <= k * std_error + slack;
}

RunRecord run(const ExperimentConfig& cfg) {
    validate(cfg);
    const Entry& e = find_entry(cfg.scenario);
    Context ctx{cfg, Params{resolved_params(cfg)}, cfg.n_samples.value_or(e.info.default_samples)};
    RunRecord rec;
    rec.scenario = cfg.scenario;
    rec.seed = cfg.seed;
    rec.config = resolved_config(cfg);
    rec.details = nlohmann::json::object();
    const auto t0 = std::chrono::steady_clock::now();
    try {
        e.runner(ctx, rec);
    } catch (const std::out_of_range& ex) {
        throw UsageError(std::string("scenario parameter missing: ") + ex.what());
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

std::vector<RunRecord> sweep(const ExperimentConfig& cfg, const std::string& parameter,
                             const std::vector<std::string>& values) {
    validate(cfg);
    if (values.empty()) throw UsageError("sweep: no values");
    std::vector<RunRecord> out;
    for (const auto& v : values) {
        parse_double(parameter, v);
        ExperimentConfig c = cfg;
        apply_setting(c, parameter, v);
        RunRecord r = run(c);
        r.sweep_parameter = parameter;
        r.sweep_value = trim(v);
        out.push_back(std::move(r));
    }
    return out;
}

void write_csv(std::ostream& out, const std::vector<RunRecord>& records, bool timing) {
    const bool swept = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.sweep_parameter; });
    if (swept) out << "parameter,value,";
    out << "scenario,estimate,stderr,prediction,abs_err,rel_err,n_samples,seed,degenerate_events,wall_time\r\n";
    auto opt = [](const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); };
    for (const auto& r : records) {
        if (swept) out << csv_field(r.sweep_parameter.value_or("")) << ',' << csv_field(r.sweep_value.value_or("")) << ',';
        out << csv_field(r.scenario) << ',' << fmt17(r.estimate) << ',' << fmt17(r.std_error) << ','
            << opt(r.prediction) << ',' << opt(r.abs_err()) << ',' << opt(r.rel_err()) << ',' << r.n_samples << ','
            << r.seed << ',' << r.degenerate_events << ',' << (timing ? fmt17(r.wall_time) : std::string())
            << "\r\n";
    }
}

void write_json(std::ostream& out, const std::vector<RunRecord>& records, bool timing) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json j;
        if (r.sweep_parameter) {
            j["parameter"] = *r.sweep_parameter;
            j["value"] = *r.sweep_value;
        }
        j["scenario"] = r.scenario;
        j["estimate"] = r.estimate;
        j["stderr"] = r.std_error;
        j["prediction"] = r.prediction ? nlohmann::json(*r.prediction) : nlohmann::json(nullptr);
        j["abs_err"] = r.abs_err() ? nlohmann::json(*r.abs_err()) : nlohmann::json(nullptr);
        j["rel_err"] = r.rel_err() ? nlohmann::json(*r.rel_err()) : nlohmann::json(nullptr);
        j["n_samples"] = r.n_samples;
        j["seed"] = r.seed;
        j["degenerate_events"] = r.degenerate_events;
        j["flagged"] = r.flagged;
        j["within_tolerance"] = r.within_tolerance();
        j["wall_time"] = timing ? nlohmann::json(r.wall_time) : nlohmann::json(nullptr);
        j["details"] = r.details;
        j["config"] = r.config;
        arr.push_back(std::move(j));
    }
    out << arr.dump(2) << "\n";
}

void write_records(const ExperimentConfig& cfg, const std::vector<RunRecord>& records) {
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!cfg.output.empty()) {
        file.open(cfg.output, std::ios::binary);
        if (!file) throw UsageError("cannot write '" + cfg.output + "'");
        out = &file;
    }
    if (cfg.format == "json")
        write_json(*out, records, cfg.timing);
    else
        write_csv(*out, records, cfg.timing);
}

std::vector<SelftestLine> selftest(unsigned threads) {
    std::vector<SelftestLine> out;
    auto line = [&](std::string name, bool pass, std::string detail) {
        out.push_back({std::move(name), pass, std::move(detail)});
    };
    auto num = [](double v) { return fmt17(v); };

    for (int d : {2, 3, 4}) {
        const OracleEstimate mc = kappa_monte_carlo(d, 200000, 17 + static_cast<std::uint64_t>(d));
        const double z = std::fabs(mc.mean - kappa(d)) / mc.std_error;
        line("kappa_" + std::to_string(d) + " Monte Carlo", z <= 4.0,
             "closed form " + num(kappa(d)) + ", sampled " + num(mc.mean) + " +- " + num(mc.std_error));
    }

    {
        const std::vector<QuadForm> qs{QuadForm::diagonal({4.0, 1.0}), QuadForm::identity(2)};
        const MixedVolumeResult exact = mixed_area_2d(qs[0], qs[1]);
        OracleOptions oo;
        oo.threads = threads;
        const MixedVolumeResult oracle = mixed_volume_oracle(qs, oo);
        const bool pass = std::fabs(exact.value - oracle.value) <= 3.0 * oracle.std_error;
        line("exact2d vs oracle, ellipse(2,1) and disk", pass,
             "exact " + num(exact.value) + ", oracle " + num(oracle.value) + " +- " + num(oracle.std_error));
    }

    {
        Rng rng(2024);
        std::normal_distribution<double> normal;
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            Mat a(3, 3), b(3, 2);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) a(i, j) = normal(rng);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 2; ++j) b(i, j) = normal(rng);
            const QuadForm g(Mat(a * a.transpose()));
            const Frame f(b);
            const std::vector<Ellipsoid> bodies(2, Ellipsoid(g));
            const double lhs = eval_d_m(bodies, f).value;
            const double rhs = unit_ball_volume(2) * gram_volume(g, f);
            worst = std::max(worst, std::fabs(lhs - rhs) / std::max(rhs, 1e-300));
        }
        line("diagonal identity d_2(T_g, T_g) = v_2 vol_g", worst <= 1e-8, "max relative error " + num(worst));
    }

    {
        const auto& scalar = simd::kernels_for(simd::Isa::scalar);
        const auto& active = simd::kernels();
        Rng rng(99);
        std::normal_distribution<double> normal;
        const std::size_t n = 1037;
        std::vector<double> r0(n), r1(n), r2(n), s_ref(n), s_act(n);
        for (std::size_t i = 0; i < n; ++i) r0[i] = normal(rng), r1[i] = normal(rng), r2[i] = normal(rng);
        const double* rows[3] = {r0.data(), r1.data(), r2.data()};
        const double u[3] = {0.3, -1.2, 0.7};
        scalar.affine_residuals(rows, 3, n, u, 0.1, s_ref.data());
        active.affine_residuals(rows, 3, n, u, 0.1, s_act.data());
        const bool same = s_ref == s_act &&
                          scalar.sign_changes(s_ref.data(), n, true) == active.sign_changes(s_act.data(), n, true) &&
                          scalar.min_abs(s_ref.data(), n) == active.min_abs(s_act.data(), n);
        line(std::string("SIMD kernels (") + std::string(simd::isa_name(active.isa)) + ") match scalar", same,
             same ? "bit-identical" : "mismatch");
    }
    return out;
}

}  // namespace crofton::cli
