#include "logitnets/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "logitnets/checks.hpp"
#include "logitnets/constructions.hpp"
#include "logitnets/csv.hpp"
#include "logitnets/erm.hpp"
#include "logitnets/parallel.hpp"

namespace logitnets {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Config Config::parse(std::string_view text) {
    Config c;
    std::size_t lineno = 0, pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++lineno;
        if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
        std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(std::string_view(t).substr(0, eq));
        std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
        if (c.has(key)) throw UsageError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        c.values_[key] = value;
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const std::string& Config::str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("missing config key '" + key + "'");
    return it->second;
}

double Config::num(const std::string& key) const {
    const std::string& v = str(key);
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used == v.size()) return x;
    } catch (const std::exception&) {
    }
    throw UsageError("config key '" + key + "': not a number: " + v);
}

long long Config::integer(const std::string& key) const {
    const std::string& v = str(key);
    try {
        std::size_t used = 0;
        long long x = std::stoll(v, &used);
        if (used == v.size()) return x;
    } catch (const std::exception&) {
    }
    throw UsageError("config key '" + key + "': not an integer: " + v);
}

std::vector<std::string> Config::list(const std::string& key) const {
    std::vector<std::string> out;
    std::string_view v = str(key);
    std::size_t pos = 0;
    while (pos <= v.size()) {
        auto c = v.find(',', pos);
        if (c == std::string_view::npos) c = v.size();
        std::string item = trim(v.substr(pos, c - pos));
        if (item.empty()) throw UsageError("config key '" + key + "': empty list item");
        out.push_back(item);
        pos = c + 1;
    }
    return out;
}

std::string Config::canonical() const {
    std::string s;
    for (const auto& [k, v] : values_) s += k + "=" + v + "\n";
    return s;
}

std::string Manifest::json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["started"] = started;
    j["finished"] = finished;
    j["outputs"] = outputs;
    j["checks"] = checks;
    j["failures"] = failures;
    j["passed"] = passed;
    return j.dump(2) + "\n";
}

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing

struct Globals {
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::string out_dir = "out";
    double grid_scale = 1.0;
    std::string config_path;
};

std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string hex64(unsigned long long h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", h);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

class Run {
public:
    Run(const Globals& g, std::string command, const std::string& hash_input)
        : dir_(g.out_dir) {
        fs::create_directories(dir_);
        m_.command = std::move(command);
        m_.config_hash = hex64(fnv1a(hash_input));
        m_.seed = g.seed;
        m_.started = utc_now();
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    void output(const std::string& name, const std::string& text) {
        write_text(path(name), text);
        m_.outputs.push_back(path(name).string());
    }

    int finish(const std::string& manifest_name, long long checks, long long failures) {
        m_.finished = utc_now();
        m_.checks = checks;
        m_.failures = failures;
        m_.passed = checks > 0 && failures == 0;
        write_text(path(manifest_name), m_.json());
        std::cout << m_.command << ": " << (checks - failures) << "/" << checks << " passed\n";
        return m_.passed ? kExitOk : kExitCheckFailed;
    }

private:
    fs::path dir_;
    Manifest m_;
};

int scaled(int base, double s) { return std::max(2, static_cast<int>(std::ceil(base * s))); }

// ---------------------------------------------------------------------------
// build

struct BuildParams {
    Config c;
    std::set<std::string> allowed;

    double num(const std::string& k, double dflt) {
        allowed.insert(k);
        return c.has(k) ? c.num(k) : dflt;
    }
    int integer(const std::string& k, int dflt) {
        allowed.insert(k);
        return c.has(k) ? static_cast<int>(c.integer(k)) : dflt;
    }
    std::string str(const std::string& k, const std::string& dflt) {
        allowed.insert(k);
        return c.has(k) ? c.str(k) : dflt;
    }
    void reject_unknown(const std::string& kind) const {
        for (const auto& [k, v] : c.values())
            if (!allowed.count(k)) throw UsageError("build " + kind + ": unknown parameter '" + k + "'");
    }
};

ErrorCertificate grid_certificate(const std::string& name, const std::string& params, const ReluNet& net,
                                  const Fn& ref, const Grid& grid, double claimed) {
    ErrorCertificate c;
    c.construction = name;
    c.params = params;
    std::ostringstream dom;
    for (std::size_t a = 0; a < grid.lo.size(); ++a)
        dom << (a ? "x" : "") << "[" << csv_num(grid.lo[a]) << "," << csv_num(grid.hi[a]) << "]";
    c.domain = dom.str();
    c.grid_points = static_cast<long long>(grid.size());
    c.measured_sup_error = grid_sup_error(net, ref, grid, Exec::Parallel);
    c.claimed_bound = claimed;
    c.passed = c.measured_sup_error <= claimed;
    return c;
}

Grid cube(int d, double lo, double hi, int per_axis) {
    Grid g;
    g.lo.assign(d, lo);
    g.hi.assign(d, hi);
    g.per_axis = per_axis;
    return g;
}

ErrorCertificate budget_certificate(const std::string& name, const std::string& params, const ReluNet& net,
                                    const ComplexityBudget& b, int resolution) {
    ErrorCertificate c;
    c.construction = name + " budget";
    c.params = params;
    c.domain = "complexity";
    c.grid_points = 0;
    c.passed = is_member(net, b, resolution);
    c.measured_sup_error = c.passed ? 0.0 : 1.0;
    c.claimed_bound = 0.0;
    return c;
}

Fn holder_test_function(const std::string& name, int d) {
    if (name == "sinprod")
        return [d](std::span<const double> x) {
            double p = 0.1;
            for (int i = 0; i < d; ++i) p *= std::sin(std::numbers::pi * x[i]);
            return p;
        };
    if (name == "quadratic")
        return [d](std::span<const double> x) {
            double s = 0.0;
            for (int i = 0; i < d; ++i) s += x[i] * x[i];
            return 0.1 * s / d;
        };
    throw UsageError("build holder: unknown fn '" + name + "' (sinprod, quadratic)");
}

int cmd_build(const Globals& g, const std::string& kind, const std::vector<std::string>& raw) {
    BuildParams p;
    for (const auto& kv : raw) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("build parameter must be key=value: " + kv);
        if (p.c.has(kv.substr(0, eq))) throw UsageError("duplicate build parameter: " + kv.substr(0, eq));
        p.c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    const double gs = g.grid_scale;
    std::vector<ErrorCertificate> certs;
    std::optional<ReluNet> net;

    if (kind == "scale") {
        int k = p.integer("k", 3);
        p.reject_unknown(kind);
        if (k < 1) throw UsageError("build scale: k must be >= 1");
        net = scale_pos_net(k);
        std::string ps = "k=" + std::to_string(k);
        double f = std::ldexp(1.0, k);
        certs.push_back(grid_certificate("scale", ps, *net,
                                         [f](std::span<const double> x) { return f * std::max(x[0], 0.0); },
                                         cube(1, -1.0, 1.0, scaled(20001, gs)), 0.0));
        certs.push_back(budget_certificate("scale", ps, *net, scale_pos_budget(k), 64));
    } else if (kind == "max") {
        int k = p.integer("k", 4);
        p.reject_unknown(kind);
        if (k < 1 || k > 16) throw UsageError("build max: k must lie in 1..16");
        net = max_net(k);
        std::string ps = "k=" + std::to_string(k);
        int per_axis = std::max(2, static_cast<int>(std::floor(std::pow(1e5 * gs, 1.0 / k))));
        certs.push_back(grid_certificate(
            "max", ps, *net,
            [](std::span<const double> x) {
                double m = 0.0;
                for (double v : x) m = std::max(m, std::abs(v));
                return m;
            },
            cube(k, -1.0, 1.0, per_axis), 1e-12));
        certs.push_back(budget_certificate("max", ps, *net, max_budget(k), k > 10 ? 2 : 3));
    } else if (kind == "mult") {
        double eps = p.num("eps", 0.01);
        p.reject_unknown(kind);
        if (!(eps > 0.0 && eps < 1.0)) throw UsageError("build mult: eps must lie in (0, 1)");
        net = mult_net(eps);
        std::string ps = "eps=" + csv_num(eps);
        certs.push_back(grid_certificate("mult", ps, *net, [](std::span<const double> x) { return x[0] * x[1]; },
                                         cube(2, 0.0, 1.0, scaled(317, gs)), eps));
        // Exact zeros on the coordinate axes.
        Grid axis = cube(1, 0.0, 1.0, scaled(10001, gs));
        double worst = 0.0;
        for (std::size_t i = 0; i < axis.size(); ++i) {
            double t;
            axis.point(i, &t);
            double a[2] = {t, 0.0}, b[2] = {0.0, t};
            worst = std::max({worst, std::abs((*net)(a)), std::abs((*net)(b))});
        }
        ErrorCertificate z;
        z.construction = "mult axes";
        z.params = ps;
        z.domain = "{t,0}u{0,t}";
        z.grid_points = static_cast<long long>(2 * axis.size());
        z.measured_sup_error = worst;
        z.claimed_bound = 0.0;
        z.passed = worst == 0.0;
        certs.push_back(z);
        certs.push_back(budget_certificate("mult", ps, *net, mult_budget(eps), 64));
    } else if (kind == "hat") {
        int k = p.integer("k", 1), I = p.integer("I", 4);
        p.reject_unknown(kind);
        if (I < 1 || k < 0 || k > I) throw UsageError("build hat: need 0 <= k <= I, I >= 1");
        net = hat_net(k, I);
        certs.push_back(grid_certificate("hat", "k=" + std::to_string(k) + " I=" + std::to_string(I), *net,
                                         [k](std::span<const double> x) { return hat_value(k, x[0]); },
                                         cube(1, 0.0, 1.0, scaled(10001, gs)), 1e-12));
    } else if (kind == "holder") {
        std::string fn = p.str("fn", "sinprod");
        int d = p.integer("d", 1);
        double beta = p.num("beta", 1.0), r = p.num("r", 1.0), eps = p.num("eps", 0.01);
        p.reject_unknown(kind);
        if (d < 1 || d > 3) throw UsageError("build holder: d must lie in 1..3");
        HolderOptions opt;
        if (gs != 1.0) opt.grid_per_axis = d == 1 ? scaled(10000, gs) : scaled(100, gs);
        auto res = holder_approx(holder_test_function(fn, d), d, beta, r, eps, opt);
        net = res.net;
        certs.push_back(res.cert);
    } else if (kind == "log") {
        double a = p.num("a", 0.1);
        double b = p.num("b", 1.0 - a);
        double alpha = p.num("alpha", 1.0), eps = p.num("eps", 0.1);
        p.reject_unknown(kind);
        LogOptions opt;
        opt.grid_points = scaled(100000, gs);
        opt.clamp_points = scaled(20001, gs);
        auto res = log_approx(a, b, alpha, eps, opt);
        net = res.net;
        certs.push_back(res.cert);
        ErrorCertificate c;
        c.construction = "log clamp";
        c.params = res.cert.params;
        c.domain = "[" + csv_num(opt.clamp_lo) + "," + csv_num(opt.clamp_hi) + "]";
        c.grid_points = opt.clamp_points;
        c.measured_sup_error = res.clamp_violation;
        c.claimed_bound = kClampSlack;
        c.passed = res.clamp_ok;
        certs.push_back(c);
    } else if (kind == "clip") {
        double lo = p.num("lo", -1.0), hi = p.num("hi", 1.0);
        p.reject_unknown(kind);
        if (!(lo < hi)) throw UsageError("build clip: need lo < hi");
        net = clip_net(lo, hi);
        double span = hi - lo;
        certs.push_back(grid_certificate("clip", "lo=" + csv_num(lo) + " hi=" + csv_num(hi), *net,
                                         [lo, hi](std::span<const double> x) { return std::clamp(x[0], lo, hi); },
                                         cube(1, lo - span, hi + span, scaled(10001, gs)),
                                         1e-12 * (1.0 + std::abs(lo) + std::abs(hi))));
    } else if (kind == "trunc-target") {
        double delta = p.num("delta", 0.1);
        p.reject_unknown(kind);
        if (!(delta > 0.0 && delta < 1.0 / 3.0)) throw UsageError("build trunc-target: delta must lie in (0, 1/3)");
        net = truncated_target_net(identity_net(1), delta);
        certs.push_back(grid_certificate(
            "trunc-target", "delta=" + csv_num(delta) + " eta=x", *net,
            [delta](std::span<const double> x) { return target_function(std::clamp(x[0], delta, 1.0 - delta)); },
            cube(1, 0.0, 1.0, scaled(10001, gs)), 2.0 * delta));
    } else if (kind == "compositional") {
        std::string spec = p.str("spec", "pairwise-sum");
        double eps = p.num("eps", 0.5);
        p.reject_unknown(kind);
        CompositionSpec cs;
        if (spec == "pairwise-sum")
            cs = pairwise_sum_spec();
        else if (spec == "pairwise-max")
            cs = pairwise_max_spec();
        else
            throw UsageError("build compositional: unknown spec '" + spec + "' (pairwise-sum, pairwise-max)");
        CompositionOptions opt;
        if (gs != 1.0) opt.grid_per_axis = scaled(17, gs);
        auto res = compositional_approx(cs, eps, opt);
        net = res.net;
        certs.push_back(res.cert);
    } else {
        throw UsageError("unknown build kind '" + kind +
                         "' (scale, max, mult, hat, holder, log, clip, trunc-target, compositional)");
    }

    std::string hash_input = "build " + kind + "\n" + p.c.canonical() + "grid_scale=" + csv_num(gs) + "\n";
    Run run(g, "build " + kind, hash_input);
    run.output(kind + ".json", serialize(*net));
    std::string csv = certificate_csv_header();
    long long failures = 0;
    for (const auto& c : certs) {
        csv += certificate_csv_row(c);
        if (!c.passed) ++failures;
    }
    run.output(kind + "_certificate.csv", csv);
    const auto& st = net->stats();
    std::cout << kind << ": G=" << st.depth_G << " N=" << st.width_N << " S=" << st.nnz_S
              << " B=" << csv_num(st.param_bound_B) << "\n";
    return run.finish(kind + "_build.manifest.json", static_cast<long long>(certs.size()), failures);
}

// ---------------------------------------------------------------------------
// check

int cmd_check(const Globals& g, const std::string& suite) {
    const auto& names = suite_names();
    if (std::find(names.begin(), names.end(), suite) == names.end())
        throw UsageError("unknown check suite '" + suite + "'");
    std::string hash_input = "check " + suite + "\nseed=" + std::to_string(g.seed) +
                             "\ngrid_scale=" + csv_num(g.grid_scale) + "\n";
    Run run(g, "check " + suite, hash_input);
    SuiteResult r = run_suite(suite, g.seed, g.grid_scale);
    run.output(suite + "_check.csv", r.table.str());
    return run.finish(suite + "_check.manifest.json", r.total, r.failures);
}

// ---------------------------------------------------------------------------
// experiment

std::uint64_t config_seed(const Globals& g, const Config& c) {
    if (g.seed_given) return g.seed;
    if (c.has("seed")) {
        long long s = c.integer("seed");
        if (s < 0) throw UsageError("config key 'seed': must be nonnegative");
        return static_cast<std::uint64_t>(s);
    }
    return g.seed;
}

void check_keys(const Config& c, const std::set<std::string>& known) {
    for (const auto& [k, v] : c.values())
        if (!known.count(k)) throw UsageError("unknown config key '" + k + "'");
}

int experiment_oracle(Globals g, const Config& c) {
    check_keys(c, {"kind", "replications", "seed", "cases", "prefix"});
    int reps = static_cast<int>(c.integer("replications"));
    if (reps < 2) throw UsageError("config key 'replications': need at least 2");
    std::string prefix = c.has("prefix") ? c.str("prefix") : "oracle";
    auto cases = canonical_oracle_cases(reps, g.seed);
    if (c.has("cases") && c.str("cases") != "all") {
        auto wanted = c.list("cases");
        std::vector<OracleCase> keep;
        for (const auto& w : wanted) {
            auto it = std::find_if(cases.begin(), cases.end(), [&](const OracleCase& oc) { return oc.cfg.name == w; });
            if (it == cases.end()) throw UsageError("config key 'cases': unknown case '" + w + "'");
            keep.push_back(*it);
        }
        cases = std::move(keep);
    }

    Run run(g, "experiment oracle", c.canonical() + "seed=" + std::to_string(g.seed) + "\ngrid_scale=" +
                                        csv_num(g.grid_scale) + "\n");
    CsvTable reps_csv({"case", "rep", "erm_index", "excess_phi"});
    CsvTable summary({"case", "n", "replications", "lhs", "lhs_half_width", "rhs", "term_variance",
                      "term_bounded", "term_cross", "term_gamma", "term_approx", "M", "Gamma", "Gamma_lemma",
                      "W", "passed"});
    long long failures = 0;
    for (auto& oc : cases) {
        if (oc.cfg.quadrature.kind == Quadrature::Kind::Grid)
            oc.cfg.quadrature.per_axis = scaled(oc.cfg.quadrature.per_axis, g.grid_scale);
        auto r = oracle_mc(oc.cfg, oc.P);
        for (std::size_t i = 0; i < r.replicate_excess.size(); ++i)
            reps_csv.add({r.name, std::to_string(i), std::to_string(r.replicate_index[i]),
                          csv_num(r.replicate_excess[i])});
        summary.add({r.name, std::to_string(oc.cfg.n), std::to_string(oc.cfg.replications), csv_num(r.lhs),
                     csv_num(r.lhs_half_width), csv_num(r.rhs), csv_num(r.term_variance), csv_num(r.term_bounded),
                     csv_num(r.term_cross), csv_num(r.term_gamma), csv_num(r.term_approx), csv_num(r.M),
                     csv_num(r.Gamma), csv_num(r.Gamma_lemma), csv_num(r.W), r.passed ? "1" : "0"});
        if (!r.passed) ++failures;
    }
    run.output(prefix + "_replicates.csv", reps_csv.str());
    run.output(prefix + "_summary.csv", summary.str());
    return run.finish(prefix + ".manifest.json", static_cast<long long>(cases.size()), failures);
}

RateStudyConfig rate_config(const Config& c, const std::string& family, std::uint64_t seed, double gs) {
    RateStudyConfig r;
    r.family = family;
    for (const auto& s : c.list("n_grid")) {
        try {
            std::size_t used = 0;
            long long n = std::stoll(s, &used);
            if (used != s.size() || n < 2) throw std::invalid_argument(s);
            r.n_grid.push_back(static_cast<std::size_t>(n));
        } catch (const std::exception&) {
            throw UsageError("config key 'n_grid': bad sample size '" + s + "'");
        }
    }
    r.replications = static_cast<int>(c.integer("replications"));
    r.seed = seed;
    r.depth = static_cast<int>(c.integer("depth"));
    r.width_c = c.num("width_c");
    r.width_exp = c.num("width_exp");
    r.F_c = c.num("F_c");
    r.steps = static_cast<int>(c.integer("steps"));
    r.epochs = c.num("epochs");
    r.batch = static_cast<int>(c.integer("batch"));
    r.step_size = c.num("step_size");
    r.eval_points = scaled(static_cast<int>(c.integer("eval_points")), gs);
    if (c.has("width_min")) r.width_min = static_cast<int>(c.integer("width_min"));
    if (c.has("width_max")) r.width_max = static_cast<int>(c.integer("width_max"));
    if (c.has("B")) r.B = c.num("B");
    if (c.has("theory_slope")) r.theory_slope = c.num("theory_slope");
    if (r.replications < 1 || r.depth < 1 || r.batch < 1 || r.n_grid.size() < 3)
        throw UsageError("rate config: need replications, depth, batch >= 1 and at least 3 sample sizes");
    return r;
}

int experiment_rate(Globals g, const Config& c) {
    check_keys(c, {"kind", "seed", "prefix", "family", "families", "n_grid", "replications", "depth", "width_c",
                   "width_exp", "F_c", "steps", "epochs", "batch", "step_size", "eval_points", "width_min",
                   "width_max", "B", "theory_slope", "slope_tolerance", "min_gap"});
    const bool compare = c.str("kind") == "rate-compare";
    std::vector<std::string> families = compare ? c.list("families") : std::vector<std::string>{c.str("family")};
    if (compare && families.size() != 2) throw UsageError("config key 'families': need exactly two families");
    double tol = 0.0, gap = 0.0;
    if (compare)
        gap = c.num("min_gap");
    else
        tol = c.num("slope_tolerance");
    std::string prefix = c.has("prefix") ? c.str("prefix") : "rate";

    // Validate every family before any work starts.
    std::vector<RateStudyConfig> cfgs;
    for (const auto& f : families) {
        try {
            rate_family(f);
        } catch (const std::invalid_argument&) {
            throw UsageError("config key '" + std::string(compare ? "families" : "family") + "': unknown family '" +
                             f + "'");
        }
        cfgs.push_back(rate_config(c, f, g.seed, g.grid_scale));
    }

    Run run(g, std::string("experiment ") + (compare ? "rate-compare" : "rate"),
            c.canonical() + "seed=" + std::to_string(g.seed) + "\ngrid_scale=" + csv_num(g.grid_scale) + "\n");
    CsvTable rows({"family", "n", "rep", "width", "F", "excess_phi", "excess_misclass", "train_risk",
                   "optimization_gap"});
    CsvTable means({"family", "n", "mean_excess_phi", "half_width", "mean_excess_misclass"});
    CsvTable slope({"family", "slope", "slope_se", "intercept", "reference_slope", "criterion", "passed"});
    std::vector<double> slopes;
    long long checks = 0, failures = 0;
    for (const auto& cfg : cfgs) {
        auto s = rate_experiment(cfg);
        for (const auto& r : s.rows)
            rows.add({cfg.family, std::to_string(r.n), std::to_string(r.rep), std::to_string(r.width), csv_num(r.F),
                      csv_num(r.excess_phi), csv_num(r.excess_misclass), csv_num(r.train_risk),
                      csv_num(r.optimization_gap)});
        for (std::size_t i = 0; i < s.n.size(); ++i)
            means.add({cfg.family, std::to_string(s.n[i]), csv_num(s.mean_excess[i]), csv_num(s.half_width[i]),
                       csv_num(s.mean_misclass[i])});
        slopes.push_back(s.slope);
        if (!compare) {
            bool ok = std::abs(s.slope - s.theory_slope) <= tol;
            slope.add({cfg.family, csv_num(s.slope), csv_num(s.slope_se), csv_num(s.intercept),
                       csv_num(s.theory_slope), "|slope-reference|<=" + csv_num(tol), ok ? "1" : "0"});
            ++checks;
            if (!ok) ++failures;
        } else {
            slope.add({cfg.family, csv_num(s.slope), csv_num(s.slope_se), csv_num(s.intercept),
                       csv_num(s.theory_slope), "", ""});
        }
    }
    if (compare) {
        bool ok = slopes[0] <= slopes[1] - gap;
        slope.add({families[0] + "-" + families[1], csv_num(slopes[0] - slopes[1]), "", "", "",
                   "difference<=-" + csv_num(gap), ok ? "1" : "0"});
        ++checks;
        if (!ok) ++failures;
    }
    run.output(prefix + "_replicates.csv", rows.str());
    run.output(prefix + "_means.csv", means.str());
    run.output(prefix + "_slope.csv", slope.str());
    return run.finish(prefix + ".manifest.json", checks, failures);
}

int cmd_experiment(Globals g, const std::string& path) {
    if (path.empty()) throw UsageError("experiment needs a config file (positional or --config)");
    Config c = Config::load(path);
    g.seed = config_seed(g, c);
    const std::string& kind = c.str("kind");
    if (kind == "oracle") return experiment_oracle(g, c);
    if (kind == "rate" || kind == "rate-compare") return experiment_rate(g, c);
    throw UsageError("config key 'kind': unknown experiment '" + kind + "' (oracle, rate, rate-compare)");
}

}  // namespace

// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"ReLU network constructions, risk checks and ERM experiments for logistic classification"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    int jobs_flag = 0;
    auto* seed_opt = app.add_option("--seed", g.seed, "Random seed (default 1)");
    app.add_option("--out-dir", g.out_dir, "Directory for CSV, JSON and manifest outputs")->capture_default_str();
    app.add_option("--jobs", jobs_flag, "Worker threads (falls back to LOGITNETS_JOBS)")
        ->check(CLI::PositiveNumber);
    app.add_option("--grid-scale", g.grid_scale, "Multiplier for grid and sweep resolutions")
        ->check(CLI::PositiveNumber);
    app.add_option("--config", g.config_path, "Experiment config file");

    std::string kind, suite, exp_path;
    std::vector<std::string> params;
    auto* build = app.add_subcommand("build", "Build a construction and certify it");
    build->add_option("kind", kind, "scale|max|mult|hat|holder|log|clip|trunc-target|compositional")->required();
    build->add_option("params", params, "key=value parameters");
    auto* check = app.add_subcommand("check", "Run an inequality or invariant sweep");
    check->add_option("suite", suite, "sandwich|variance|calibration|J|KL|covering|vg|bump|separation")
        ->required();
    auto* exper = app.add_subcommand("experiment", "Run an experiment from a key=value config");
    exper->add_option("config", exp_path, "Config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitUsage;
    }
    g.seed_given = seed_opt->count() > 0;
    if (jobs_flag > 0) set_jobs(jobs_flag);

    try {
        if (*build) return cmd_build(g, kind, params);
        if (*check) return cmd_check(g, suite);
        if (!exp_path.empty() && !g.config_path.empty() && exp_path != g.config_path)
            throw UsageError("experiment config given twice with different paths");
        return cmd_experiment(g, exp_path.empty() ? g.config_path : exp_path);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace logitnets
