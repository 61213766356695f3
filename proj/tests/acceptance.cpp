// Acceptance run: one [PASS]/[FAIL] line per criterion, exit 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "logitnets/checks.hpp"
#include "logitnets/cli.hpp"
#include "logitnets/constructions.hpp"
#include "logitnets/erm.hpp"
#include "logitnets/random.hpp"

using namespace logitnets;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

int g_failed = 0;
std::vector<int> g_only;

void criterion(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    if (!g_only.empty() && std::find(g_only.begin(), g_only.end(), id) == g_only.end()) return;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = limit_s <= 0 || secs < limit_s;
    bool ok = o.ok && in_time;
    if (!ok) ++g_failed;
    char timing[96];
    if (limit_s > 0)
        std::snprintf(timing, sizeof timing, "%.1f s, limit %.0f s", secs, limit_s);
    else
        std::snprintf(timing, sizeof timing, "%.1f s", secs);
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << " " << name << " (" << timing << "): " << o.detail << std::endl;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Plain comma split; the files read here never quote.
std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> out;
    std::istringstream in(slurp(p));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t start = 0, pos;
        while ((pos = line.find(',', start)) != std::string::npos) {
            f.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        f.push_back(line.substr(start));
        out.push_back(f);
    }
    return out;
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "logitnets");
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    int code = run_cli(args);
    std::cout.rdbuf(old);
    return code;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Outcome exactness() {
    Rng g(2024);
    double worst = 0.0;
    for (int k = 1; k <= 16; ++k) {
        ReluNet net = max_net(k);
        std::vector<double> x(k);
        for (int i = 0; i < 10000; ++i) {
            double ref = 0.0;
            for (auto& v : x) {
                v = 2.0 * uniform01(g) - 1.0;
                ref = std::max(ref, std::abs(v));
            }
            worst = std::max(worst, std::abs(net(x) - ref));
        }
    }
    bool scale_exact = true;
    for (int k = 1; k <= 16; ++k) {
        ReluNet net = scale_pos_net(k);
        for (int i = 0; i < 10000; ++i) {
            double x = 2.0 * uniform01(g) - 1.0;
            scale_exact &= net(std::span<const double>(&x, 1)) == std::ldexp(std::max(x, 0.0), k);
        }
    }
    bool mult_zero = true;
    for (double eps : {0.5, 0.1, 0.01, 1e-3, 1e-4}) {
        ReluNet net = mult_net(eps);
        for (int i = 0; i <= 10000; ++i) {
            double t = i / 10000.0;
            double a[2] = {t, 0.0}, b[2] = {0.0, t};
            mult_zero &= net(a) == 0.0 && net(b) == 0.0;
        }
    }
    return {worst <= 1e-12 && scale_exact && mult_zero,
            fmt("max_net worst |err| %.3g over k=1..16; ", worst) + "scale exact " + (scale_exact ? "yes" : "no") +
                "; mult(t,0)=mult(0,t)=0 " + (mult_zero ? "yes" : "no")};
}

Outcome log_certificates() {
    int ok = 0, total = 0;
    double worst_ratio = 0.0;
    Rng g(7);
    for (double a : {0.25, 0.1, 0.01})
        for (double eps : {0.5, 0.25, 0.1}) {
            const double b = 1.0 - a;
            LogResult r = log_approx(a, b, 1.0, eps);
            // Fresh random probes, independent of the certificate grid.
            bool probes = true;
            for (int i = 0; i < 10000; ++i) {
                double x = a + (b - a) * uniform01(g);
                double y = 20.0 * uniform01(g) - 10.0;
                double fx = r.net(std::span<const double>(&x, 1)), fy = r.net(std::span<const double>(&y, 1));
                probes &= std::abs(fx - std::log(x)) <= eps;
                probes &= fy >= std::log(a) - kClampSlack && fy <= std::log(b) + kClampSlack;
            }
            bool pass = r.cert.passed && r.cert.grid_points >= 100000 && r.clamp_ok && probes &&
                        r.cert.measured_sup_error <= eps;
            worst_ratio = std::max(worst_ratio, r.cert.measured_sup_error / eps);
            ok += pass;
            ++total;
        }
    return {ok == total, fmt("%.0f/%.0f (a, eps) pairs certified, worst sup error / eps = %.3f", ok, total, worst_ratio)};
}

Outcome budgets() {
    int ok = 0, total = 0;
    auto check = [&](const ReluNet& net, const ComplexityBudget& b, int res) {
        ok += is_member(net, b, res);
        ++total;
    };
    for (double eps : {0.5, 0.25, 0.1, 0.01, 1e-3}) {
        double L = std::log(1.0 / eps);
        check(mult_net(eps), {15 * L, 6, 900 * L, 1, 1}, 65);
    }
    for (int k = 1; k <= 16; ++k) {
        int c = static_cast<int>(std::ceil(std::log2(static_cast<double>(k))));
        int res = std::max(2, static_cast<int>(std::floor(std::pow(1e5, 1.0 / k))));
        check(max_net(k), {1.0 + 2 * c, 2.0 * k, 26.0 * std::pow(2.0, c) - 20 - 2 * c, 1, 1}, res);
    }
    for (int k = 1; k <= 16; ++k) check(scale_pos_net(k), {double(k), 2, 4.0 * k, 1, kInf}, 1001);
    return {ok == total, fmt("%.0f/%.0f constructions inside their budgets (mult, max k=1..16, scale k=1..16)", ok, total)};
}

Outcome suites(const std::vector<std::string>& names, std::uint64_t seed) {
    long long total = 0, failures = 0;
    std::string detail;
    for (const auto& n : names) {
        auto r = run_suite(n, seed);
        total += r.total;
        failures += r.failures;
        detail += n + " " + std::to_string(r.total - r.failures) + "/" + std::to_string(r.total) + "; ";
    }
    detail += std::to_string(failures) + " violations";
    return {failures == 0 && total > 0, detail};
}

Outcome sweeps() {
    std::vector<SuiteResult> rs{sandwich_suite(1.0), ratio_suite(1.0), J_suite(1.0), KL_suite(11, 1.0),
                                calibration_suite(11, 1.0)};
    long long failures = 0, jvals = 0;
    std::string detail;
    for (const auto& r : rs) {
        failures += r.failures;
        detail += r.name + " " + std::to_string(r.total - r.failures) + "/" + std::to_string(r.total) + "; ";
    }
    for (const auto& row : rs[2].table.data()) jvals += row[1].rfind("eps=", 0) == 0;
    // Size floors: 10^4 sandwich cells, 50 J values, 200 KL pairs, 100 calibration pairs.
    bool sizes = rs[0].total >= 10000 && jvals >= 50 && rs[3].total >= 200 && rs[4].total >= 100;
    detail += std::to_string(failures) + " violations";
    if (!sizes) detail += " (sample sizes below the required floors)";
    return {failures == 0 && sizes, detail};
}

Outcome oracle() {
    auto cases = canonical_oracle_cases(300, 1);
    int ok = 0;
    bool shape = cases.size() == 5;
    bool truncated = false, margin = false;
    double worst = -1e300;
    for (auto& c : cases) {
        shape &= c.cfg.cls.size() <= 16 && (c.cfg.n == 100 || c.cfg.n == 400) && c.cfg.replications == 300;
        truncated |= c.cfg.psi.variant == PsiFunction::Variant::Truncated;
        margin |= c.cfg.psi.variant == PsiFunction::Variant::Margin;
        auto r = oracle_mc(c.cfg, c.P);
        ok += r.passed && r.lhs <= r.rhs + 3.0 * r.lhs_half_width;
        worst = std::max(worst, r.lhs - r.rhs);
    }
    shape &= truncated && margin;
    return {ok == 5 && shape, fmt("%.0f/5 cases with LHS <= RHS + 3 half-widths; max LHS-RHS = %.3g", ok, worst)};
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    return sxy / sxx;
}

// Slopes of log mean excess against log n, recomputed from the means file.
std::vector<std::pair<std::string, double>> slopes_from_means(const fs::path& p) {
    std::vector<std::pair<std::string, double>> out;
    std::vector<double> x, y;
    std::string fam;
    auto flush = [&] {
        if (!x.empty()) out.emplace_back(fam, ls_slope(x, y));
        x.clear();
        y.clear();
    };
    for (const auto& row : read_csv(p)) {
        if (row[0] != fam) {
            flush();
            fam = row[0];
        }
        x.push_back(std::log(std::stod(row[1])));
        y.push_back(std::log(std::stod(row[2])));
    }
    flush();
    return out;
}

Outcome rates(const fs::path& root, const fs::path& work) {
    const fs::path d1 = root / "configs" / "rate_study_d1.cfg", comp = root / "configs" / "rate_compositional.cfg";
    auto c1 = Config::load(d1.string());
    bool grid_ok = c1.str("family") == "sin1d" && c1.integer("replications") == 30 &&
                   c1.list("n_grid") == std::vector<std::string>{"256", "512", "1024", "2048", "4096", "8192"};
    int code1 = cli({"experiment", d1.string(), "--out-dir", work.string()});
    int code2 = cli({"experiment", comp.string(), "--out-dir", work.string()});
    auto s1 = slopes_from_means(work / "rate_d1_means.csv");
    auto s2 = slopes_from_means(work / "rate_compositional_means.csv");
    if (s1.size() != 1 || s2.size() != 2) return {false, "missing rate outputs"};
    // The CLI's own fit must agree with the recomputation.
    bool agree = std::abs(std::stod(read_csv(work / "rate_d1_slope.csv")[0][1]) - s1[0].second) <= 1e-9;
    double slope = s1[0].second, gap = s2[1].second - s2[0].second;
    bool ok = grid_ok && agree && slope < 0 && std::abs(slope + 0.5) <= 0.3 && gap >= 0.05 && code1 == 0 && code2 == 0;
    return {ok, fmt("sin1d slope %.3f (target -0.5 +- 0.3); ", slope) + s2[0].first + fmt(" slope %.3f, ", s2[0].second) +
                    s2[1].first + fmt(" slope %.3f, gap %.3f (need >= 0.05)", s2[1].second, gap)};
}

Outcome lower_bounds() { return suites({"vg", "bump", "separation"}, 5); }

Outcome determinism(const fs::path& work) {
    const std::string rate_cfg =
        "kind = rate\nfamily = sin1d\nn_grid = 128, 256, 512\nreplications = 3\nseed = 9\ndepth = 1\n"
        "width_c = 2\nwidth_exp = 0.5\nF_c = 0.5\nsteps = 200\nepochs = 0\nbatch = 64\nstep_size = 0.01\n"
        "eval_points = 1024\ntheory_slope = -0.5\nslope_tolerance = 10\n";
    const std::string oracle_cfg = "kind = oracle\nreplications = 40\nseed = 2\ncases = all\n";
    fs::create_directories(work);
    std::ofstream(work / "rate.cfg", std::ios::binary) << rate_cfg;
    std::ofstream(work / "oracle.cfg", std::ios::binary) << oracle_cfg;
    for (const char* run : {"a", "b"}) {
        const std::string out = (work / run).string();
        const std::vector<std::string> jobs = run[0] == 'a' ? std::vector<std::string>{"--jobs", "1"}
                                                             : std::vector<std::string>{};
        std::vector<std::vector<std::string>> cmds = {
            {"build", "max", "k=6"},
            {"build", "log", "a=0.1", "b=0.9", "eps=0.25"},
            {"check", "KL"},
            {"check", "variance"},
            {"experiment", (work / "rate.cfg").string()},
            {"experiment", (work / "oracle.cfg").string()},
        };
        for (auto cmd : cmds) {
            cmd.insert(cmd.end(), {"--out-dir", out, "--seed", "17"});
            cmd.insert(cmd.end(), jobs.begin(), jobs.end());
            if (cli(cmd) != 0) return {false, "command failed: " + cmd[0] + " " + cmd[1]};
        }
    }
    int files = 0, same = 0;
    for (const auto& e : fs::directory_iterator(work / "a"))
        if (e.path().extension() == ".csv") {
            ++files;
            same += slurp(e.path()) == slurp(work / "b" / e.path().filename());
        }
    return {files > 0 && same == files,
            fmt("%.0f/%.0f CSV files byte-identical across two runs (serial vs default jobs)", same, files)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"logitnets acceptance criteria"};
    std::string root_str = LOGITNETS_SOURCE_DIR;
    app.add_option("--root", root_str, "Source tree holding configs/")->capture_default_str();
    app.add_option("--only", g_only, "Run only these criteria (1-9)")->delimiter(',')->check(CLI::Range(1, 9));
    CLI11_PARSE(app, argc, argv);
    const fs::path root = root_str;
    const fs::path work = fs::temp_directory_path() / "logitnets_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    criterion(1, "construction exactness", 10, exactness);
    criterion(2, "log certificates", 120, log_certificates);
    criterion(3, "complexity budgets", 0, budgets);
    criterion(4, "inequality sweeps", 60, sweeps);
    criterion(5, "oracle inequality", 300, oracle);
    criterion(6, "variance bounds", 0, [] { return suites({"variance"}, 3); });
    criterion(7, "rate study", 1800, [&] { return rates(root, work / "rate"); });
    criterion(8, "lower-bound ingredients", 180, lower_bounds);
    criterion(9, "determinism", 0, [&] { return determinism(work / "det"); });

    std::cout << (g_failed == 0 ? "all criteria passed" : std::to_string(g_failed) + " criteria failed") << std::endl;
    return g_failed == 0 ? 0 : 1;
}
