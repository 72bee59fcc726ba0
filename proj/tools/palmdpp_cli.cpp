// palmdpp command-line front end.
//
// Exit codes: 0 pass, 1 verification or numerical failure, 2 usage or parameter error.
// Output goes to stdout, or atomically to --output (relative paths resolve
// against $PALMDPP_OUTPUT_DIR when it is set).

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <palmdpp/palmdpp.hpp>

using json = nlohmann::ordered_json;
using namespace palmdpp;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;
    double s_re = 0, s_im = 0;
    bool has_s = false;
    std::string format = "csv";
    std::string output;
    std::vector<std::pair<std::string, std::string>> echo;  // effective configuration

    void set(const std::string& k, const std::string& v) { echo.emplace_back(k, v); }
    template <class T>
    void set(const std::string& k, T v) {
        std::ostringstream os;
        os << std::setprecision(15) << v;
        echo.emplace_back(k, os.str());
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(15) << v;
    return os.str();
}

struct Range {
    double lo = 0, hi = 0, step = 0;
};

Range parse_range(const std::string& text, bool need_step) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string tok;
    try {
        while (std::getline(ss, tok, ':')) v.push_back(std::stod(tok));
    } catch (const std::exception&) {
        throw UsageError("cannot parse '" + text + "'");
    }
    if (need_step) {
        if (v.size() != 3) throw UsageError("grid must be min:max:step, got '" + text + "'");
        if (!(v[2] > 0) || v[1] < v[0]) throw UsageError("grid needs step > 0 and max >= min");
        return {v[0], v[1], v[2]};
    }
    if (v.size() != 2 || !(v[1] > v[0])) throw UsageError("window must be lo:hi with lo < hi, got '" + text + "'");
    return {v[0], v[1], 0};
}

std::vector<double> grid_points(const Range& r) {
    std::vector<double> g;
    long m = std::lround(std::floor((r.hi - r.lo) / r.step + 1e-9));
    if (m > 100000) throw UsageError("grid has too many points");
    for (long i = 0; i <= m; ++i) {
        double x = r.lo + double(i) * r.step;
        g.push_back(std::abs(x) < 1e-12 * r.step ? 0.0 : x);
    }
    return g;
}

// Writes `text` to cfg.output via a temporary file and rename, or to stdout.
void emit(const RunConfig& cfg, const std::string& text) {
    if (cfg.output.empty()) {
        std::cout << text;
        return;
    }
    namespace fs = std::filesystem;
    fs::path out(cfg.output);
    if (out.is_relative())
        if (const char* dir = std::getenv("PALMDPP_OUTPUT_DIR"); dir && *dir) out = fs::path(dir) / out;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    fs::path tmp = out;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + tmp.string());
        f << text;
        if (!f.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, out);
}

std::string csv_header(const RunConfig& cfg) {
    std::ostringstream os;
    os << "# palmdpp " << version << " command=" << cfg.command << "\n";
    for (const auto& [k, v] : cfg.echo) os << "# " << k << "=" << v << "\n";
    return os.str();
}

json config_json(const RunConfig& cfg) {
    json c = json::object();
    c["version"] = version;
    for (const auto& [k, v] : cfg.echo) c[k] = v;
    return c;
}

json summary(const RunConfig& cfg, json verdicts, json metrics) {
    json j;
    j["command"] = cfg.command;
    j["config"] = config_json(cfg);
    j["verdicts"] = std::move(verdicts);
    j["metrics"] = std::move(metrics);
    return j;
}

HuaPickrellParam param(const RunConfig& cfg) {
    if (!cfg.has_s) throw UsageError("--s-re is required");
    return HuaPickrellParam(cfg.s_re, cfg.s_im);
}

// ---------------------------------------------------------------- commands

int cmd_eval(RunConfig& cfg, const std::string& kernel, const std::string& grid_text) {
    HuaPickrellParam p = param(cfg);
    std::vector<double> g = grid_points(parse_range(grid_text, true));
    cfg.set("kernel", kernel);
    cfg.set("grid", grid_text);
    IntegrableKernel K = kernel == "pi" ? make_pi(p) : make_chk(p);
    if (kernel == "chk")
        for (double x : g)
            if (x == 0) throw UsageError("grid contains the singular point 0 of the chk kernel");
    std::ostringstream os;
    json rows = json::array();
    if (cfg.format == "csv") os << csv_header(cfg) << "x,y,re,im\n";
    for (double x : g)
        for (double y : g) {
            cplx v = K(x, y);
            if (cfg.format == "csv")
                os << fmt(x) << "," << fmt(y) << "," << fmt(v.real()) << "," << fmt(v.imag()) << "\n";
            else
                rows.push_back({x, y, v.real(), v.imag()});
        }
    if (cfg.format == "json") {
        json m;
        m["columns"] = {"x", "y", "re", "im"};
        m["values"] = rows;
        os << summary(cfg, json::object(), m).dump(2) << "\n";
    }
    emit(cfg, os.str());
    return 0;
}

int cmd_verify(RunConfig& cfg, double tol, double palm_tol, const std::vector<int>& ns, int finite_n) {
    HuaPickrellParam p = param(cfg);
    cfg.set("tol", tol);
    cfg.set("palm_tol", palm_tol);
    cfg.set("finite_n", finite_n);
    std::string nl;
    for (int n : ns) nl += (nl.empty() ? "" : ",") + std::to_string(n);
    cfg.set("n", nl);
    cfg.set("grid", "log 0.05:5 x16 symmetric");
    std::vector<double> grid = log_grid(0.05, 5, 16);

    MainTheoremReport mt = verify_main_theorem(p, grid, tol, finite_n);
    std::vector<PalmIdentityReport> fin;
    for (int n : ns) fin.push_back(verify_finite_palm_identity(p, n, grid, palm_tol));
    bool all = mt.passed;
    for (const auto& r : fin) all = all && r.passed;

    std::ostringstream os;
    if (cfg.format == "csv") {
        os << csv_header(cfg) << "check,n,diagonal_deviation,modulus_deviation,extra,passed\n";
        os << "palm0_limit,inf," << fmt(mt.limit.max_diagonal_deviation) << ","
           << fmt(mt.limit.max_modulus_deviation) << ",," << mt.limit.equivalent << "\n";
        os << "palm0_finite," << mt.finite_n << "," << fmt(mt.finite_deviation) << ",,"
           << fmt(mt.finite_unpalmed) << "," << mt.finite_passed << "\n";
        for (const auto& r : fin)
            os << "palm_inf_finite," << r.n << "," << fmt(r.max_diagonal_deviation) << ","
               << fmt(r.max_modulus_deviation) << "," << fmt(r.trace) << "," << r.passed << "\n";
        os << "# verdict=" << (all ? "pass" : "fail") << "\n";
    } else {
        json v, m;
        v["main_theorem"] = mt.passed;
        v["finite_palm_identity"] = std::all_of(fin.begin(), fin.end(), [](auto& r) { return r.passed; });
        v["all"] = all;
        m["palm0_limit"] = {{"diagonal_deviation", mt.limit.max_diagonal_deviation},
                            {"modulus_deviation", mt.limit.max_modulus_deviation}};
        m["palm0_finite"] = {{"n", mt.finite_n},
                             {"deviation", mt.finite_deviation},
                             {"unpalmed", mt.finite_unpalmed},
                             {"tol", mt.finite_tol}};
        json f = json::array();
        for (const auto& r : fin)
            f.push_back({{"n", r.n},
                         {"diagonal_deviation", r.max_diagonal_deviation},
                         {"modulus_deviation", r.max_modulus_deviation},
                         {"trace", r.trace},
                         {"passed", r.passed}});
        m["palm_inf_finite"] = f;
        os << summary(cfg, v, m).dump(2) << "\n";
    }
    emit(cfg, os.str());
    if (!all) std::cerr << "verify-theorem: verification failed\n";
    return all ? 0 : 1;
}

int cmd_scaling(RunConfig& cfg, const std::vector<int>& ladder, bool components) {
    HuaPickrellParam p = param(cfg);
    std::string nl;
    for (int n : ladder) {
        if (n < 2) throw UsageError("ladder entries must be >= 2");
        nl += (nl.empty() ? "" : ",") + std::to_string(n);
    }
    cfg.set("ladder", nl);
    cfg.set("grid", "log 0.05:5 x16 symmetric");
    cfg.set("components", components ? "true" : "false");
    const std::string grid_id = "log32";
    std::vector<double> grid = log_grid(0.05, 5, 16);
    ScalingReport sr = scaling_report(p, ladder, grid);
    std::optional<ConvergenceReport> cr;
    if (components) cr = pseudo_jacobi_components(p, ladder, grid);

    std::ostringstream os;
    if (cfg.format == "csv") {
        os << csv_header(cfg) << "n,component,sup_error,grid_id\n";
        for (std::size_t i = 0; i < ladder.size(); ++i)
            os << ladder[i] << ",kernel," << fmt(sr.errors[i]) << "," << grid_id << "\n";
        if (cr)
            for (std::size_t c = 0; c < cr->components.size(); ++c)
                for (std::size_t i = 0; i < ladder.size(); ++i)
                    os << ladder[i] << "," << cr->components[c] << "," << fmt(cr->errors[c][i]) << ","
                       << grid_id << "\n";
        os << "# decreasing=" << sr.decreasing << "\n";
    } else {
        json v, m;
        v["kernel_decreasing"] = sr.decreasing;
        m["grid_id"] = grid_id;
        m["kernel"] = sr.errors;
        if (cr) {
            v["components_decreasing"] = cr->all_decreasing();
            for (std::size_t c = 0; c < cr->components.size(); ++c) m[cr->components[c]] = cr->errors[c];
            m["bound_integral"] = cr->bound_integral;
        }
        os << summary(cfg, v, m).dump(2) << "\n";
    }
    emit(cfg, os.str());
    return sr.decreasing ? 0 : 1;
}

int cmd_sample(RunConfig& cfg, const std::string& weight, int n, int count, std::uint64_t seed) {
    HuaPickrellParam p = param(cfg);
    if (n < 1) throw UsageError("--n must be >= 1");
    if (count < 1) throw UsageError("--count must be >= 1");
    cfg.set("weight", weight);
    cfg.set("n", n);
    cfg.set("count", count);
    cfg.set("seed", seed);
    EnsembleSpec e = weight == "pseudo-jacobi" ? line_ensemble(pseudo_jacobi(n, p.value()), n)
                                               : circle_ensemble(circular_jacobi(p.value()), n);
    std::istringstream desc(describe(e));
    for (std::string line; std::getline(desc, line);) cfg.set("ensemble." + line.substr(0, line.find('=')),
                                                              line.substr(line.find('=') + 1));
    EnsembleSampler S(e);
    std::ostringstream os;
    json draws = json::array();
    if (cfg.format == "csv") os << csv_header(cfg) << "seed,index,position\n";
    // Draw k uses its own generator seeded with seed + k.
    for (int k = 0; k < count; ++k) {
        std::uint64_t sk = seed + std::uint64_t(k);
        std::mt19937_64 rng(sk);
        PointConfiguration pc = S.draw(rng);
        if (cfg.format == "csv") {
            for (std::size_t i = 0; i < pc.positions.size(); ++i)
                os << sk << "," << i << "," << std::setprecision(17) << pc.positions[i] << "\n";
        } else {
            draws.push_back({{"seed", sk}, {"positions", pc.positions}});
        }
    }
    if (cfg.format == "json") {
        json m;
        m["gram_error"] = S.gram_error();
        m["draws"] = draws;
        os << summary(cfg, json::object(), m).dump(2) << "\n";
    }
    emit(cfg, os.str());
    return 0;
}

int cmd_fredholm(RunConfig& cfg, const std::vector<std::string>& windows_text, std::vector<double> z,
                 int n, const std::string& kernel) {
    HuaPickrellParam p = param(cfg);
    if (windows_text.empty()) throw UsageError("at least one --window is required");
    if (z.empty()) z.assign(windows_text.size(), 0.0);
    if (z.size() != windows_text.size()) throw UsageError("--z must be given once per --window");
    std::vector<Interval> windows;
    std::string wl, zl;
    for (std::size_t i = 0; i < windows_text.size(); ++i) {
        Range r = parse_range(windows_text[i], false);
        windows.push_back({r.lo, r.hi});
        wl += (i ? "," : "") + windows_text[i];
        zl += (i ? "," : "") + fmt(z[i]);
    }
    cfg.set("kernel", kernel);
    cfg.set("n", n);
    cfg.set("window", wl);
    cfg.set("z", zl);
    IntegrableKernel K = kernel == "cd" ? cd_kernel_line(pseudo_jacobi(n, p.value()), n) : make_chk(p);
    DiscretizedKernel D = discretize(K, window_rule(windows));
    std::vector<cplx> zc(z.begin(), z.end());
    cplx v = counting_mgf(D, windows, zc);
    FredholmResult fr = fredholm_det_report(D, [&](double x) -> cplx {
        for (std::size_t j = 0; j < windows.size(); ++j)
            if (windows[j].contains(x)) return zc[j];
        return 1.0;
    });
    bool all_zero = std::all_of(z.begin(), z.end(), [](double t) { return t == 0; });
    bool ok = std::isfinite(v.real()) && (!all_zero || (v.real() > 0 && v.real() < 1));

    std::ostringstream os;
    if (cfg.format == "csv") {
        os << csv_header(cfg) << "quantity,re,im\n";
        os << "generating_function," << fmt(v.real()) << "," << fmt(v.imag()) << "\n";
        if (all_zero) os << "gap_probability," << fmt(v.real()) << ",0\n";
        os << "rcond," << fmt(fr.rcond) << ",0\n";
    } else {
        json ver, m;
        ver["valid"] = ok;
        m["generating_function"] = {v.real(), v.imag()};
        if (all_zero) m["gap_probability"] = v.real();
        m["rcond"] = fr.rcond;
        os << summary(cfg, ver, m).dump(2) << "\n";
    }
    emit(cfg, os.str());
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"palmdpp: Palm kernels of Hua-Pickrell determinantal processes"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto common = [&](CLI::App* sub, bool s_required) {
        auto* o = sub->add_option("--s-re", cfg.s_re, "Re s (Re s > -1/2)");
        if (s_required) o->required();
        sub->add_option("--s-im", cfg.s_im, "Im s");
        sub->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("-o,--output", cfg.output, "output file (default stdout)");
    };

    std::string kernel = "pi", grid = "-2:2:0.5";
    auto* eval = app.add_subcommand("eval", "evaluate K^(s) (chk) or Pi^(s) (pi) on a grid");
    common(eval, true);
    eval->add_option("--kernel", kernel)->check(CLI::IsMember({"pi", "chk"}));
    eval->add_option("--grid", grid, "min:max:step");

    double tol = 1e-5, palm_tol = 1e-6;
    int finite_n = 200;
    std::vector<int> ns{4, 6, 8, 12};
    auto* verify = app.add_subcommand("verify-theorem", "Palm at 0 of Pi^(s) against Pi^(s+1)");
    common(verify, true);
    verify->add_option("--tol", tol, "gauge tolerance of the limit route");
    verify->add_option("--palm-tol", palm_tol, "tolerance of the finite Palm identity");
    verify->add_option("--n", ns, "degrees for the finite Palm identity")->delimiter(',');
    verify->add_option("--finite-n", finite_n, "degree of the finite route (0 disables)");

    std::vector<int> ladder{25, 50, 100, 200};
    bool components = false;
    auto* scaling = app.add_subcommand("scaling", "scaling errors of n K_n(n., n.) against K^(s)");
    common(scaling, true);
    scaling->add_option("--ladder", ladder)->delimiter(',');
    scaling->add_flag("--components", components, "add A, B, rho errors on the Pi side");

    std::string weight = "pseudo-jacobi";
    int n = 4, count = 1;
    std::uint64_t seed = 0;
    auto* samp = app.add_subcommand("sample", "draw point configurations");
    common(samp, true);
    samp->add_option("--weight", weight)->check(CLI::IsMember({"pseudo-jacobi", "circular-jacobi"}));
    samp->add_option("--n", n);
    samp->add_option("--count", count);
    samp->add_option("--seed", seed);

    std::vector<std::string> windows;
    std::vector<double> z;
    int fn = 4;
    std::string fkernel = "cd";
    auto* fred = app.add_subcommand("fredholm", "counting generating function on windows");
    cfg.s_re = 0.5;
    common(fred, false);
    fred->add_option("--window", windows, "lo:hi (repeatable)")->allow_extra_args(false);
    fred->add_option("--z", z, "generating variable per window")->allow_extra_args(false);
    fred->add_option("--n", fn);
    fred->add_option("--kernel", fkernel, "cd (pseudo-Jacobi degree n) or chk")
        ->check(CLI::IsMember({"cd", "chk"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        cfg.command = sub->get_name();
        cfg.has_s = sub->count("--s-re") > 0 || sub == fred;
        cfg.set("s_re", cfg.s_re);
        cfg.set("s_im", cfg.s_im);
        cfg.set("format", cfg.format);
        cfg.set("output", cfg.output.empty() ? "-" : cfg.output);
        if (sub == eval) return cmd_eval(cfg, kernel, grid);
        if (sub == verify) return cmd_verify(cfg, tol, palm_tol, ns, finite_n);
        if (sub == scaling) return cmd_scaling(cfg, ladder, components);
        if (sub == samp) return cmd_sample(cfg, weight, n, count, seed);
        if (sub == fred) return cmd_fredholm(cfg, windows, z, fn, fkernel);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
