#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hs/brownian.hpp"
#include "hs/errors.hpp"
#include "hs/hash.hpp"
#include "hs/theta.hpp"
#include "hs/verify.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw hs::ConfigError("cannot read " + path);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

json read_json(const std::string& path) {
    try {
        return json::parse(slurp(path));
    } catch (const json::parse_error& e) {
        throw hs::ConfigError(path + ": " + e.what());
    }
}

hs::DomainSpec read_spec(const std::string& path) { return hs::DomainSpec::from_json(read_json(path)); }

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2) << '\n'; }

// Collects outputs and writes manifest.json once the command is done.
class Manifest {
public:
    Manifest(int argc, char** argv) : start_(std::chrono::steady_clock::now()) {
        for (int k = 0; k < argc; ++k) argv_.push_back(argv[k]);
        started_ = std::time(nullptr);
    }
    void config(const std::string& bytes) { config_hash_ = hs::sha256_hex(bytes); }
    void seed(std::uint64_t s) { seeds_.push_back(s); }
    void output(const fs::path& p) { outputs_.push_back(p); }

    void write(const fs::path& dir) const {
        json j;
        j["command_line"] = argv_;
        j["config_sha256"] = config_hash_;
        j["seeds"] = seeds_;
        j["versions"] = {{"hotspot", kVersion},
                         {"compiler", __VERSION__},
                         {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                       "." + std::to_string(EIGEN_MINOR_VERSION)},
                         {"cli11", CLI11_VERSION}};
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started_));
        j["started_utc"] = buf;
        j["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        j["outputs"] = json::array();
        for (const auto& p : outputs_)
            j["outputs"].push_back({{"path", fs::relative(p, dir).generic_string()}, {"sha256", hs::sha256_file(p.string())}});
        write_json(dir / "manifest.json", j);
    }

private:
    std::vector<std::string> argv_;
    std::string config_hash_;
    std::vector<std::uint64_t> seeds_;
    std::vector<fs::path> outputs_;
    std::chrono::steady_clock::time_point start_;
    std::time_t started_;
};

hs::Vec2 parse_point(const std::string& s) {
    std::istringstream in(s);
    hs::Vec2 p;
    char comma = 0;
    if (!(in >> p.x >> comma >> p.y) || comma != ',') throw hs::ConfigError("point '" + s + "' is not of the form x,y");
    return p;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ','))
        try {
            v.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw hs::ConfigError("bad number '" + tok + "' in list");
        }
    return v;
}

struct Globals {
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out;
};

fs::path out_dir(const Globals& g) {
    if (g.out.empty()) throw hs::ConfigError("--out is required");
    fs::create_directories(g.out);
    return g.out;
}

int cmd_domain(const Globals& g, const std::string& spec_path, Manifest& m) {
    const std::string bytes = slurp(spec_path);
    m.config(bytes);
    const hs::GridDomain d = hs::build_domain(read_spec(spec_path));
    const fs::path dir = out_dir(g);
    hs::write_mask_pgm(d, (dir / "mask.pgm").string());
    write_json(dir / "meta.json", hs::domain_meta(d));
    m.output(dir / "mask.pgm");
    m.output(dir / "meta.json");
    m.write(dir);
    return 0;
}

int cmd_solve(const Globals& g, const std::string& spec_path, const std::string& bc, int k, Manifest& m) {
    m.config(slurp(spec_path));
    const hs::DomainSpec spec = read_spec(spec_path);
    const hs::BcMode mode = hs::parse_bc_mode(bc);
    if (mode == hs::BcMode::Mixed && spec.overrides.empty())
        throw hs::ConfigError("--bc mixed needs a wall label map (bc_overrides) in the domain spec");
    if (k < 1) throw hs::ConfigError("--k must be >= 1");
    const hs::GridDomain d = hs::build_domain(spec);
    const hs::SpectralResult r = hs::solve_eigs(hs::assemble_laplacian(d, mode), k);
    const fs::path dir = out_dir(g);
    {
        std::ofstream f(dir / "eigs.csv");
        f << "index,eigenvalue,residual\n";
        f.precision(12);
        for (int i = 0; i < r.count(); ++i) f << i + 1 << ',' << r.eigenvalues[i] << ',' << r.residuals[i] << '\n';
    }
    m.output(dir / "eigs.csv");
    for (int i = 0; i < r.count(); ++i) {
        const std::string stem = "phi_" + std::to_string(i + 1);
        hs::write_field_pgm(d, r.eigenfields[i], (dir / (stem + ".pgm")).string());
        hs::write_eigen_csv(d, r.eigenfields[i], (dir / (stem + ".csv")).string());
        m.output(dir / (stem + ".pgm"));
        m.output(dir / (stem + ".csv"));
    }
    json meta = r.meta();
    meta["domain"] = hs::domain_meta(d);
    write_json(dir / "solve.json", meta);
    m.output(dir / "solve.json");
    m.write(dir);
    return 0;
}

struct WalkArgs {
    std::string spec, mode = "kill", target = "boundary", trace;
    std::vector<std::string> starts;
    double t = 0, dt = 0;
    long paths = 10000;
    int trace_paths = 0;
    std::string law = "specular";
    bool no_bridge = false;
};

int cmd_walk(const Globals& g, const WalkArgs& a, Manifest& m) {
    m.config(slurp(a.spec));
    const hs::GridDomain d = hs::build_domain(read_spec(a.spec));
    const hs::WalkMode mode = hs::parse_walk_mode(a.mode);
    if (a.starts.empty()) throw hs::ConfigError("walk needs at least one --start");
    if (a.trace_paths < 0 || a.trace_paths > 100) throw hs::ConfigError("--trace-paths must lie in [0, 100]");

    hs::WalkSetup s;
    s.mode = mode;
    hs::Field level_field;
    json target_json = a.target;
    if (a.target == "boundary") {
        s.target = hs::Target::boundary();
    } else if (a.target.rfind("levelset:", 0) == 0) {
        double eta;
        try {
            eta = std::stod(a.target.substr(9));
        } catch (const std::exception&) {
            throw hs::ConfigError("bad level in --target " + a.target);
        }
        const hs::BcMode bm = mode == hs::WalkMode::Kill     ? hs::BcMode::Dirichlet
                              : mode == hs::WalkMode::Reflect ? hs::BcMode::Neumann
                                                              : hs::BcMode::Mixed;
        const auto r = hs::solve_eigs(hs::assemble_laplacian(d, bm), bm == hs::BcMode::Neumann ? 3 : 2);
        level_field = hs::normalized(d, r.eigenfields[bm == hs::BcMode::Neumann ? 1 : 0]);
        s.target = hs::Target::field_above(level_field, eta);
        target_json = {{"kind", "levelset"}, {"eta", eta}, {"field", hs::to_string(bm)}, {"eigenvalue", r.eigenvalues[bm == hs::BcMode::Neumann ? 1 : 0]}};
    } else if (a.target.rfind("mask:", 0) == 0) {
        int w = 0, h = 0;
        const auto px = hs::read_pgm(a.target.substr(5), w, h);
        if (w != d.nx || h != d.ny) throw hs::ConfigError("target mask size does not match the domain raster");
        std::vector<std::uint8_t> mask(d.kind.size(), 0);
        for (int j = 0; j < h; ++j)
            for (int i = 0; i < w; ++i) mask[d.index(i, h - 1 - j)] = px[static_cast<std::size_t>(j) * w + i] != 0;
        s.target = hs::Target::node_mask(std::move(mask));
    } else {
        throw hs::ConfigError("--target must be boundary, levelset:<eta> or mask:<file>");
    }

    json records = json::array();
    std::vector<std::vector<hs::Vec2>> traces;
    for (std::size_t k = 0; k < a.starts.size(); ++k) {
        hs::PathConfig cfg;
        cfg.t_max = a.t;
        cfg.dt = a.dt;
        cfg.n_paths = a.paths;
        cfg.seed = g.seed + k;
        cfg.bridge_correction = !a.no_bridge;
        if (a.law == "project") cfg.reflect_law = hs::ReflectLaw::Project;
        else if (a.law != "specular") throw hs::ConfigError("--reflect-law must be specular or project");
        const hs::Vec2 x = parse_point(a.starts[k]);
        if (!d.contains(x)) throw hs::ConfigError("start " + a.starts[k] + " lies outside the domain");
        cfg.start = {x};
        m.seed(cfg.seed);
        std::vector<std::vector<hs::Vec2>> tr;
        const auto out = hs::simulate(d, s, cfg, &tr, k == 0 ? a.trace_paths : 0);
        if (k == 0) traces = std::move(tr);
        std::vector<double> hit(out.size()), killed(out.size());
        std::vector<hs::StoppingSample> samples(out.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            hit[i] = out[i].reason == hs::ExitReason::HitTarget;
            killed[i] = out[i].reason == hs::ExitReason::Killed;
            samples[i] = {out[i].reason == hs::ExitReason::HitTarget, out[i].T, out[i].reason};
        }
        hs::PathEstimate e = hs::summarize(hit);
        e.seed = cfg.seed;
        e.dt = hs::effective_dt(d, cfg);
        if (a.target == "boundary") {
            e.bias_budget = hs::bias_budget(e.dt, cfg.bridge_correction, hs::dist_to_boundary(x, d));
            e.bias_note = "absorption step bias at the start's boundary distance";
        }
        double tsum = 0;
        long nh = 0;
        for (const auto& sm : samples)
            if (sm.hit) tsum += sm.T, ++nh;
        records.push_back({{"start", {x.x, x.y}},
                           {"mode", hs::to_string(mode)},
                           {"target", target_json},
                           {"t", a.t},
                           {"hit_probability", e.to_json()},
                           {"killed_fraction", hs::summarize(killed).mean},
                           {"mean_hit_time", nh ? json(tsum / nh) : json(nullptr)},
                           {"bridge_correction", cfg.bridge_correction}});
    }
    const json doc = {{"domain", {{"name", d.name}, {"hash", d.hash}}}, {"estimates", records}};
    if (g.out.empty()) {
        std::cout << doc.dump(2) << '\n';
        if (!a.trace.empty()) throw hs::ConfigError("--trace needs --out");
        return 0;
    }
    const fs::path dir = out_dir(g);
    write_json(dir / "walk.json", doc);
    m.output(dir / "walk.json");
    if (!traces.empty()) {
        const fs::path tp = dir / (a.trace.empty() ? "trace.csv" : a.trace);
        std::ofstream f(tp);
        f << "path,step,x,y\n";
        f.precision(10);
        for (std::size_t p = 0; p < traces.size(); ++p)
            for (std::size_t k = 0; k < traces[p].size(); ++k)
                f << p << ',' << k << ',' << traces[p][k].x << ',' << traces[p][k].y << '\n';
        m.output(tp);
    }
    m.write(dir);
    return 0;
}

int cmd_theta(int n, double c, double p, bool inverse) {
    json j;
    if (inverse) {
        const double v = hs::theta::theta_inverse(n, p);
        const auto back = hs::theta::theta(n, v);
        j = {{"value", v}, {"truncation_error", back.truncation_error}, {"terms", back.terms_used}, {"n", n}, {"p", p}};
    } else {
        const auto v = hs::theta::theta(n, c);
        j = {{"value", v.p}, {"truncation_error", v.truncation_error}, {"terms", v.terms_used}, {"n", n}, {"c", c}};
    }
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_verify(const Globals& g, const std::string& config, const std::string& filter, Manifest& m) {
    const std::string bytes = slurp(config);
    m.config(bytes);
    json cfg;
    try {
        cfg = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw hs::ConfigError(config + ": " + e.what());
    }
    if (!cfg.contains("seed")) cfg["seed"] = g.seed;
    m.seed(cfg["seed"].get<std::uint64_t>());
    const fs::path dir = out_dir(g);
    const auto res = hs::run_battery(cfg, dir.string(), filter);
    for (const auto& f : hs::bundle_files(res)) m.output(dir / f);
    m.write(dir);
    std::cerr << res.reports.size() << " reports: " << res.count(hs::Verdict::Pass) << " pass, "
              << res.count(hs::Verdict::Fail) << " fail, " << res.count(hs::Verdict::Inconclusive) << " inconclusive\n";
    for (const auto& r : res.reports)
        if (r.verdict == hs::Verdict::Fail) std::cerr << "fail: " << r.id << " lhs=" << r.lhs << " rhs=" << r.rhs << '\n';
    return res.any_fail() ? 1 : 0;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

void level_set_plot(const hs::GridDomain& d, const hs::Field& u, const std::vector<double>& etas,
                    const std::string& title, const fs::path& path) {
    svg::Plot p(title, "x", "y");
    p.equal_aspect();
    for (const auto& s : d.boundary) p.add({{s.a.x, s.b.x}, {s.a.y, s.b.y}, "#000000", "", false, true});
    for (std::size_t k = 0; k < etas.size(); ++k) {
        const auto L = etas[k] == 0 ? hs::extract_level_absolute(d, u, 0.0) : hs::extract_level_set(d, u, etas[k]);
        bool first = true;
        for (const auto& pl : L.polylines) {
            svg::Series s;
            s.colour = kPalette[k % 6];
            s.markers = false;
            for (auto q : pl.pts) s.x.push_back(q.x), s.y.push_back(q.y);
            if (pl.closed && !pl.pts.empty()) s.x.push_back(pl.pts[0].x), s.y.push_back(pl.pts[0].y);
            if (first) s.label = "eta = " + svg::num(etas[k]);
            first = false;
            p.add(std::move(s));
        }
    }
    p.write(path.string());
}

int cmd_report(const Globals& g, const std::string& spec_path, const std::string& necks_s, Manifest& m) {
    m.config(slurp(spec_path));
    const hs::DomainSpec base = read_spec(spec_path);
    const fs::path dir = out_dir(g);
    hs::Workbench wb;
    const hs::GridDomain& d = wb.domain(base);
    const auto& rd = wb.spectrum(d, hs::BcMode::Dirichlet, 2);
    const auto& rn = wb.spectrum(d, hs::BcMode::Neumann, 3);
    level_set_plot(d, hs::normalized(d, rd.eigenfields[0]), {0.25, 0.5, 0.75, 0.9},
                   "Dirichlet ground state level sets: " + d.name, dir / "levelsets_dirichlet.svg");
    level_set_plot(d, hs::normalized(d, rn.eigenfields[1]), {0.0, 0.25, 0.5, 0.75},
                   "Second Neumann eigenfunction level sets: " + d.name, dir / "levelsets_neumann.svg");
    m.output(dir / "levelsets_dirichlet.svg");
    m.output(dir / "levelsets_neumann.svg");
    json data = {{"domain", d.name}, {"lambda1", rd.eigenvalues[0]}, {"mu2", rn.eigenvalues[1]}};
    if (base.family == "dumbbell") {
        std::vector<double> necks = parse_list(necks_s);
        std::sort(necks.begin(), necks.end(), std::greater<>());
        const std::vector<double> c_grid{0.5, 1, 2, 4, 8, 16, 32, 64};
        std::vector<double> mu, sig, ratio, bound;
        for (double nw : necks) {
            hs::DomainSpec s = base;
            s.params["neck_width"] = nw;
            s.name = base.name + "_neck" + svg::num(nw);
            const auto rep = hs::check_hot_spot_constant(wb, wb.domain(s), c_grid);
            mu.push_back(rep.data["mu2"]);
            sig.push_back(rep.data["sigma"]);
            ratio.push_back(rep.lhs);
            bound.push_back(rep.rhs);
        }
        svg::Plot pm("Second Neumann eigenvalue against neck width", "neck width", "mu_2");
        pm.add({necks, mu, kPalette[0], "mu_2"});
        pm.write((dir / "mu2_vs_neck.svg").string());
        svg::Plot ph("Hot-spot ratio and bound against sigma = lambda_1/mu_2", "sigma", "sup|u| / sup_boundary|u|");
        ph.add({sig, ratio, kPalette[0], "measured ratio"});
        ph.add({sig, bound, kPalette[1], "bound (c to infinity)"});
        ph.hline(1.0, "#888888");
        ph.write((dir / "hot_spot_vs_sigma.svg").string());
        m.output(dir / "mu2_vs_neck.svg");
        m.output(dir / "hot_spot_vs_sigma.svg");
        data["sweep"] = {{"neck_widths", necks}, {"mu2", mu}, {"sigma", sig}, {"ratio", ratio}, {"bound", bound}};
    }
    write_json(dir / "report.json", data);
    m.output(dir / "report.json");
    m.write(dir);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Eigenfunction level sets, hot spots and Brownian exit-time checks"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Base seed");
    app.add_option("--threads", g.threads, "Worker cap (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
    app.add_option("--out", g.out, "Output directory");
    app.set_version_flag("--version", kVersion);

    std::string spec_path;
    auto* domain = app.add_subcommand("domain", "Rasterize a domain spec to mask.pgm and meta.json");
    domain->add_option("--spec", spec_path, "Domain spec JSON")->required();

    std::string bc = "dirichlet";
    int k = 4;
    auto* solve = app.add_subcommand("solve", "Lowest eigenpairs: eigs.csv plus PGM heatmaps");
    solve->add_option("--domain,--spec", spec_path, "Domain spec JSON")->required();
    solve->add_option("--bc", bc, "dirichlet, neumann or mixed");
    solve->add_option("--k", k, "Number of eigenpairs");

    WalkArgs wa;
    auto* walk = app.add_subcommand("walk", "Monte Carlo hitting estimates from given starts");
    walk->add_option("--domain", wa.spec, "Domain spec JSON")->required();
    walk->add_option("--mode", wa.mode, "kill, reflect or mixed");
    walk->add_option("--start", wa.starts, "Start point x,y (repeatable)")->required();
    walk->add_option("--t", wa.t, "Time horizon")->required();
    walk->add_option("--dt", wa.dt, "Step (0 = automatic)");
    walk->add_option("--paths", wa.paths, "Number of paths");
    walk->add_option("--target", wa.target, "boundary, levelset:<eta> or mask:<file>");
    walk->add_option("--trace", wa.trace, "Trace CSV name inside --out");
    walk->add_option("--trace-paths", wa.trace_paths, "Paths to trace (at most 100)");
    walk->add_option("--reflect-law", wa.law, "specular or project");
    walk->add_flag("--no-bridge", wa.no_bridge, "Disable the bridge correction");

    int n = 2;
    double c = 1, p = 0.5;
    auto* theta = app.add_subcommand("theta", "Ball exit probability Theta_n(c)");
    theta->require_subcommand(1);
    auto* teval = theta->add_subcommand("eval", "Theta_n(c)");
    teval->add_option("--n", n)->required();
    teval->add_option("--c", c)->required();
    auto* tinv = theta->add_subcommand("inv", "Smallest c with Theta_n(c) = p");
    tinv->add_option("--n", n)->required();
    tinv->add_option("--p", p)->required();

    std::string config, filter;
    auto* verify = app.add_subcommand("verify", "Run an inequality battery");
    verify->require_subcommand(1);
    auto* vrun = verify->add_subcommand("run", "Run checks and write the report bundle");
    vrun->add_option("--config", config, "Battery JSON")->required();
    vrun->add_option("--filter", filter, "Keep checks whose id or type contains this");

    std::string necks = "0.4,0.2,0.1,0.05";
    auto* report = app.add_subcommand("report", "SVG figures: level sets, mu_2 against neck width, hot-spot ratio against sigma");
    report->add_option("--domain,--spec", spec_path, "Domain spec JSON")->required();
    report->add_option("--necks", necks, "Neck widths for a dumbbell sweep");

    for (auto* sub : {domain, solve, walk, teval, tinv, vrun, report}) sub->fallthrough();
    theta->fallthrough();
    verify->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (g.threads > 0) omp_set_num_threads(g.threads);
    Manifest m(argc, argv);
    try {
        if (*domain) return cmd_domain(g, spec_path, m);
        if (*solve) return cmd_solve(g, spec_path, bc, k, m);
        if (*walk) return cmd_walk(g, wa, m);
        if (*teval) return cmd_theta(n, c, 0, false);
        if (*tinv) return cmd_theta(n, 0, p, true);
        if (*vrun) return cmd_verify(g, config, filter, m);
        if (*report) return cmd_report(g, spec_path, necks, m);
    } catch (const hs::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const hs::NonConvergence& e) {
        std::cerr << "non-convergence: " << e.what() << " (achieved " << e.achieved << ")\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
