#include "hs/errors.hpp"
#include "hs/verify.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

namespace hs {

namespace {

std::uint64_t check_seed(std::uint64_t base, const std::string& id) {
    // FNV-1a of the id, so filtering never shifts another check's stream.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : id) h = (h ^ c) * 1099511628211ull;
    std::uint64_t z = base + h + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return (z ^ (z >> 31)) & 0x7fffffffffffull;
}

template <class T>
T get(const nlohmann::json& c, const char* key) {
    if (!c.contains(key)) throw ConfigError("check '" + c.value("id", std::string("?")) + "': missing '" + key + "'");
    try {
        return c.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("check '" + c.value("id", std::string("?")) + "': bad '" + key + "': " + e.what());
    }
}

template <class T>
T get_or(const nlohmann::json& c, const char* key, T fallback) {
    return c.contains(key) ? get<T>(c, key) : fallback;
}

DomainSpec named_spec(const nlohmann::json& domains, const std::string& name) {
    if (!domains.contains(name)) throw ConfigError("unknown domain '" + name + "'");
    nlohmann::json j = domains.at(name);
    if (!j.contains("name")) j["name"] = name;
    return DomainSpec::from_json(j);
}

std::string fmt(double v) {
    if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string o = "\"";
    for (char c : s) o += c == '"' ? std::string("\"\"") : std::string(1, c);
    return o + "\"";
}

std::vector<TheoremReport> run_check(Workbench& wb, const nlohmann::json& domains, const nlohmann::json& c,
                                     std::uint64_t seed) {
    const std::string type = get<std::string>(c, "check");
    McBudget mc;
    mc.n_paths = get_or<long>(c, "n_paths", mc.n_paths);
    mc.dt_fraction = get_or<double>(c, "dt_fraction", mc.dt_fraction);
    mc.seed = seed;
    if (type == "escape_bound")
        return {check_escape_bound(wb, get<std::string>(c, "domain"), get<std::vector<double>>(c, "alphas"),
                                   get<std::vector<double>>(c, "t_lambda"), mc)};
    if (type == "level_set_distance") {
        std::vector<std::pair<double, double>> pairs;
        for (const auto& p : get<std::vector<std::vector<double>>>(c, "mu_eta")) {
            if (p.size() != 2) throw ConfigError("mu_eta entries are [mu, eta] pairs");
            pairs.emplace_back(p[0], p[1]);
        }
        std::vector<TheoremReport> out;
        for (const auto& m : get_or<std::vector<std::string>>(c, "modes", {"dirichlet"}))
            out.push_back(check_level_set_distance(wb, get<std::string>(c, "domain"), parse_bc_mode(m), pairs));
        return out;
    }
    if (type == "inner_radius")
        return check_inner_radius_2d(wb, get<std::string>(c, "calibration"), get<std::vector<std::string>>(c, "domains"),
                                     get_or<double>(c, "eta", 0.5), get_or<double>(c, "slack", 0.8));
    if (type == "superlevel_narrowness") {
        std::vector<TheoremReport> out;
        for (const auto& m : get_or<std::vector<std::string>>(c, "modes", {"dirichlet"}))
            out.push_back(check_superlevel_narrowness(wb, get<std::string>(c, "domain"), parse_bc_mode(m),
                                                      get<std::vector<double>>(c, "etas")));
        return out;
    }
    if (type == "mixed_hitting")
        return {check_mixed_hitting_bound(wb, get<std::string>(c, "domain"), get<double>(c, "nu"), get<double>(c, "eta"),
                                          get<double>(c, "tau_mu"), mc)};
    if (type == "hot_spot_constant")
        return {check_hot_spot_constant(wb, wb.domain(get<std::string>(c, "domain")),
                                        get<std::vector<double>>(c, "c_grid"))};
    if (type == "hot_spot_sweep")
        return check_hot_spot_sweep(wb, named_spec(domains, get<std::string>(c, "base")),
                                    get<std::vector<double>>(c, "neck_widths"), get<std::vector<double>>(c, "c_grid"),
                                    get_or<double>(c, "near_one", 0.1));
    if (type == "neumann_nondecay")
        return {check_neumann_nondecay(wb, get<std::string>(c, "domain"), get_or<double>(c, "eta", 0.0),
                                       get_or<double>(c, "tolerance", 0.05))};
    if (type == "dumbbell_spectrum")
        return check_dumbbell_spectrum(wb, named_spec(domains, get<std::string>(c, "base")),
                                       get<std::vector<double>>(c, "neck_widths"));
    if (type == "equilibration")
        return check_equilibration(wb, get<std::string>(c, "domain"), get<std::vector<double>>(c, "t_mu"),
                                   get_or<bool>(c, "lower_bound", false));
    if (type == "convex_max")
        return check_convex_max(wb, get<std::vector<std::string>>(c, "domains"), get_or<int>(c, "pairs", 200), seed);
    throw ConfigError("unknown check type '" + type + "'");
}

} // namespace

bool BatteryResult::any_fail() const { return count(Verdict::Fail) > 0; }

int BatteryResult::count(Verdict v) const {
    int n = 0;
    for (const auto& r : reports) n += r.verdict == v;
    return n;
}

BatteryResult run_battery(const nlohmann::json& config, const std::string& out_dir, const std::string& filter) {
    if (!config.is_object()) throw ConfigError("battery config must be a JSON object");
    const nlohmann::json domains = config.value("domains", nlohmann::json::object());
    const std::uint64_t seed = config.value("seed", std::uint64_t{1});
    Workbench wb(domains);
    BatteryResult res;
    std::set<std::string> seen;
    for (const auto& c : config.value("checks", nlohmann::json::array())) {
        const std::string id = get<std::string>(c, "id"), type = get<std::string>(c, "check");
        if (!seen.insert(id).second) throw ConfigError("duplicate check id '" + id + "'");
        if (!filter.empty() && id.find(filter) == std::string::npos && type.find(filter) == std::string::npos) continue;
        const std::uint64_t s = c.contains("seed") ? c.at("seed").get<std::uint64_t>() : check_seed(seed, id);
        auto reps = run_check(wb, domains, c, s);
        for (auto& r : reps) {
            r.id = id + "." + r.id;
            r.inputs["seed"] = s;
            if (c.contains("tolerance_override")) {
                const double t = get<double>(c, "tolerance_override");
                r.inputs["computed_tolerance"] = r.tol.total();
                r.tol = Tolerance{};
                r.tol.grid = t;
                r.note += std::string(r.note.empty() ? "" : "; ") + "tolerance overridden by config";
                r.decide();
            }
            res.reports.push_back(std::move(r));
        }
    }
    if (out_dir.empty()) return res;

    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "checks");
    {
        std::ofstream csv(fs::path(out_dir) / "summary.csv");
        csv << "id,check,domain,lhs,rhs,margin,tolerance,verdict\n";
        for (const auto& r : res.reports)
            csv << csv_field(r.id) << ',' << r.check << ',' << csv_field(r.domain) << ',' << fmt(r.lhs) << ','
                << fmt(r.rhs) << ',' << fmt(r.margin()) << ',' << fmt(r.tol.total()) << ',' << to_string(r.verdict)
                << '\n';
    }
    nlohmann::json summary;
    summary["reports"] = nlohmann::json::array();
    for (const auto& r : res.reports) {
        summary["reports"].push_back(r.summary_json());
        std::ofstream(fs::path(out_dir) / "checks" / (r.id + ".json")) << r.to_json().dump(2) << '\n';
    }
    summary["counts"] = {{"pass", res.count(Verdict::Pass)},
                         {"fail", res.count(Verdict::Fail)},
                         {"inconclusive", res.count(Verdict::Inconclusive)}};
    std::ofstream(fs::path(out_dir) / "summary.json") << summary.dump(2) << '\n';
    return res;
}

std::vector<std::string> bundle_files(const BatteryResult& r) {
    std::vector<std::string> f{"summary.csv", "summary.json"};
    for (const auto& rep : r.reports) f.push_back("checks/" + rep.id + ".json");
    return f;
}

} // namespace hs
