#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hs/errors.hpp"
#include "hs/verify.hpp"
#include "support.hpp"

using namespace hs;
namespace fs = std::filesystem;

namespace {

Workbench bench() { return Workbench(test::battery().at("domains")); }

nlohmann::json config_with(std::initializer_list<nlohmann::json> checks) {
    return {{"seed", 7}, {"domains", test::battery().at("domains")}, {"checks", nlohmann::json(checks)}};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

const nlohmann::json level_square = {{"id", "lvl"},
                                     {"check", "level_set_distance"},
                                     {"domain", "square"},
                                     {"modes", {"dirichlet"}},
                                     {"mu_eta", {{0.9, 0.5}}}};

} // namespace

TEST_CASE("kappa, level bound and hot-spot limit against the reference") {
    for (const auto& e : test::frozen().at("kappa"))
        CHECK(kappa(e.at("eta")) == doctest::Approx(e.at("kappa").get<double>()).epsilon(2e-3));
    for (const auto& e : test::frozen().at("level_bound_square"))
        CHECK(level_distance_bound(e.at("mu"), e.at("eta"), e.at("lambda")) ==
              doctest::Approx(e.at("rhs").get<double>()).epsilon(2e-3));
    for (const auto& e : test::frozen().at("hot_spot_limit"))
        CHECK(hot_spot_bound_limit(e.at("sigma")) == doctest::Approx(e.at("bound").get<double>()).epsilon(2e-3));
    CHECK(std::isinf(hot_spot_bound_limit(0.9)));
    // More c values can only lower the finite-c bound, and it never beats the limit.
    const double few = hot_spot_bound_finite(4.0, {1, 4}), many = hot_spot_bound_finite(4.0, {1, 4, 16, 64});
    CHECK(many <= few);
    CHECK(many >= hot_spot_bound_limit(4.0) - 1e-9);
}

TEST_CASE("verdict logic and serialisation") {
    TheoremReport r;
    r.lhs = 1.0;
    r.rhs = 0.95;
    r.tol.grid = 0.04;
    CHECK(r.recompute() == Verdict::Fail);
    r.tol.stderr_ = 0.02;
    CHECK(r.recompute() == Verdict::Pass);
    r.rhs = std::numeric_limits<double>::infinity();
    CHECK(r.recompute() == Verdict::Pass);
    const auto j = r.to_json();
    CHECK(j.at("rhs").at("value").is_null());
    CHECK(j.at("margin").is_null());
    r.verdict = Verdict::Inconclusive;
    r.rhs = -5;
    CHECK(r.recompute() == Verdict::Inconclusive);
    CHECK(to_string(Verdict::Inconclusive) == "inconclusive");
}

TEST_CASE("level-set distance against the separable and radial references") {
    Workbench wb = bench();
    const auto& ref = test::frozen().at("level_distance_analytic");
    for (auto [name, mode] : {std::pair{"square", BcMode::Dirichlet}, {"square", BcMode::Neumann},
                              {"disk", BcMode::Dirichlet}, {"disk", BcMode::Neumann}}) {
        const auto& cases = ref.at(std::string(name) + "_" + to_string(mode));
        std::vector<std::pair<double, double>> me;
        for (const auto& c : cases) me.push_back({c.at("mu"), c.at("eta")});
        const TheoremReport r = check_level_set_distance(wb, name, mode, me);
        CHECK(r.verdict == Verdict::Pass);
        const double h = wb.domain(name).h;
        for (std::size_t k = 0; k < me.size(); ++k) {
            INFO(name << " " << to_string(mode) << " mu=" << me[k].first);
            CHECK(std::abs(r.data.at("cases")[k].at("lhs").get<double>() - cases[k].at("distance").get<double>()) < h);
        }
    }
}

TEST_CASE("equal levels are at distance zero") {
    Workbench wb = bench();
    const TheoremReport r = check_level_set_distance(wb, "square", BcMode::Dirichlet, {{0.6, 0.6}});
    CHECK(r.lhs == 0);
    CHECK(r.verdict == Verdict::Pass);
}

TEST_CASE("distances scale with the domain") {
    Workbench wb = bench();
    for (auto [a, b] : {std::pair{"square", "square2"}, {"dumbbell", "dumbbell2"}})
        for (BcMode m : {BcMode::Dirichlet, BcMode::Neumann}) {
            const double d1 = check_level_set_distance(wb, a, m, {{0.9, 0.5}}).lhs;
            const double d2 = check_level_set_distance(wb, b, m, {{0.9, 0.5}}).lhs;
            INFO(a << " " << to_string(m) << " " << d1 << " " << d2);
            CHECK(std::abs(d2 / (2 * d1) - 1) < 0.02);
        }
}

TEST_CASE("inner radius calibration on the square") {
    Workbench wb = bench();
    const auto reps = check_inner_radius_2d(wb, "square", {"disk", "square2"}, 0.5, 0.8);
    REQUIRE(reps.size() == 2);
    const double c = test::frozen().at("inner_radius_square").at("c");
    for (const auto& r : reps) {
        CHECK(r.data.at("c_floor").get<double>() == doctest::Approx(c).epsilon(0.01));
        CHECK(r.verdict == Verdict::Pass);
    }
    CHECK(reps[1].data.at("c_measured").get<double>() == doctest::Approx(c).epsilon(0.01));
    CHECK(reps[0].data.at("c_measured").get<double>() ==
          doctest::Approx(test::frozen().at("disk").at("inner_radius_c").get<double>()).epsilon(0.02));
}

TEST_CASE("hot spot on the square sits on the boundary") {
    Workbench wb = bench();
    const TheoremReport r = check_hot_spot_constant(wb, wb.domain("square"), {1, 4, 16, 64});
    CHECK(r.lhs == doctest::Approx(1.0));
    CHECK(r.data.at("sigma").get<double>() == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(r.rhs == doctest::Approx(test::frozen().at("hot_spot_limit")[0].at("bound").get<double>()).epsilon(2e-3));
    CHECK(r.verdict == Verdict::Pass);
}

TEST_CASE("escape bound holds at the maximum") {
    Workbench wb = bench();
    McBudget mc;
    mc.n_paths = 10000;
    mc.seed = 3;
    const TheoremReport r = check_escape_bound(wb, "square", {1.0}, {0.2}, mc);
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.rhs == doctest::Approx(1 - std::exp(-0.2)));
}

TEST_CASE("mixed hitting carries both readings") {
    Workbench wb = bench();
    McBudget mc;
    mc.n_paths = 4000;
    mc.seed = 5;
    mc.dt_fraction = 1.0 / 1600;
    const TheoremReport r = check_mixed_hitting_bound(wb, "square", 0.2, 0.8, 0.3, mc);
    for (const char* k : {"hit_estimate", "occupation_estimate", "optional_stopping_form", "occupation_form", "mu2"})
        CHECK(r.data.contains(k));
    CHECK(r.data.at("optional_stopping_form").at("rhs").get<double>() == doctest::Approx(0.25));
    CHECK(r.data.at("occupation_form").at("pass").get<bool>());
    CHECK(r.data.at("hit_estimate").at("seed").get<std::uint64_t>() == 5);
    CHECK_FALSE(r.note.empty());
}

TEST_CASE("tentacle non-decay and its counter-case") {
    Workbench wb = bench();
    const TheoremReport ok = check_neumann_nondecay(wb, "octopus", 0, 0.05);
    CHECK(ok.verdict == Verdict::Pass);
    CHECK(ok.data.at("dirichlet_axis_min_over_eta").get<double>() < 1);
    const TheoremReport bad = check_neumann_nondecay(wb, "octopus_small_body", 0, 0.05);
    CHECK(bad.verdict == Verdict::Inconclusive);
    CHECK(bad.data.at("nodal_points_in_tentacle").get<int>() > 0);
}

TEST_CASE("equilibration is slower through a narrow neck") {
    Workbench wb = bench();
    DomainSpec wide = test::spec("dumbbell_narrow");
    wide.name = "dumbbell_wide";
    wide.params["neck_width"] = 0.4;
    const double mu_narrow = wb.spectrum(wb.domain("dumbbell_narrow"), BcMode::Neumann, 2).eigenvalues[1];
    const double mu_wide = wb.spectrum(wb.domain(wide), BcMode::Neumann, 2).eigenvalues[1];
    CHECK(mu_narrow < mu_wide);
    const auto reps = check_equilibration(wb, "dumbbell_narrow", {0.5, 1, 2}, true);
    REQUIRE(reps.size() == 2);
    for (const auto& r : reps) CHECK(r.verdict == Verdict::Pass);
}

TEST_CASE("convex maximum, with a non-convex control") {
    Workbench wb = bench();
    const auto reps = check_convex_max(wb, {"square", "dumbbell"}, 50, 9);
    int inconclusive = 0;
    for (const auto& r : reps) {
        if (r.domain == "square") CHECK(r.verdict == Verdict::Pass);
        inconclusive += r.verdict == Verdict::Inconclusive;
    }
    CHECK(inconclusive == 1);
}

TEST_CASE("battery runner: empty, filter, errors") {
    CHECK(run_battery(config_with({})).reports.empty());
    const auto cfg = config_with({level_square, {{"id", "hot"}, {"check", "hot_spot_constant"}, {"domain", "square"}, {"c_grid", {1, 8}}}});
    const auto only = run_battery(cfg, "", "lvl");
    REQUIRE(only.reports.size() == 1);
    CHECK(only.reports[0].id == "lvl.level_set_distance.square.dirichlet");
    CHECK(run_battery(cfg, "", "nothing_matches").reports.empty());
    CHECK_THROWS_AS(run_battery(config_with({level_square, level_square})), ConfigError);
    CHECK_THROWS_AS(run_battery(config_with({{{"id", "x"}, {"check", "no_such_check"}}})), ConfigError);
    CHECK_THROWS_AS(run_battery(config_with({{{"id", "x"}, {"check", "level_set_distance"}}})), ConfigError);
}

TEST_CASE("a too-tight tolerance override turns a pass red") {
    nlohmann::json c = level_square;
    c["mu_eta"] = {{0.6, 0.6}};
    c["tolerance_override"] = -1.0;
    const auto r = run_battery(config_with({c}));
    REQUIRE(r.reports.size() == 1);
    CHECK(r.any_fail());
    CHECK(r.reports[0].note.find("overridden") != std::string::npos);
}

TEST_CASE("bundles are byte-identical across runs") {
    const fs::path root = fs::temp_directory_path() / "hs_verify_bundle";
    fs::remove_all(root);
    const auto cfg = config_with({level_square, {{"id", "esc"}, {"check", "escape_bound"}, {"domain", "square"},
                                                 {"alphas", {0.5}}, {"t_lambda", {0.3}}, {"n_paths", 2000}}});
    const auto a = run_battery(cfg, (root / "a").string());
    const auto b = run_battery(cfg, (root / "b").string());
    const auto files = bundle_files(a);
    CHECK(files == bundle_files(b));
    CHECK(files.size() == 4);
    for (const auto& f : files) {
        INFO(f);
        CHECK(slurp(root / "a" / f) == slurp(root / "b" / f));
    }
    fs::remove_all(root);
}
