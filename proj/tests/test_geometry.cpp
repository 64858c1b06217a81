#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "hs/errors.hpp"
#include "hs/geometry.hpp"
#include "hs/levelset.hpp"
#include "support.hpp"

using namespace hs;

TEST_CASE("unit square raster") {
    const GridDomain d = build_domain(test::square(32));
    CHECK(d.h == doctest::Approx(1.0 / 32));
    CHECK(d.interior_count() == 31 * 31);
    CHECK(d.area() == doctest::Approx(1.0));
    CHECK(diameter(d) == doctest::Approx(std::sqrt(2.0) * 30 / 32));
    CHECK(d.contains({0.5, 0.5}));
    CHECK_FALSE(d.contains({1.2, 0.5}));
    CHECK(dist_to_boundary({0.5, 0.5}, d) == doctest::Approx(0.5));
    CHECK(dist_to_boundary({0.1, 0.7}, d) == doctest::Approx(0.1));
    CHECK_THROWS_AS(dist_to_boundary({2, 2}, d), ConfigError);
    for (std::size_t k = 0; k < d.kind.size(); ++k)
        if (d.kind[k] == NodeKind::Boundary) CHECK(d.node_bc[k] == Bc::Dirichlet);
}

TEST_CASE("disk area and symmetry") {
    DomainSpec s;
    s.family = "disk";
    s.params = {{"radius", 1.0}};
    s.resolution = 128;
    const GridDomain d = build_domain(s);
    CHECK(std::abs(d.area() - M_PI) < 2 * M_PI * d.h);
    // Mirror symmetry of the interior mask in both axes.
    for (int j = 0; j < d.ny; ++j)
        for (int i = 0; i < d.nx; ++i) {
            const Vec2 p = d.node_pos(i, j);
            const int im = static_cast<int>(std::lround((-p.x - d.origin.x) / d.h));
            REQUIRE(im >= 0);
            REQUIRE(im < d.nx);
            CHECK(d.interior(i, j) == d.interior(im, j));
        }
}

TEST_CASE("dumbbell submasks are disjoint and cover the lobes") {
    const GridDomain d = build_domain(test::spec("dumbbell"));
    const auto& L = d.submasks.at("left");
    const auto& R = d.submasks.at("right");
    const auto& N = d.submasks.at("neck");
    int nl = 0, nr = 0;
    for (std::size_t k = 0; k < L.size(); ++k) {
        CHECK(L[k] + R[k] + N[k] <= 1);
        nl += L[k];
        nr += R[k];
    }
    CHECK(nl == nr);
    CHECK(nl > 0);
    CHECK(d.contains({1.25, 0.5}));
    CHECK_FALSE(d.contains({1.25, 0.2}));
}

TEST_CASE("too narrow a neck for the resolution is a config error") {
    DomainSpec s = test::spec("dumbbell");
    s.params["neck_width"] = 0.05;
    CHECK_THROWS_AS(build_domain(s), ConfigError);
}

TEST_CASE("octopus tentacle submask lies beyond the body") {
    const GridDomain d = build_domain(test::spec("octopus"));
    const auto& t = d.submasks.at("tentacle0");
    int n = 0;
    for (std::size_t k = 0; k < t.size(); ++k)
        if (t[k]) {
            ++n;
            CHECK(d.node_pos(static_cast<int>(k)).x > 0.5 - 1e-12);
        }
    CHECK(n > 100);
}

TEST_CASE("spec errors surface as ConfigError") {
    CHECK_THROWS_AS(DomainSpec::from_json({{"params", {{"width", 1}}}}), ConfigError);
    CHECK_THROWS_AS(build_domain(DomainSpec::from_json({{"family", "blob"}})), ConfigError);
    CHECK_THROWS_AS(DomainSpec::from_json({{"family", "rectangle"}, {"params", {{"width", -1}}}}), ConfigError);
    CHECK_THROWS_AS(build_domain(DomainSpec::from_json({{"family", "rectangle"}, {"resolution", 8}})), ConfigError);
}

TEST_CASE("spec roundtrip and hash determinism") {
    const DomainSpec s = test::spec("dumbbell");
    const DomainSpec back = DomainSpec::from_json(s.to_json());
    CHECK(back.to_json() == s.to_json());
    const GridDomain a = build_domain(s), b = build_domain(back);
    CHECK(a.hash == b.hash);
    DomainSpec finer = s;
    finer.resolution = 160;
    CHECK(build_domain(finer).hash != a.hash);
}

TEST_CASE("wall labels follow side overrides") {
    const GridDomain d = build_domain(test::quarter_mode_square(16));
    int dir = 0, neu = 0;
    for (std::size_t k = 0; k < d.boundary.size(); ++k) {
        const auto& s = d.boundary[k];
        const bool left = std::abs(s.a.x) < 1e-12 && std::abs(s.b.x) < 1e-12;
        CHECK((d.boundary_bc[k] == Bc::Dirichlet) == left);
        (d.boundary_bc[k] == Bc::Dirichlet ? dir : neu)++;
    }
    CHECK(dir >= 1);
    CHECK(neu >= 3);
    // A boundary node is Dirichlet as soon as one incident wall is.
    CHECK(d.node_bc[d.index(0, 0)] == Bc::Dirichlet);
    CHECK(d.node_bc[d.index(0, d.ny / 2)] == Bc::Dirichlet);
    CHECK(d.node_bc[d.index(d.nx - 1, d.ny / 2)] == Bc::Neumann);
    CHECK(d.node_bc[d.index(d.nx / 2, 0)] == Bc::Neumann);
}

TEST_CASE("connected components") {
    std::vector<std::uint8_t> m = {1, 1, 0, 1,  //
                                   0, 0, 0, 1,  //
                                   1, 0, 1, 1};
    int n = 0;
    const auto lab = label_components(m, 4, 3, n);
    CHECK(n == 3);
    CHECK(lab[0] == lab[1]);
    CHECK(lab[3] == lab[11]);
    CHECK(lab[2] == -1);
}

TEST_CASE("segment distances") {
    CHECK(point_segment_distance({0, 1}, {{-1, 0}, {1, 0}}) == doctest::Approx(1));
    CHECK(point_segment_distance({3, 4}, {{0, 0}, {0, 0}}) == doctest::Approx(5));
    CHECK(segment_distance({{0, 0}, {1, 1}}, {{0, 1}, {1, 0}}) == 0);
    CHECK(segment_distance({{0, 0}, {1, 0}}, {{0, 2}, {1, 2}}) == doctest::Approx(2));
}

TEST_CASE("level sets of a linear field are straight lines") {
    const GridDomain d = build_domain(test::square(40));
    Field f(d.kind.size(), 0.0);
    for (std::size_t k = 0; k < f.size(); ++k)
        if (d.kind[k] != NodeKind::Outside) f[k] = d.node_pos(static_cast<int>(k)).x;
    const auto a = extract_level_set(d, f, 0.3), b = extract_level_set(d, f, 0.7);
    REQUIRE_FALSE(a.empty());
    for (const auto& pl : a.polylines)
        for (Vec2 p : pl.pts) CHECK(p.x == doctest::Approx(0.3));
    CHECK(*set_distance(a, b) == doctest::Approx(0.4));
    CHECK_THROWS_AS(extract_level_set(d, f, 1.5), ConfigError);
    CHECK_FALSE(set_distance(a.segments(), std::vector<Segment>{}).has_value());
    CHECK(a.n_components == 1);
    CHECK(bilinear(d, f, {0.4321, 0.77}) == doctest::Approx(0.4321));
}

TEST_CASE("PGM roundtrip") {
    const GridDomain d = build_domain(test::square(20));
    const auto path = (std::filesystem::temp_directory_path() / "hs_mask_test.pgm").string();
    write_mask_pgm(d, path);
    int w = 0, h = 0;
    const auto px = read_pgm(path, w, h);
    CHECK(w == d.nx);
    CHECK(h == d.ny);
    int on = 0;
    for (auto v : px) on += v != 0;
    CHECK(on == d.interior_count());
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_pgm(path, w, h), ConfigError);
}
