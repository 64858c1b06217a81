#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hs/errors.hpp"
#include "hs/theta.hpp"
#include "support.hpp"

using namespace hs::theta;

TEST_CASE("bessel zeros match the reference table") {
    for (auto& [key, zs] : test::frozen().at("bessel_zeros").items()) {
        const double nu = std::stod(key);
        const auto got = bessel_zeros(nu, 5);
        REQUIRE(got.size() == 5);
        for (int k = 0; k < 5; ++k) CHECK(got[k] == doctest::Approx(zs[k].get<double>()).epsilon(1e-12));
    }
}

TEST_CASE("bessel_j at half-integer order uses the closed forms") {
    for (double x : {0.3, 2.0, 11.9, 5000.3}) {
        CHECK(bessel_j(0.5, x) == doctest::Approx(std::sqrt(2 / (M_PI * x)) * std::sin(x)).epsilon(1e-10));
        CHECK(bessel_j(-0.5, x) == doctest::Approx(std::sqrt(2 / (M_PI * x)) * std::cos(x)).epsilon(1e-10));
    }
    CHECK(bessel_j(0, 2.404825557695773) == doctest::Approx(0).epsilon(1e-12));
}

TEST_CASE("series against the reference series") {
    for (const auto& e : test::frozen().at("theta")) {
        const int n = e.at("n");
        const double c = e.at("c"), p = e.at("p");
        const auto v = theta(n, c);
        INFO("n=" << n << " c=" << c);
        CHECK(std::abs(v.p - p) <= 1e-11 + v.truncation_error);
        CHECK(v.truncation_error >= 0);
        CHECK(v.truncation_error < 1e-10);
        CHECK(v.terms_used >= 1);
    }
}

TEST_CASE("one-dimensional series agrees with the interval exit formula") {
    for (const auto& e : test::frozen().at("theta_1d_closed_form"))
        CHECK(theta(1, e.at("c")).p == doctest::Approx(e.at("p").get<double>()).epsilon(1e-11));
}

TEST_CASE("Theta is a probability, decreasing in c and increasing in n") {
    for (int n : {1, 2, 3, 4}) {
        double prev = 1.0;
        for (double c = 0.05; c < 200; c *= 1.3) {
            const double p = theta(n, c).p;
            CHECK(p >= 0);
            CHECK(p <= 1);
            // 1 - (survival series) carries ~1e-13 absolute rounding once Theta is tiny.
            CHECK(p <= prev + 1e-12);
            prev = p;
            if (n > 1) CHECK(theta(n - 1, c).p <= p + 1e-12);
        }
    }
    CHECK(theta(2, 1e4).p == doctest::Approx(0.0));
}

TEST_CASE("log survival stays finite where 1 - Theta underflows") {
    for (const auto& e : test::frozen().at("log_survival"))
        CHECK(log_survival(e.at("n"), e.at("c")) == doctest::Approx(e.at("value").get<double>()).epsilon(1e-9));
    for (double c : {1.0, 4.0, 16.0}) CHECK(log_survival(2, c) == doctest::Approx(std::log1p(-theta(2, c).p)));
}

TEST_CASE("inverse against the reference and as a roundtrip") {
    for (const auto& e : test::frozen().at("theta_inverse"))
        CHECK(theta_inverse(2, e.at("p")) == doctest::Approx(e.at("c").get<double>()).epsilon(1e-9));
    for (int n : {1, 2, 3})
        for (double c : {0.7, 1.5, 3.0, 9.0, 25.0}) {
            const double back = theta_inverse(n, theta(n, c).p);
            CHECK(std::abs(back - c) / c < 1e-8);
        }
    CHECK_THROWS_AS(theta_inverse(2, 0.0), hs::ConfigError);
    CHECK_THROWS_AS(theta_inverse(2, 1.5), hs::ConfigError);
}

TEST_CASE("closed-form bounds refuse inputs outside their range") {
    CHECK_THROWS_AS(theta_bound_gamma(2, 7.9, 0.1), hs::ConfigError);
    CHECK_THROWS_AS(theta_bound_reflection(3, 2.9), hs::ConfigError);
    CHECK(theta_bound_gamma(2, 8, 0.1) == doctest::Approx(1.1 * std::exp(-2.0)));
    CHECK(theta_bound_reflection(2, 2) == doctest::Approx(8 / M_PI * std::exp(-1.0)));
    CHECK(cube_escape(1, 4) == doctest::Approx(2 * normal_cdf(-2)));
}

TEST_CASE("normal cdf") {
    CHECK(normal_cdf(0) == 0.5);
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    CHECK(normal_cdf(-40) >= 0);
}
