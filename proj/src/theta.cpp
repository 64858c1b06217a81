#include "hs/theta.hpp"
#include "hs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

namespace hs::theta {

namespace {

constexpr double pi = std::numbers::pi;

bool is_half(double nu, double v) { return std::abs(nu - v) < 1e-15; }

// J_nu'(x) = (nu/x) J_nu(x) - J_{nu+1}(x); valid for every order we use.
double bessel_j_prime(double nu, double x) {
    return nu / x * bessel_j(nu, x) - bessel_j(nu + 1.0, x);
}

double mcmahon(double nu, int m) {
    const double beta = (m + nu / 2.0 - 0.25) * pi;
    const double mu = 4.0 * nu * nu;
    const double e = 8.0 * beta;
    return beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e * e * e) -
           32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * std::pow(e, 5));
}

double newton_zero(double nu, double guess) {
    double x = guess;
    for (int it = 0; it < 100; ++it) {
        const double f = bessel_j(nu, x);
        const double step = f / bessel_j_prime(nu, x);
        x -= step;
        if (std::abs(step) < 1e-15 * x && std::abs(bessel_j(nu, x)) < 1e-12) return x;
        if (std::abs(step) < 1e-15 * x) break;
    }
    const double r = std::abs(bessel_j(nu, x));
    if (r < 1e-12) return x;
    throw NonConvergence("bessel_zeros: Newton stalled for nu=" + std::to_string(nu) +
                             " near x=" + std::to_string(guess),
                         r);
}

// Zeros and series coefficients per order, grown on demand under a lock.
struct Table {
    std::vector<double> zeros;
    std::vector<double> coef;
};

std::mutex table_mutex;
std::map<double, Table> tables;

void extend_zeros(double nu, std::vector<double>& z, int k) {
    while (static_cast<int>(z.size()) < k) {
        const int m = static_cast<int>(z.size()) + 1;
        if (is_half(nu, -0.5)) {
            z.push_back((m - 0.5) * pi);
            continue;
        }
        if (is_half(nu, 0.5)) {
            z.push_back(m * pi);
            continue;
        }
        double guess;
        if (m == 1 && nu > 2.0)
            guess = nu + 1.8557571 * std::cbrt(nu) + 1.033150 / std::cbrt(nu);
        else if (m > 1 && nu > 2.0 && m < 4)
            guess = z.back() + pi;
        else
            guess = mcmahon(nu, m);
        double x = newton_zero(nu, guess);
        const double prev = z.empty() ? 0.0 : z.back();
        if (!(x > prev + 1.0) || x > prev + 1.5 * pi + (z.empty() ? nu + 2.0 : 0.0)) {
            // Newton jumped to a neighbour: walk from the previous zero to the next sign change.
            double a = prev + 1e-3, fa = bessel_j(nu, a);
            double b = a;
            for (;;) {
                b = a + 0.05;
                const double fb = bessel_j(nu, b);
                if (fa * fb < 0) break;
                a = b;
                fa = fb;
            }
            x = newton_zero(nu, 0.5 * (a + b));
        }
        z.push_back(x);
    }
}

// Caller holds table_mutex.
const Table& table_for(double nu, int k) {
    Table& t = tables[nu];
    if (static_cast<int>(t.zeros.size()) < k) {
        extend_zeros(nu, t.zeros, k);
        const double norm = std::pow(2.0, nu - 1.0) * std::tgamma(nu + 1.0);
        for (std::size_t i = t.coef.size(); i < t.zeros.size(); ++i) {
            const double j = t.zeros[i];
            t.coef.push_back(std::pow(j, nu - 1.0) / (norm * bessel_j(nu + 1.0, j)));
        }
    }
    return t;
}

} // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double bessel_j(double nu, double x) {
    if (is_half(nu, -0.5)) return std::sqrt(2.0 / (pi * x)) * std::cos(x);
    if (is_half(nu, 0.5)) return std::sqrt(2.0 / (pi * x)) * std::sin(x);
    if (nu < 0) throw ConfigError("bessel_j: order must be >= -1/2");
    return std::cyl_bessel_j(nu, x);
}

std::vector<double> bessel_zeros(double nu, int k) {
    if (k < 1) throw ConfigError("bessel_zeros: k must be >= 1");
    if (nu < -0.5) throw ConfigError("bessel_zeros: order must be >= -1/2");
    std::lock_guard<std::mutex> lock(table_mutex);
    const Table& t = table_for(nu, k);
    return {t.zeros.begin(), t.zeros.begin() + k};
}

ThetaValue theta(int n, double c) {
    if (n < 1) throw ConfigError("theta: n must be >= 1");
    if (!(c > 0) || !std::isfinite(c)) throw ConfigError("theta: c must be positive and finite");
    const double nu = n / 2.0 - 1.0;
    // Terms die once j^2/c exceeds ~40 (plus polynomial growth of |a_k| for large n).
    const double jmax = std::sqrt(c * (40.0 + std::max(0.0, nu) * std::log(c + 1.0))) + nu + 4.0;
    const double kneed = jmax / pi + 2.0;
    if (kneed > 1e6)
        throw ConfigError("theta: c=" + std::to_string(c) +
                          " needs more than 1e6 series terms; the c -> infinity limit is 0");
    const int kmax = static_cast<int>(kneed);
    std::lock_guard<std::mutex> lock(table_mutex);
    const Table& tab = table_for(nu, kmax);
    const double turn = c * std::max(0.0, nu - 0.5) / 2.0;

    ThetaValue out;
    double survival = 0.0;
    for (int m = 0; m < kmax; ++m) {
        const double j = tab.zeros[m];
        const double term = tab.coef[m] * std::exp(-j * j / c);
        if (std::abs(term) < 1e-12 && j * j >= turn) {
            out.truncation_error = std::abs(term);
            break;
        }
        survival += term;
        out.terms_used = m + 1;
    }
    out.p = std::clamp(1.0 - survival, 0.0, 1.0);
    return out;
}

double log_survival(int n, double c) {
    const ThetaValue v = theta(n, c);
    if (1.0 - v.p > 1e-3) return std::log1p(-v.p);
    // Small c: factor out the leading term so nothing underflows.
    const double nu = n / 2.0 - 1.0;
    std::lock_guard<std::mutex> lock(table_mutex);
    const Table& tab = table_for(nu, 12);
    const double j1 = tab.zeros[0];
    double rest = 0.0;
    for (int m = 1; m < 12; ++m) {
        const double j = tab.zeros[m];
        rest += tab.coef[m] / tab.coef[0] * std::exp(-(j * j - j1 * j1) / c);
    }
    return std::log(tab.coef[0]) - j1 * j1 / c + std::log1p(rest);
}

double theta_bound_gamma(int n, double c, double eps) {
    if (c < 4.0 * n) throw ConfigError("theta_bound_gamma: requires c >= 4n");
    return (1.0 + eps) / std::tgamma(n / 2.0) * std::pow(c, n / 2.0 - 1.0) * std::exp(-c / 4.0);
}

double theta_bound_reflection(int n, double c) {
    if (c < n) throw ConfigError("theta_bound_reflection: requires c >= n");
    return std::pow(2.0, 1.5 * n) / std::pow(pi, n / 2.0) * std::exp(-c / 2.0);
}

double cube_escape(int n, double c) {
    return std::pow(2.0 * normal_cdf(-std::sqrt(c / n)), n);
}

double theta_inverse(int n, double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("theta_inverse: p must lie in (0,1)");
    double lo = 1e-6, hi = 1e6;
    while (theta(n, lo).p <= p && lo > 1e-300) lo /= 10.0;
    while (theta(n, hi).p >= p && hi < 1e11) hi *= 10.0;
    for (int it = 0; it < 400 && hi / lo > 1.0 + 1e-15; ++it) {
        const double mid = std::sqrt(lo * hi);
        const double v = theta(n, mid).p;
        if (v == p) return mid;
        if (v > p)
            lo = mid;
        else
            hi = mid;
    }
    return std::sqrt(lo * hi);
}

} // namespace hs::theta
