#pragma once
#include <vector>

// Ball first-exit probability for Brownian motion generated by the Laplacian
// (per-coordinate variance 2t), plus the special functions it needs.
namespace hs::theta {

struct ThetaValue {
    double p = 0;                 // probability of leaving B(0,r) before time t
    double truncation_error = 0;  // bound on the dropped tail of the series
    int terms_used = 0;
};

double normal_cdf(double x);

/// J_nu(x) for nu >= -1/2. nu = -1/2 and nu = 1/2 use the trigonometric forms.
double bessel_j(double nu, double x);

/// First k positive zeros of J_nu, ascending. Throws NonConvergence if Newton stalls.
std::vector<double> bessel_zeros(double nu, int k);

/// Theta_n(c) with c = r^2/t.
ThetaValue theta(int n, double c);

/// ln(1 - Theta_n(c)), accurate where the survival underflows (small c).
double log_survival(int n, double c);

/// (1+eps)/Gamma(n/2) * c^(n/2-1) * exp(-c/4); requires c >= 4n.
double theta_bound_gamma(int n, double c, double eps);

/// 2^(3n/2)/pi^(n/2) * exp(-c/2); requires c >= n.
double theta_bound_reflection(int n, double c);

/// (2 Phi(-sqrt(c/n)))^n, the cube-escape expression behind the reflection bound.
double cube_escape(int n, double c);

/// Smallest c with Theta_n(c) = p, by bisection in log c.
double theta_inverse(int n, double p);

} // namespace hs::theta
