#pragma once
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hs/brownian.hpp"
#include "hs/geometry.hpp"
#include "hs/levelset.hpp"
#include "hs/spectral.hpp"

namespace hs {

enum class Verdict { Pass, Fail, Inconclusive };
std::string to_string(Verdict v);

struct Tolerance {
    double stderr_ = 0;      // already multiplied by the sigma gate
    double grid = 0;
    double truncation = 0;
    double bias = 0;
    double total() const { return stderr_ + grid + truncation + bias; }
};

/// One inequality instantiated on one domain. margin = rhs - lhs; pass iff margin >= -tolerance.
/// Inconclusive is reserved for failed preconditions.
struct TheoremReport {
    std::string id;
    std::string check;
    std::string claim;
    std::string domain;
    std::string domain_hash;
    double lhs = 0, rhs = 0;   // rhs may be +inf for an empty constraint set
    std::string lhs_source, rhs_source;  // spectral, mc, theta, analytic
    Tolerance tol;
    Verdict verdict = Verdict::Pass;
    bool vacuous = false;
    nlohmann::json inputs = nlohmann::json::object();
    nlohmann::json data = nlohmann::json::object();
    std::string note;

    double margin() const { return rhs - lhs; }
    Verdict recompute() const;
    /// Sets verdict from lhs/rhs/tolerance unless the report is inconclusive.
    void decide();
    nlohmann::json to_json() const;
    nlohmann::json summary_json() const;
};

/// Caches domains and spectra shared between checks.
class Workbench {
public:
    explicit Workbench(nlohmann::json domains = nlohmann::json::object());
    const GridDomain& domain(const std::string& name);
    const GridDomain& domain(const DomainSpec& spec);
    /// At least k pairs; a cached solve with more pairs is returned as is.
    const SpectralResult& spectrum(const GridDomain& d, BcMode mode, int k);
    bool has_domain(const std::string& name) const { return specs_.contains(name); }

private:
    nlohmann::json specs_;
    std::map<std::string, std::unique_ptr<GridDomain>> domains_;
    std::map<std::string, SpectralResult> spectra_;
};

/// Ground state with a positive maximum, or the second Neumann field with its given sign,
/// divided by its sup norm.
Field normalized(const GridDomain& d, const Field& f);

/// Max |u| over the boundary nodes of P.
double boundary_trace_sup(const GridDomain& d, const Field& u);

/// kappa = inf over b of sqrt(-b ln(eta (1 - Theta_2(b)))) / sqrt(c2), c2 = 1, on a log grid.
double kappa(double eta, double b_min = 1e-2, double b_max = 1e2, int points = 64);

/// min over a t0 grid in (-ln(eta/mu), 10] of sqrt((t0/lambda) Theta_2^{-1}(1 - e^{-t0} mu/eta)).
double level_distance_bound(double mu, double eta, double lambda, int points = 64);

/// Hot-spot bound as c -> infinity: min over admissible eps of 1 + zeta_2(eps)/(sigma(1-eps)-1).
/// Returns +inf when sigma <= 1.
double hot_spot_bound_limit(double sigma, int points = 64, double* eps_best = nullptr);

/// Same bound at finite c, minimized over both grids; +inf if no grid point is admissible.
double hot_spot_bound_finite(double sigma, const std::vector<double>& c_grid, int points = 64);

struct McBudget {
    long n_paths = 20000;
    double dt_fraction = 1.0 / 400;  // dt = fraction * t
    std::uint64_t seed = 1;
};

TheoremReport check_escape_bound(Workbench& wb, const std::string& domain, const std::vector<double>& alphas,
                                 const std::vector<double>& t_lambda, const McBudget& mc);

TheoremReport check_level_set_distance(Workbench& wb, const std::string& domain, BcMode mode,
                                       const std::vector<std::pair<double, double>>& mu_eta);

/// c = dist(L_eta, boundary) sqrt(lambda_1) on each domain, against 0.8 c on the calibration domain.
std::vector<TheoremReport> check_inner_radius_2d(Workbench& wb, const std::string& calibration,
                                                 const std::vector<std::string>& domains, double eta,
                                                 double slack = 0.8);

TheoremReport check_superlevel_narrowness(Workbench& wb, const std::string& domain, BcMode mode,
                                          const std::vector<double>& etas);

TheoremReport check_mixed_hitting_bound(Workbench& wb, const std::string& domain, double nu, double eta,
                                        double tau_mu, const McBudget& mc);

TheoremReport check_hot_spot_constant(Workbench& wb, const GridDomain& d, const std::vector<double>& c_grid);

/// Dumbbell sweep: one hot-spot report per neck plus monotonicity of sigma and of the bound, and
/// the narrowest ratio within `near_one` of 1.
std::vector<TheoremReport> check_hot_spot_sweep(Workbench& wb, const DomainSpec& base,
                                                const std::vector<double>& necks,
                                                const std::vector<double>& c_grid, double near_one = 0.1);

/// eta <= 0 means the level through the centre of the tentacle mouth.
TheoremReport check_neumann_nondecay(Workbench& wb, const std::string& domain, double eta, double tol = 0.05);

std::vector<TheoremReport> check_dumbbell_spectrum(Workbench& wb, const DomainSpec& base,
                                                   const std::vector<double>& necks);

std::vector<TheoremReport> check_equilibration(Workbench& wb, const std::string& domain,
                                               const std::vector<double>& t_mu, bool lower_bound);

/// Unique argmax cluster and midpoint log-concavity of q_t. Log-concavity is only asserted on
/// rectangles and disks; other families get an inconclusive report.
std::vector<TheoremReport> check_convex_max(Workbench& wb, const std::vector<std::string>& domains, int pairs,
                                            std::uint64_t seed);

struct BatteryResult {
    std::vector<TheoremReport> reports;
    bool any_fail() const;
    int count(Verdict v) const;
};

/// Runs the checks listed in a battery config. A non-empty filter keeps checks whose id or
/// type contains it. Writes summary.csv, summary.json and checks/<id>.json when out_dir is set.
BatteryResult run_battery(const nlohmann::json& config, const std::string& out_dir = "",
                          const std::string& filter = "");

/// Written output files of the last bundle, relative to out_dir.
std::vector<std::string> bundle_files(const BatteryResult& r);

} // namespace hs
