#pragma once
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "hs/geometry.hpp"
#include "hs/levelset.hpp"
#include "hs/spectral.hpp"

namespace hs {

/// How walls act on a path: Kill treats every wall as absorbing, Reflect as reflecting,
/// Mixed uses the per-wall labels of the domain.
enum class WalkMode { Kill, Reflect, Mixed };
std::string to_string(WalkMode m);
WalkMode parse_walk_mode(const std::string& s);
WalkMode walk_mode_for(BcMode m);

/// Specular mirrors the overshoot back in; Project drops its normal part and keeps sliding.
enum class ReflectLaw { Specular, Project };

struct PathConfig {
    double dt = 0;          // 0 picks min(h^2/4, t_max/1000)
    double t_max = 0;
    long n_paths = 10000;
    std::uint64_t seed = 1;
    bool bridge_correction = true;
    ReflectLaw reflect_law = ReflectLaw::Specular;
    std::vector<Vec2> start;  // path i starts at start[i % size]
};

/// Resolved step for a run; throws ConfigError on an invalid configuration.
double effective_dt(const GridDomain& d, const PathConfig& cfg);

struct PathEstimate {
    double mean = 0;
    double stderr_ = 0;
    long n_paths = 0;
    std::uint64_t seed = 0;
    double dt = 0;
    double bias_budget = 0;  // 0 when no budget applies
    std::string bias_note;

    nlohmann::json to_json() const;
};

/// Sample mean and stderr (std with n-1 over sqrt n).
PathEstimate summarize(const std::vector<double>& values);

enum class ExitReason { HitTarget, Killed, Horizon };
std::string to_string(ExitReason r);

struct StoppingSample {
    bool hit = false;
    double T = 0;  // first-hit time when hit, else the time the path stopped
    ExitReason exit_reason = ExitReason::Horizon;
};

/// Set a path is trying to reach. A Boundary target means the absorbing walls themselves.
struct Target {
    enum class Kind { None, Boundary, NodeMask, FieldAbove, Disk, Far };
    Kind kind = Kind::None;
    std::vector<std::uint8_t> mask;  // NodeMask: nearest node decides
    const Field* field = nullptr;    // FieldAbove: bilinear value >= level
    double level = 0;
    Vec2 centre;                     // Disk: |x - centre| <= radius; Far: |x - start| >= radius
    double radius = 0;

    static Target none() { return {}; }
    static Target boundary();
    static Target node_mask(std::vector<std::uint8_t> m);
    static Target field_above(const Field& f, double level);
    static Target disk(Vec2 c, double r);
    static Target far_from_start(double r);
    bool empty() const;
};

/// Extra absorption inside the domain, e.g. at a nodal line: killed once the bilinear
/// value of the field drops to the level or below.
struct InnerKill {
    const Field* field = nullptr;
    double level = 0;
};

struct WalkSetup {
    WalkMode mode = WalkMode::Kill;
    Target target;
    InnerKill inner_kill;
    const Field* occupation_field = nullptr;  // accumulate time with field > occupation_level
    double occupation_level = 0;
    bool stop_at_target = true;
};

struct PathOutcome {
    ExitReason reason = ExitReason::Horizon;
    double T = 0;
    Vec2 end;
    double occupation = 0;
};

/// Runs cfg.n_paths independent paths. Path i draws from a stream seeded by (seed, i), so the
/// outcome vector does not depend on the thread count. Optional traces record the first
/// trace_paths paths (positions after every step).
std::vector<PathOutcome> simulate(const GridDomain& d, const WalkSetup& setup, const PathConfig& cfg,
                                  std::vector<std::vector<Vec2>>* traces = nullptr, int trace_paths = 0);

/// One path step inside P. Walls that reflect send the remaining displacement back
/// specularly, at most eight times, then fall back to the nearest interior node.
Vec2 reflect_step(Vec2 pos, Vec2 proposed, const GridDomain& d);

/// Systematic absorption bias of a step dt at distance ell from the absorbing set.
double bias_budget(double dt, bool bridge, double ell);

PathEstimate hit_probability(const GridDomain& d, const Target& target, WalkMode mode, const PathConfig& cfg);

/// Probability that a path killed on every wall survives to time t.
PathEstimate survival_probability(const GridDomain& d, Vec2 x, double t, PathConfig cfg);

struct FeynmanKacEstimate {
    PathEstimate estimate;
    double exact = 0;   // e^{-lambda t} phi(x)
    double z = 0;       // (mean - exact) / stderr
    double residual = 0;
    bool within(double sigmas = 3) const;
    nlohmann::json to_json() const;
};

/// E_x[phi(w_t) 1{alive}] against e^{-lambda t} phi(x). Paths follow the boundary behaviour of
/// the result: killed for Dirichlet, reflected for Neumann, labelled walls for Mixed.
FeynmanKacEstimate feynman_kac(const GridDomain& d, const SpectralResult& r, int index, Vec2 x, double t,
                               PathConfig cfg);

std::vector<StoppingSample> stopping_time_to_set(const GridDomain& d, const Target& target, WalkMode mode,
                                                 const PathConfig& cfg);

/// E[e^{rate T} 1{hit, T <= cap}]; cap is recorded in the bias note.
PathEstimate truncated_exp_moment(const std::vector<StoppingSample>& s, double rate, double cap);

struct HeatContentEstimate {
    PathEstimate estimate;
    double spectral = 0;   // from the survival profile, when a result is given
    bool has_spectral = false;
    int starts = 0;        // strata
    nlohmann::json to_json() const;
};

/// Integral of p_t over P, stratified over stride x stride blocks of cells with uniform starts
/// inside each block. The spectral value integrates the bilinear interpolant of 1 - q_t.
HeatContentEstimate heat_content(const GridDomain& d, double t, PathConfig cfg, int stride = 4,
                                 const SpectralResult* dirichlet = nullptr);

struct DecayEstimate {
    double lambda = 0;
    double stderr_ = 0;
    std::vector<double> t_grid;
    std::vector<double> survival;
    double chi2_per_dof = 0;
    bool asymptotic = true;
    std::string diagnostic;
    long n_paths = 0;
    std::uint64_t seed = 0;
    double dt = 0;
    nlohmann::json to_json() const;
};

/// Slope of -ln S(t), S the survival fraction of paths started uniformly in P, killed on
/// Dirichlet walls and reflected elsewhere. Requires at least one Dirichlet wall.
DecayEstimate mixed_eigenvalue_via_decay(const GridDomain& d, const PathConfig& cfg, std::vector<double> t_grid);

/// Free-space exit from the ball of radius sqrt(c) within unit time, dimension n. Steps adapt
/// to the distance from the sphere (never below step_floor) with a half-space bridge test.
PathEstimate ball_exit_probability(int n, double c, long n_paths, std::uint64_t seed, double step_floor = 1e-4);

/// Mean squared displacement of free planar paths after time t with the walker's increments.
PathEstimate free_msd(double t, double dt, long n_paths, std::uint64_t seed);

/// Deterministic per-path generator.
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t index);

} // namespace hs
