#include "hs/brownian.hpp"
#include "hs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

namespace hs {

std::string to_string(WalkMode m) {
    switch (m) {
    case WalkMode::Kill: return "kill";
    case WalkMode::Reflect: return "reflect";
    default: return "mixed";
    }
}

WalkMode parse_walk_mode(const std::string& s) {
    if (s == "kill" || s == "dirichlet") return WalkMode::Kill;
    if (s == "reflect" || s == "neumann") return WalkMode::Reflect;
    if (s == "mixed") return WalkMode::Mixed;
    throw ConfigError("unknown walk mode '" + s + "' (kill, reflect, mixed)");
}

WalkMode walk_mode_for(BcMode m) {
    switch (m) {
    case BcMode::Dirichlet: return WalkMode::Kill;
    case BcMode::Neumann: return WalkMode::Reflect;
    default: return WalkMode::Mixed;
    }
}

std::string to_string(ExitReason r) {
    switch (r) {
    case ExitReason::HitTarget: return "hit_target";
    case ExitReason::Killed: return "killed";
    default: return "horizon";
    }
}

Target Target::boundary() {
    Target t;
    t.kind = Kind::Boundary;
    return t;
}
Target Target::node_mask(std::vector<std::uint8_t> m) {
    Target t;
    t.kind = Kind::NodeMask;
    t.mask = std::move(m);
    return t;
}
Target Target::field_above(const Field& f, double level) {
    Target t;
    t.kind = Kind::FieldAbove;
    t.field = &f;
    t.level = level;
    return t;
}
Target Target::disk(Vec2 c, double r) {
    Target t;
    t.kind = Kind::Disk;
    t.centre = c;
    t.radius = r;
    return t;
}
Target Target::far_from_start(double r) {
    Target t;
    t.kind = Kind::Far;
    t.radius = r;
    return t;
}
bool Target::empty() const {
    switch (kind) {
    case Kind::None: return true;
    case Kind::NodeMask: return std::find(mask.begin(), mask.end(), 1) == mask.end();
    case Kind::FieldAbove: return field == nullptr;
    case Kind::Disk: return !(radius >= 0);
    case Kind::Far: return !(radius > 0);
    default: return false;
    }
}

nlohmann::json PathEstimate::to_json() const {
    return {{"mean", mean}, {"stderr", stderr_}, {"n_paths", n_paths}, {"seed", seed},
            {"dt", dt}, {"bias_budget", bias_budget}, {"bias_note", bias_note}};
}

PathEstimate summarize(const std::vector<double>& v) {
    PathEstimate e;
    e.n_paths = static_cast<long>(v.size());
    if (v.empty()) return e;
    double s = 0;
    for (double x : v) s += x;
    e.mean = s / v.size();
    if (v.size() > 1) {
        double q = 0;
        for (double x : v) q += (x - e.mean) * (x - e.mean);
        e.stderr_ = std::sqrt(q / (v.size() - 1) / v.size());
    }
    return e;
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 of a combined counter
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + index + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return std::mt19937_64(z);
}

double bias_budget(double dt, bool bridge, double ell) {
    if (!(ell > 0)) return 0;
    return (bridge ? 0.1 : 1.0) * 0.5826 * std::sqrt(2 * dt) / ell;
}

double effective_dt(const GridDomain& d, const PathConfig& cfg) {
    if (cfg.t_max < 0) throw ConfigError("t_max must be non-negative");
    if (cfg.n_paths < 100) throw ConfigError("n_paths must be at least 100");
    double dt = cfg.dt;
    if (dt == 0) dt = cfg.t_max > 0 ? std::min(d.h * d.h / 4, cfg.t_max / 1000) : d.h * d.h / 4;
    if (!(dt > 0)) throw ConfigError("dt must be positive");
    if (cfg.t_max > 0 && dt > cfg.t_max / 10 * (1 + 1e-12))
        throw ConfigError("dt must not exceed t_max/10");
    return dt;
}

namespace {

constexpr int max_reflections = 8;

class Walker {
public:
    Walker(const GridDomain& d, WalkMode mode, double dt, bool bridge, ReflectLaw law)
        : d_(d), mode_(mode), dt_(dt), bridge_(bridge), law_(law) {
        if (mode_ == WalkMode::Reflect || !bridge_) return;
        for (std::size_t s = 0; s < d.boundary.size(); ++s)
            if (mode_ == WalkMode::Kill || d.boundary_bc[s] == Bc::Dirichlet) kill_.push_back(d.boundary[s]);
        // Per-cell candidate lists: segments within reach of any point of the cell.
        const int cx = d.nx - 1, cy = d.ny - 1;
        const double reach = 6.4 * std::sqrt(dt) + 0.75 * d.h;
        std::vector<std::vector<int>> lists(static_cast<std::size_t>(cx) * cy);
        for (int s = 0; s < static_cast<int>(kill_.size()); ++s) {
            const Segment& g = kill_[s];
            const int i0 = std::max(0, static_cast<int>(std::floor((std::min(g.a.x, g.b.x) - reach - d.origin.x) / d.h)));
            const int i1 = std::min(cx - 1, static_cast<int>(std::floor((std::max(g.a.x, g.b.x) + reach - d.origin.x) / d.h)));
            const int j0 = std::max(0, static_cast<int>(std::floor((std::min(g.a.y, g.b.y) - reach - d.origin.y) / d.h)));
            const int j1 = std::min(cy - 1, static_cast<int>(std::floor((std::max(g.a.y, g.b.y) + reach - d.origin.y) / d.h)));
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) {
                    if (!d.cell_in(i, j)) continue;
                    const Vec2 c = d.node_pos(i, j) + Vec2{0.5 * d.h, 0.5 * d.h};
                    if (point_segment_distance(c, g) <= reach) lists[j * cx + i].push_back(s);
                }
        }
        start_.assign(lists.size() + 1, 0);
        for (std::size_t c = 0; c < lists.size(); ++c) start_[c + 1] = start_[c] + static_cast<int>(lists[c].size());
        segs_.reserve(start_.back());
        for (const auto& l : lists) segs_.insert(segs_.end(), l.begin(), l.end());
    }

    bool locate(Vec2 p, int& ci, int& cj) const {
        const int i = static_cast<int>(std::floor((p.x - d_.origin.x) / d_.h));
        const int j = static_cast<int>(std::floor((p.y - d_.origin.y) / d_.h));
        for (int dj = 0; dj >= -1; --dj)
            for (int di = 0; di >= -1; --di)
                if (d_.cell_in(i + di, j + dj)) {
                    // accept points on the closed cell only
                    const Vec2 o = d_.node_pos(i + di, j + dj);
                    const double eps = 1e-12 * d_.h;
                    if (p.x >= o.x - eps && p.x <= o.x + d_.h + eps && p.y >= o.y - eps && p.y <= o.y + d_.h + eps) {
                        ci = i + di;
                        cj = j + dj;
                        return true;
                    }
                }
        return false;
    }

    // Moves p by disp inside P. Returns false when an absorbing wall is crossed; p is then the hit point.
    bool move(Vec2& p, int& ci, int& cj, Vec2 v) const {
        int reflections = 0;
        for (int guard = 0; guard < 4096; ++guard) {
            const Vec2 o = d_.node_pos(ci, cj);
            const double inf = std::numeric_limits<double>::infinity();
            double tx = inf, ty = inf;
            if (v.x > 0) tx = (o.x + d_.h - p.x) / v.x;
            else if (v.x < 0) tx = (o.x - p.x) / v.x;
            if (v.y > 0) ty = (o.y + d_.h - p.y) / v.y;
            else if (v.y < 0) ty = (o.y - p.y) / v.y;
            tx = std::max(tx, 0.0);
            ty = std::max(ty, 0.0);
            if (std::min(tx, ty) >= 1) {
                p = p + v;
                return true;
            }
            const bool xfirst = tx <= ty;
            const double tc = xfirst ? tx : ty;
            const Vec2 hit = p + tc * v;
            const Vec2 rest = (1 - tc) * v;
            if (xfirst) {
                const int step = v.x > 0 ? 1 : -1;
                if (d_.cell_in(ci + step, cj)) {
                    p = {v.x > 0 ? o.x + d_.h : o.x, hit.y};
                    ci += step;
                    v = rest;
                    continue;
                }
                const Bc wall = d_.vwall[cj * d_.nx + ci + (step > 0 ? 1 : 0)];
                p = {v.x > 0 ? o.x + d_.h : o.x, hit.y};
                if (kills(wall)) return false;
                v = rest;
                v.x = law_ == ReflectLaw::Specular ? -v.x : 0.0;
            } else {
                const int step = v.y > 0 ? 1 : -1;
                if (d_.cell_in(ci, cj + step)) {
                    p = {hit.x, v.y > 0 ? o.y + d_.h : o.y};
                    cj += step;
                    v = rest;
                    continue;
                }
                const Bc wall = d_.hwall[(cj + (step > 0 ? 1 : 0)) * (d_.nx - 1) + ci];
                p = {hit.x, v.y > 0 ? o.y + d_.h : o.y};
                if (kills(wall)) return false;
                v = rest;
                v.y = law_ == ReflectLaw::Specular ? -v.y : 0.0;
            }
            if (++reflections > max_reflections) break;
        }
        fallback(p + v, p, ci, cj);
        return true;
    }

    // Probability that the bridge between two positions touched an absorbing wall.
    double bridge_hit(Vec2 p0, int c0, Vec2 p1, int c1, double dt) const {
        if (kill_.empty()) return 0;
        double survive = 1;
        auto scan = [&](int c, int skip_cell) {
            for (int k = start_[c]; k < start_[c + 1]; ++k) {
                const int s = segs_[k];
                if (skip_cell >= 0 && listed(skip_cell, s)) continue;
                const double d0 = point_segment_distance(p0, kill_[s]);
                const double d1 = point_segment_distance(p1, kill_[s]);
                const double e = d0 * d1 / dt;
                if (e < 40) survive *= 1 - std::exp(-e);
            }
        };
        scan(c1, -1);
        if (c0 != c1) scan(c0, c1);
        return 1 - survive;
    }

    int cell_id(int ci, int cj) const { return cj * (d_.nx - 1) + ci; }

private:
    bool kills(Bc wall) const {
        switch (mode_) {
        case WalkMode::Kill: return true;
        case WalkMode::Reflect: return false;
        default: return wall != Bc::Neumann;
        }
    }

    bool listed(int c, int s) const {
        for (int k = start_[c]; k < start_[c + 1]; ++k)
            if (segs_[k] == s) return true;
        return false;
    }

    void fallback(Vec2 want, Vec2& p, int& ci, int& cj) const {
        const int i0 = static_cast<int>(std::lround((want.x - d_.origin.x) / d_.h));
        const int j0 = static_cast<int>(std::lround((want.y - d_.origin.y) / d_.h));
        double best = std::numeric_limits<double>::infinity();
        int bi = -1, bj = -1;
        for (int r = 0; r < std::max(d_.nx, d_.ny) && bi < 0; ++r)
            for (int j = j0 - r; j <= j0 + r; ++j)
                for (int i = i0 - r; i <= i0 + r; ++i) {
                    if (std::max(std::abs(i - i0), std::abs(j - j0)) != r || !d_.interior(i, j)) continue;
                    const double dist = norm(d_.node_pos(i, j) - want);
                    if (dist < best) best = dist, bi = i, bj = j;
                }
        if (bi < 0) return;
        p = d_.node_pos(bi, bj);
        ci = std::min(bi, d_.nx - 2);
        cj = std::min(bj, d_.ny - 2);
    }

    const GridDomain& d_;
    WalkMode mode_;
    double dt_;
    bool bridge_;
    ReflectLaw law_;
    std::vector<Segment> kill_;
    std::vector<int> start_, segs_;
};

bool in_target(const GridDomain& d, const Target& t, Vec2 p, Vec2 start) {
    switch (t.kind) {
    case Target::Kind::NodeMask: {
        const int i = static_cast<int>(std::lround((p.x - d.origin.x) / d.h));
        const int j = static_cast<int>(std::lround((p.y - d.origin.y) / d.h));
        if (i < 0 || j < 0 || i >= d.nx || j >= d.ny) return false;
        return t.mask[d.index(i, j)] != 0;
    }
    case Target::Kind::FieldAbove: return bilinear(d, *t.field, p) >= t.level;
    case Target::Kind::Disk: return norm(p - t.centre) <= t.radius;
    case Target::Kind::Far: return norm(p - start) >= t.radius;
    default: return false;
    }
}

using StartFn = std::function<Vec2(long, std::mt19937_64&)>;

std::vector<PathOutcome> run_paths(const GridDomain& d, const WalkSetup& setup, const PathConfig& cfg,
                                   const StartFn& start_of, std::vector<std::vector<Vec2>>* traces,
                                   int trace_paths) {
    const double dt = effective_dt(d, cfg);
    if (setup.target.kind == Target::Kind::NodeMask && setup.target.mask.size() != d.kind.size())
        throw ConfigError("target mask does not match the domain raster");
    const WalkMode mode = setup.target.kind == Target::Kind::Boundary && setup.mode == WalkMode::Reflect
                              ? WalkMode::Kill
                              : setup.mode;
    const Walker w(d, mode, dt, cfg.bridge_correction, cfg.reflect_law);
    const long n = cfg.n_paths;
    std::vector<PathOutcome> out(n);
    const bool boundary_target = setup.target.kind == Target::Kind::Boundary;
    if (traces) traces->assign(std::min<long>(trace_paths, n), {});

    std::string error;
#pragma omp parallel for schedule(dynamic, 64)
    for (long i = 0; i < n; ++i) {
        auto rng = path_rng(cfg.seed, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const Vec2 x0 = start_of(i, rng);
        Vec2 p = x0;
        int ci = 0, cj = 0;
        PathOutcome& o = out[i];
        std::vector<Vec2>* tr = (traces && i < trace_paths) ? &(*traces)[i] : nullptr;
        if (tr) tr->push_back(p);
        if (!w.locate(p, ci, cj)) {
#pragma omp critical
            error = "start point outside the domain";
            continue;
        }
        o.end = p;
        auto finish = [&](ExitReason r, double t) {
            o.reason = r;
            o.T = t;
            o.end = p;
        };
        if (setup.inner_kill.field && bilinear(d, *setup.inner_kill.field, p) <= setup.inner_kill.level) {
            finish(ExitReason::Killed, 0);
            continue;
        }
        if (setup.stop_at_target && in_target(d, setup.target, p, x0)) {
            finish(ExitReason::HitTarget, 0);
            continue;
        }
        double t = 0;
        bool done = false;
        while (!done && t < cfg.t_max * (1 - 1e-12)) {
            const double h = std::min(dt, cfg.t_max - t);
            const double s = std::sqrt(2 * h);
            const Vec2 disp{s * gauss(rng), s * gauss(rng)};
            const Vec2 p0 = p;
            const int c0 = w.cell_id(ci, cj);
            const bool alive = w.move(p, ci, cj, disp);
            t += h;
            if (tr) tr->push_back(p);
            if (!alive) {
                finish(boundary_target ? ExitReason::HitTarget : ExitReason::Killed, t);
                break;
            }
            if (cfg.bridge_correction) {
                const double q = w.bridge_hit(p0, c0, p, w.cell_id(ci, cj), h);
                if (q > 0 && unif(rng) < q) {
                    finish(boundary_target ? ExitReason::HitTarget : ExitReason::Killed, t);
                    break;
                }
            }
            if (setup.inner_kill.field && bilinear(d, *setup.inner_kill.field, p) <= setup.inner_kill.level) {
                finish(ExitReason::Killed, t);
                break;
            }
            if (setup.occupation_field && bilinear(d, *setup.occupation_field, p) > setup.occupation_level)
                o.occupation += h;
            if (setup.stop_at_target && in_target(d, setup.target, p, x0)) {
                finish(ExitReason::HitTarget, t);
                done = true;
            }
        }
        if (!done && o.reason == ExitReason::Horizon) finish(ExitReason::Horizon, t);
    }
    if (!error.empty()) throw ConfigError(error);
    return out;
}

StartFn fixed_starts(const PathConfig& cfg) {
    if (cfg.start.empty()) throw ConfigError("no start point given");
    return [&cfg](long i, std::mt19937_64&) { return cfg.start[static_cast<std::size_t>(i) % cfg.start.size()]; };
}

std::string budget_note(double dt, bool bridge) {
    std::ostringstream s;
    s << "O(sqrt(dt)) absorption bias, dt=" << dt << (bridge ? ", bridge-corrected" : ", uncorrected");
    return s.str();
}

} // namespace

std::vector<PathOutcome> simulate(const GridDomain& d, const WalkSetup& setup, const PathConfig& cfg,
                                  std::vector<std::vector<Vec2>>* traces, int trace_paths) {
    return run_paths(d, setup, cfg, fixed_starts(cfg), traces, trace_paths);
}

Vec2 reflect_step(Vec2 pos, Vec2 proposed, const GridDomain& d) {
    const Walker w(d, WalkMode::Reflect, d.h * d.h, false, ReflectLaw::Specular);
    int ci, cj;
    if (!w.locate(pos, ci, cj)) throw ConfigError("position outside the domain");
    Vec2 p = pos;
    w.move(p, ci, cj, proposed - pos);
    return p;
}

PathEstimate hit_probability(const GridDomain& d, const Target& target, WalkMode mode, const PathConfig& cfg) {
    if (target.empty()) throw ConfigError("empty target");
    WalkSetup s;
    s.mode = mode;
    s.target = target;
    const auto out = simulate(d, s, cfg);
    std::vector<double> v(out.size());
    double ell = std::numeric_limits<double>::infinity();
    for (Vec2 x : cfg.start) ell = std::min(ell, dist_to_boundary(x, d));
    for (std::size_t i = 0; i < out.size(); ++i) v[i] = out[i].reason == ExitReason::HitTarget;
    PathEstimate e = summarize(v);
    e.seed = cfg.seed;
    e.dt = effective_dt(d, cfg);
    if (mode != WalkMode::Reflect || target.kind == Target::Kind::Boundary)
        e.bias_budget = bias_budget(e.dt, cfg.bridge_correction, ell);
    e.bias_note = budget_note(e.dt, cfg.bridge_correction);
    return e;
}

PathEstimate survival_probability(const GridDomain& d, Vec2 x, double t, PathConfig cfg) {
    cfg.t_max = t;
    cfg.start = {x};
    WalkSetup s;
    s.mode = WalkMode::Kill;
    const auto out = simulate(d, s, cfg);
    std::vector<double> v(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) v[i] = out[i].reason != ExitReason::Killed;
    PathEstimate e = summarize(v);
    e.seed = cfg.seed;
    e.dt = effective_dt(d, cfg);
    e.bias_budget = t > 0 ? bias_budget(e.dt, cfg.bridge_correction, dist_to_boundary(x, d)) : 0;
    e.bias_note = budget_note(e.dt, cfg.bridge_correction);
    return e;
}

bool FeynmanKacEstimate::within(double sigmas) const {
    return residual <= sigmas * estimate.stderr_ + estimate.bias_budget;
}

nlohmann::json FeynmanKacEstimate::to_json() const {
    auto j = estimate.to_json();
    j["exact"] = exact;
    j["z"] = z;
    j["residual"] = residual;
    return j;
}

FeynmanKacEstimate feynman_kac(const GridDomain& d, const SpectralResult& r, int index, Vec2 x, double t,
                               PathConfig cfg) {
    if (r.grid_hash != d.hash) throw ConfigError("eigenfield was computed on a different domain");
    if (index < 0 || index >= r.count()) throw ConfigError("eigenpair index out of range");
    const Field& phi = r.eigenfields[index];
    const double lambda = r.eigenvalues[index];
    cfg.t_max = t;
    cfg.start = {x};
    WalkSetup s;
    s.mode = walk_mode_for(r.mode);
    std::vector<PathOutcome> out;
    if (t > 0) out = simulate(d, s, cfg);
    else out.assign(cfg.n_paths, PathOutcome{ExitReason::Horizon, 0, x, 0});
    std::vector<double> v(out.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        v[i] = out[i].reason == ExitReason::Killed ? 0.0 : bilinear(d, phi, out[i].end);
    FeynmanKacEstimate f;
    f.estimate = summarize(v);
    f.estimate.seed = cfg.seed;
    f.estimate.dt = t > 0 ? effective_dt(d, cfg) : 0;
    const double sup = sup_norm(d, phi);
    if (t > 0) {
        const double ell = 1 / std::sqrt(std::max(lambda, 1e-300));
        f.estimate.bias_budget = sup * bias_budget(f.estimate.dt, cfg.bridge_correction, ell) +
                                 lambda * d.h * d.h * sup / 8;
    }
    f.estimate.bias_note = budget_note(f.estimate.dt, cfg.bridge_correction) + " plus O(lambda h^2) grid term";
    f.exact = std::exp(-lambda * t) * bilinear(d, phi, x);
    f.residual = std::abs(f.estimate.mean - f.exact);
    f.z = f.estimate.stderr_ > 0 ? (f.estimate.mean - f.exact) / f.estimate.stderr_ : 0;
    return f;
}

std::vector<StoppingSample> stopping_time_to_set(const GridDomain& d, const Target& target, WalkMode mode,
                                                 const PathConfig& cfg) {
    if (target.empty()) throw ConfigError("empty target");
    WalkSetup s;
    s.mode = mode;
    s.target = target;
    const auto out = simulate(d, s, cfg);
    std::vector<StoppingSample> r(out.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        r[i] = {out[i].reason == ExitReason::HitTarget, out[i].T, out[i].reason};
    return r;
}

PathEstimate truncated_exp_moment(const std::vector<StoppingSample>& s, double rate, double cap) {
    std::vector<double> v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) v[i] = (s[i].hit && s[i].T <= cap) ? std::exp(rate * s[i].T) : 0.0;
    PathEstimate e = summarize(v);
    std::ostringstream note;
    note << "truncated at T <= " << cap;
    e.bias_note = note.str();
    return e;
}

nlohmann::json HeatContentEstimate::to_json() const {
    auto j = estimate.to_json();
    j["starts"] = starts;
    if (has_spectral) j["spectral"] = spectral;
    return j;
}

HeatContentEstimate heat_content(const GridDomain& d, double t, PathConfig cfg, int stride,
                                 const SpectralResult* dirichlet) {
    if (!(t > 0)) throw ConfigError("heat content needs t > 0");
    if (stride < 1) throw ConfigError("stride must be positive");
    cfg.t_max = t;
    // Strata are stride x stride blocks of cells; each path starts uniformly in its block's part of P.
    const int cx = d.nx - 1, cy = d.ny - 1;
    std::vector<std::vector<int>> strata;
    for (int J = 0; J < cy; J += stride)
        for (int I = 0; I < cx; I += stride) {
            std::vector<int> cells;
            for (int j = J; j < std::min(cy, J + stride); ++j)
                for (int i = I; i < std::min(cx, I + stride); ++i)
                    if (d.cell_in(i, j)) cells.push_back(j * cx + i);
            if (!cells.empty()) strata.push_back(std::move(cells));
        }
    const long S = static_cast<long>(strata.size());
    if (cfg.n_paths < 2 * S) throw ConfigError("heat content needs at least two paths per stratum");
    StartFn start = [&](long i, std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const auto& cells = strata[i % S];
        const int k = cells[std::min<std::size_t>(cells.size() - 1, static_cast<std::size_t>(u(rng) * cells.size()))];
        const Vec2 o = d.node_pos(k % cx, k / cx);
        return Vec2{o.x + u(rng) * d.h, o.y + u(rng) * d.h};
    };
    WalkSetup s;
    s.mode = WalkMode::Kill;
    const auto out = run_paths(d, s, cfg, start, nullptr, 0);
    std::vector<double> hits(S, 0), count(S, 0);
    for (long i = 0; i < cfg.n_paths; ++i) {
        hits[i % S] += out[i].reason == ExitReason::Killed;
        count[i % S] += 1;
    }
    HeatContentEstimate r;
    r.starts = static_cast<int>(S);
    double sum = 0, var = 0;
    for (long k = 0; k < S; ++k) {
        const double area = d.h * d.h * strata[k].size();
        const double p = hits[k] / count[k];
        sum += area * p;
        var += area * area * p * (1 - p) / (count[k] - 1);
    }
    r.estimate.mean = sum;
    r.estimate.stderr_ = std::sqrt(var);
    r.estimate.n_paths = cfg.n_paths;
    r.estimate.seed = cfg.seed;
    r.estimate.dt = effective_dt(d, cfg);
    // A missed crossing acts like pushing the wall out by ~0.58 sqrt(2 dt); p is 1 at the wall.
    double perimeter = 0;
    for (const auto& g : d.boundary) perimeter += norm(g.b - g.a);
    r.estimate.bias_budget = bias_budget(r.estimate.dt, cfg.bridge_correction, 1.0) * perimeter;
    r.estimate.bias_note = budget_note(r.estimate.dt, cfg.bridge_correction) + ", stratified over cell blocks";
    if (dirichlet) {
        // Exact integral of the bilinear interpolant of 1 - q_t over P.
        const HeatState q = survival_profile(*dirichlet, t);
        double c = 0;
        for (int j = 0; j < cy; ++j)
            for (int i = 0; i < cx; ++i)
                if (d.cell_in(i, j))
                    c += 1 - 0.25 * (q.field[d.index(i, j)] + q.field[d.index(i + 1, j)] +
                                     q.field[d.index(i, j + 1)] + q.field[d.index(i + 1, j + 1)]);
        r.spectral = d.h * d.h * c;
        r.has_spectral = true;
    }
    return r;
}

nlohmann::json DecayEstimate::to_json() const {
    return {{"lambda", lambda}, {"stderr", stderr_}, {"t_grid", t_grid}, {"survival", survival},
            {"chi2_per_dof", chi2_per_dof}, {"asymptotic", asymptotic}, {"diagnostic", diagnostic},
            {"n_paths", n_paths}, {"seed", seed}, {"dt", dt}};
}

DecayEstimate mixed_eigenvalue_via_decay(const GridDomain& d, const PathConfig& cfg, std::vector<double> t_grid) {
    bool any = false;
    for (Bc b : d.boundary_bc) any = any || b == Bc::Dirichlet;
    if (!any) throw ConfigError("decay estimate needs at least one Dirichlet wall");
    if (t_grid.size() < 2) throw ConfigError("t_grid needs at least two times");
    std::sort(t_grid.begin(), t_grid.end());
    if (!(t_grid.front() > 0)) throw ConfigError("t_grid must be positive");
    PathConfig c = cfg;
    c.t_max = t_grid.back();
    std::vector<int> cells;
    for (int j = 0; j + 1 < d.ny; ++j)
        for (int i = 0; i + 1 < d.nx; ++i)
            if (d.cell_in(i, j)) cells.push_back(j * (d.nx - 1) + i);
    StartFn uniform = [&](long, std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const int k = cells[std::min<std::size_t>(cells.size() - 1, static_cast<std::size_t>(u(rng) * cells.size()))];
        const Vec2 o = d.node_pos(k % (d.nx - 1), k / (d.nx - 1));
        return Vec2{o.x + u(rng) * d.h, o.y + u(rng) * d.h};
    };
    WalkSetup s;
    s.mode = WalkMode::Mixed;
    const auto out = run_paths(d, s, c, uniform, nullptr, 0);

    const int m = static_cast<int>(t_grid.size());
    const double N = static_cast<double>(out.size());
    DecayEstimate r;
    r.t_grid = t_grid;
    r.n_paths = cfg.n_paths;
    r.seed = cfg.seed;
    r.dt = effective_dt(d, c);
    r.survival.assign(m, 0);
    for (const auto& o : out)
        for (int k = 0; k < m; ++k)
            if (o.reason != ExitReason::Killed || o.T > t_grid[k] * (1 + 1e-12)) r.survival[k] += 1;
    for (auto& v : r.survival) v /= N;
    for (double v : r.survival)
        if (!(v > 0)) throw ConfigError("no surviving paths at the last time; shorten t_grid or add paths");

    Eigen::VectorXd y(m), w(m);
    Eigen::MatrixXd C(m, m);
    double tbar = 0;
    for (int k = 0; k < m; ++k) tbar += t_grid[k] / m;
    double stt = 0;
    for (int k = 0; k < m; ++k) stt += (t_grid[k] - tbar) * (t_grid[k] - tbar);
    for (int k = 0; k < m; ++k) {
        y[k] = -std::log(r.survival[k]);
        w[k] = (t_grid[k] - tbar) / stt;
    }
    // Indicators are nested in time: E[1_a 1_b] = S at the later time.
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            const double sa = r.survival[a], sb = r.survival[b];
            C(a, b) = (r.survival[std::max(a, b)] - sa * sb) / N / (sa * sb);
        }
    r.lambda = w.dot(y);
    r.stderr_ = std::sqrt(std::max(0.0, w.dot(C * w)));
    const double intercept = y.mean() - r.lambda * tbar;
    if (m > 2) {
        Eigen::VectorXd res(m);
        for (int k = 0; k < m; ++k) res[k] = y[k] - intercept - r.lambda * t_grid[k];
        Eigen::LDLT<Eigen::MatrixXd> ldlt(C);
        const double chi2 = ldlt.info() == Eigen::Success ? res.dot(ldlt.solve(res)) : 0;
        r.chi2_per_dof = chi2 / (m - 2);
        if (r.chi2_per_dof > 4) {
            r.asymptotic = false;
            std::ostringstream msg;
            msg << "decay not yet asymptotic (chi2/dof = " << r.chi2_per_dof
                << "); extend t_grid to later times";
            r.diagnostic = msg.str();
        }
    }
    return r;
}

PathEstimate ball_exit_probability(int n, double c, long n_paths, std::uint64_t seed, double step_floor) {
    if (n < 1 || !(c > 0)) throw ConfigError("ball exit needs n >= 1 and c > 0");
    if (n_paths < 100) throw ConfigError("n_paths must be at least 100");
    const double R = std::sqrt(c);
    std::vector<double> v(n_paths);
#pragma omp parallel for schedule(dynamic, 256)
    for (long i = 0; i < n_paths; ++i) {
        auto rng = path_rng(seed, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<double> x(n, 0.0);
        double r = 0, t = 0;
        bool out = false;
        while (t < 1 - 1e-15) {
            const double gap = R - r;
            const double dt = std::min(1 - t, std::max(step_floor, gap * gap / 32));
            const double s = std::sqrt(2 * dt);
            double r2 = 0;
            for (int k = 0; k < n; ++k) {
                x[k] += s * gauss(rng);
                r2 += x[k] * x[k];
            }
            t += dt;
            const double rn = std::sqrt(r2);
            if (rn >= R || unif(rng) < std::exp(-gap * (R - rn) / dt)) {
                out = true;
                break;
            }
            r = rn;
        }
        v[i] = out;
    }
    PathEstimate e = summarize(v);
    e.seed = seed;
    e.dt = step_floor;
    e.bias_note = "adaptive steps, floor " + std::to_string(step_floor) + ", half-space bridge test";
    return e;
}

PathEstimate free_msd(double t, double dt, long n_paths, std::uint64_t seed) {
    if (!(t > 0) || !(dt > 0)) throw ConfigError("free_msd needs positive t and dt");
    std::vector<double> v(n_paths);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n_paths; ++i) {
        auto rng = path_rng(seed, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> gauss(0.0, 1.0);
        double x = 0, y = 0, s = 0;
        while (s < t * (1 - 1e-12)) {
            const double h = std::min(dt, t - s);
            x += std::sqrt(2 * h) * gauss(rng);
            y += std::sqrt(2 * h) * gauss(rng);
            s += h;
        }
        v[i] = x * x + y * y;
    }
    PathEstimate e = summarize(v);
    e.seed = seed;
    e.dt = dt;
    return e;
}

} // namespace hs
