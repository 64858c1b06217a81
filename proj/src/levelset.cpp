#include "hs/levelset.hpp"
#include "hs/errors.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <unordered_map>

namespace hs {

std::vector<Segment> LevelSetGeometry::segments() const {
    std::vector<Segment> out;
    for (const auto& pl : polylines) {
        if (pl.pts.size() == 1) out.push_back({pl.pts[0], pl.pts[0]});
        for (std::size_t k = 0; k + 1 < pl.pts.size(); ++k) out.push_back({pl.pts[k], pl.pts[k + 1]});
        if (pl.closed && pl.pts.size() > 2) out.push_back({pl.pts.back(), pl.pts.front()});
    }
    return out;
}

double bilinear(const GridDomain& d, const Field& f, Vec2 p) {
    const double fx = (p.x - d.origin.x) / d.h, fy = (p.y - d.origin.y) / d.h;
    int i = static_cast<int>(std::floor(fx)), j = static_cast<int>(std::floor(fy));
    i = std::clamp(i, 0, d.nx - 2);
    j = std::clamp(j, 0, d.ny - 2);
    const double u = fx - i, v = fy - j;
    return (1 - u) * (1 - v) * f[d.index(i, j)] + u * (1 - v) * f[d.index(i + 1, j)] +
           u * v * f[d.index(i + 1, j + 1)] + (1 - u) * v * f[d.index(i, j + 1)];
}

double sup_norm(const GridDomain& d, const Field& f) {
    double m = 0;
    for (std::size_t k = 0; k < f.size(); ++k)
        if (d.kind[k] != NodeKind::Outside) m = std::max(m, std::abs(f[k]));
    return m;
}

namespace {

struct Seg {
    std::int64_t k0, k1;
    Vec2 p0, p1;
};

LevelSetGeometry extract(const GridDomain& d, const Field& f, double level, double scale, double eta) {
    if (f.size() != d.kind.size()) throw ConfigError("field does not match domain raster");
    for (std::size_t k = 0; k < f.size(); ++k)
        if (d.kind[k] != NodeKind::Outside && !std::isfinite(f[k]))
            throw ConfigError("field contains NaN or infinite values");
    LevelSetGeometry g;
    g.level_eta = eta;
    g.scale = scale;
    const int nx = d.nx;
    auto val = [&](int i, int j) { return f[d.index(i, j)]; };
    auto hkey = [&](int i, int j) { return 2 * static_cast<std::int64_t>(j * nx + i); };
    auto vkey = [&](int i, int j) { return 2 * static_cast<std::int64_t>(j * nx + i) + 1; };
    // Crossing points are always interpolated from the lower-index node so neighbours agree bitwise.
    auto hpt = [&](int i, int j) {
        const double a = val(i, j), b = val(i + 1, j);
        const Vec2 p = d.node_pos(i, j);
        return Vec2{p.x + d.h * (level - a) / (b - a), p.y};
    };
    auto vpt = [&](int i, int j) {
        const double a = val(i, j), b = val(i, j + 1);
        const Vec2 p = d.node_pos(i, j);
        return Vec2{p.x, p.y + d.h * (level - a) / (b - a)};
    };

    std::vector<Seg> segs;
    for (int j = 0; j + 1 < d.ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            if (!d.cell_in(i, j)) continue;
            const double a = val(i, j), b = val(i + 1, j), c = val(i + 1, j + 1), e = val(i, j + 1);
            const bool A = a > level, B = b > level, C = c > level, E = e > level;
            // Edges: 0 bottom, 1 right, 2 top, 3 left.
            const std::int64_t key[4] = {hkey(i, j), vkey(i + 1, j), hkey(i, j + 1), vkey(i, j)};
            auto point = [&](int edge) {
                switch (edge) {
                case 0: return hpt(i, j);
                case 1: return vpt(i + 1, j);
                case 2: return hpt(i, j + 1);
                default: return vpt(i, j);
                }
            };
            auto add = [&](int e0, int e1) { segs.push_back({key[e0], key[e1], point(e0), point(e1)}); };
            const bool cross[4] = {A != B, B != C, C != E, E != A};
            const int ncross = cross[0] + cross[1] + cross[2] + cross[3];
            if (ncross == 2) {
                int first = -1, second = -1;
                for (int q = 0; q < 4; ++q)
                    if (cross[q]) (first < 0 ? first : second) = q;
                add(first, second);
            } else if (ncross == 4) {
                const bool centre = 0.25 * (a + b + c + e) > level;
                // Corners a,c share a state opposite to b,e. The centre decides which pair is joined.
                const bool ac_joined = (A == centre);
                if (ac_joined) {
                    add(0, 1);  // isolates b
                    add(2, 3);  // isolates e
                } else {
                    add(3, 0);  // isolates a
                    add(1, 2);  // isolates c
                }
            }
        }

    // Chain segments through shared edge keys.
    std::unordered_map<std::int64_t, std::vector<int>> at;
    for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
        at[segs[s].k0].push_back(s);
        at[segs[s].k1].push_back(s);
    }
    std::vector<char> used(segs.size(), 0);
    auto walk = [&](int s, std::int64_t from) {
        Polyline pl;
        std::int64_t key = from;
        pl.pts.push_back(segs[s].k0 == key ? segs[s].p0 : segs[s].p1);
        while (true) {
            used[s] = 1;
            const bool fwd = segs[s].k0 == key;
            key = fwd ? segs[s].k1 : segs[s].k0;
            pl.pts.push_back(fwd ? segs[s].p1 : segs[s].p0);
            int next = -1;
            for (int t : at[key])
                if (!used[t]) next = t;
            if (next < 0) break;
            s = next;
        }
        return pl;
    };
    for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
        if (used[s]) continue;
        for (std::int64_t k : {segs[s].k0, segs[s].k1})
            if (at[k].size() == 1 && !used[s]) g.polylines.push_back(walk(s, k));
    }
    for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
        if (used[s]) continue;
        Polyline pl = walk(s, segs[s].k0);
        if (pl.pts.size() > 2) {
            pl.pts.pop_back();  // last point repeats the first
            pl.closed = true;
        }
        g.polylines.push_back(std::move(pl));
    }

    // A level equal to the maximum has no crossings; report the attaining nodes as points.
    if (g.polylines.empty() && scale > 0) {
        double mx = -1e300;
        for (std::size_t k = 0; k < f.size(); ++k)
            if (d.kind[k] != NodeKind::Outside) mx = std::max(mx, f[k]);
        if (std::abs(mx - level) <= 1e-12 * scale)
            for (std::size_t k = 0; k < f.size(); ++k)
                if (d.kind[k] == NodeKind::Interior && f[k] >= level - 1e-12 * scale)
                    g.polylines.push_back({{d.node_pos(static_cast<int>(k))}, false});
    }

    g.superlevel_mask.assign(f.size(), 0);
    g.sublevel_mask.assign(f.size(), 0);
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (d.kind[k] != NodeKind::Interior) continue;
        (f[k] > level ? g.superlevel_mask : g.sublevel_mask)[k] = 1;
    }
    g.components = label_components(g.superlevel_mask, d.nx, d.ny, g.n_components);
    return g;
}

} // namespace

LevelSetGeometry extract_level_set(const GridDomain& d, const Field& f, double eta) {
    if (!(eta > 0 && eta <= 1)) throw ConfigError("level must lie in (0,1]");
    const double s = sup_norm(d, f);
    if (!(s > 0)) throw ConfigError("cannot normalize a zero field");
    Field g = f;
    for (auto& v : g) v /= s;
    return extract(d, g, eta, s, eta);
}

LevelSetGeometry extract_level_absolute(const GridDomain& d, const Field& f, double level) {
    return extract(d, f, level, sup_norm(d, f), level);
}

std::vector<Segment> as_segments(const std::vector<Vec2>& pts) {
    std::vector<Segment> s;
    for (Vec2 p : pts) s.push_back({p, p});
    return s;
}

std::optional<double> set_distance(const std::vector<Segment>& a, const std::vector<Segment>& b) {
    if (a.empty() || b.empty()) return std::nullopt;
    double best = 1e300;
    for (const auto& s : a)
        for (const auto& t : b) {
            best = std::min(best, segment_distance(s, t));
            if (best == 0) return 0.0;
        }
    return best;
}

std::optional<double> set_distance(const LevelSetGeometry& a, const LevelSetGeometry& b) {
    return set_distance(a.segments(), b.segments());
}

void write_levelset_csv(const LevelSetGeometry& g, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << "component_id,vertex_index,x,y\n" << std::setprecision(12);
    for (std::size_t c = 0; c < g.polylines.size(); ++c)
        for (std::size_t v = 0; v < g.polylines[c].pts.size(); ++v)
            f << c << "," << v << "," << g.polylines[c].pts[v].x << "," << g.polylines[c].pts[v].y << "\n";
}

} // namespace hs
