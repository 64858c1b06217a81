#include "hs/geometry.hpp"
#include "hs/errors.hpp"
#include "hs/hash.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

namespace hs {

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

std::string to_string(Bc b) {
    switch (b) {
    case Bc::Dirichlet: return "dirichlet";
    case Bc::Neumann: return "neumann";
    default: return "none";
    }
}

Bc parse_bc(const std::string& s) {
    if (s == "dirichlet" || s == "kill") return Bc::Dirichlet;
    if (s == "neumann" || s == "reflect") return Bc::Neumann;
    throw ConfigError("unknown boundary condition '" + s + "'");
}

int GridDomain::interior_count() const {
    return static_cast<int>(std::count(kind.begin(), kind.end(), NodeKind::Interior));
}

double GridDomain::area() const {
    return h * h * static_cast<double>(std::count(cell.begin(), cell.end(), 1));
}

bool GridDomain::contains(Vec2 p) const {
    const double fx = (p.x - origin.x) / h, fy = (p.y - origin.y) / h;
    if (!(fx >= 0 && fy >= 0)) return false;
    return cell_in(static_cast<int>(fx), static_cast<int>(fy));
}

std::vector<std::uint8_t> GridDomain::interior_mask() const {
    std::vector<std::uint8_t> m(kind.size());
    for (std::size_t k = 0; k < kind.size(); ++k) m[k] = kind[k] == NodeKind::Interior;
    return m;
}

namespace {

bool wall_selected(const BcOverride& o, Vec2 mid, bool vertical, const std::array<double, 4>& pbox) {
    constexpr double tol = 1e-9;
    if (!o.side.empty()) {
        if (o.side == "left") return vertical && std::abs(mid.x - pbox[0]) < tol;
        if (o.side == "right") return vertical && std::abs(mid.x - pbox[2]) < tol;
        if (o.side == "bottom") return !vertical && std::abs(mid.y - pbox[1]) < tol;
        if (o.side == "top") return !vertical && std::abs(mid.y - pbox[3]) < tol;
        throw ConfigError("unknown side '" + o.side + "' in bc override");
    }
    if (o.box) {
        const auto& b = *o.box;
        return mid.x >= b[0] - tol && mid.x <= b[2] + tol && mid.y >= b[1] - tol && mid.y <= b[3] + tol;
    }
    return false;
}

} // namespace

void GridDomain::finalize(const std::vector<BcOverride>& overrides, Bc bc_default) {
    // P cells and boundary nodes from the interior mask.
    cell.assign(static_cast<std::size_t>(nx - 1) * (ny - 1), 0);
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i)
            cell[j * (nx - 1) + i] = interior(i, j) || interior(i + 1, j) || interior(i, j + 1) ||
                                     interior(i + 1, j + 1);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int k = index(i, j);
            if (kind[k] == NodeKind::Interior) continue;
            const bool touches = cell_in(i - 1, j - 1) || cell_in(i, j - 1) || cell_in(i - 1, j) || cell_in(i, j);
            kind[k] = touches ? NodeKind::Boundary : NodeKind::Outside;
            if (touches && cell_in(i - 1, j - 1) && cell_in(i, j - 1) && cell_in(i - 1, j) && cell_in(i, j)) {
                const Vec2 p = node_pos(i, j);
                std::ostringstream os;
                os << "mask has an enclosed non-interior node at (" << p.x << ", " << p.y
                   << "): one-node holes and slits are not representable";
                throw ConfigError(os.str());
            }
        }

    std::array<double, 4> pbox{1e300, 1e300, -1e300, -1e300};
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i)
            if (cell_in(i, j)) {
                const Vec2 p = node_pos(i, j);
                pbox[0] = std::min(pbox[0], p.x);
                pbox[1] = std::min(pbox[1], p.y);
                pbox[2] = std::max(pbox[2], p.x + h);
                pbox[3] = std::max(pbox[3], p.y + h);
            }

    vwall.assign(static_cast<std::size_t>(nx) * (ny - 1), Bc::None);
    hwall.assign(static_cast<std::size_t>(nx - 1) * ny, Bc::None);
    auto label = [&](Vec2 mid, bool vertical) {
        Bc b = bc_default;
        for (const auto& o : overrides)
            if (wall_selected(o, mid, vertical, pbox)) b = o.bc;
        return b;
    };
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i < nx; ++i)
            if (cell_in(i - 1, j) != cell_in(i, j)) {
                const Vec2 p = node_pos(i, j);
                vwall[j * nx + i] = label({p.x, p.y + 0.5 * h}, true);
            }
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i)
            if (cell_in(i, j - 1) != cell_in(i, j)) {
                const Vec2 p = node_pos(i, j);
                hwall[j * (nx - 1) + i] = label({p.x + 0.5 * h, p.y}, false);
            }

    node_bc.assign(kind.size(), Bc::None);
    auto vw = [&](int i, int j) { return (i >= 0 && i < nx && j >= 0 && j + 1 < ny) ? vwall[j * nx + i] : Bc::None; };
    auto hw = [&](int i, int j) { return (i >= 0 && i + 1 < nx && j >= 0 && j < ny) ? hwall[j * (nx - 1) + i] : Bc::None; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int k = index(i, j);
            if (kind[k] != NodeKind::Boundary) continue;
            const Bc walls[4] = {vw(i, j - 1), vw(i, j), hw(i - 1, j), hw(i, j)};
            Bc b = Bc::None;
            for (Bc w : walls) {
                if (w == Bc::Dirichlet) b = Bc::Dirichlet;
                else if (w == Bc::Neumann && b == Bc::None) b = Bc::Neumann;
            }
            node_bc[k] = b;
        }

    // Outline as maximal collinear runs of equally labelled walls.
    boundary.clear();
    boundary_bc.clear();
    for (int i = 0; i < nx; ++i) {
        int j = 0;
        while (j + 1 < ny) {
            const Bc b = vw(i, j);
            if (b == Bc::None) { ++j; continue; }
            int e = j;
            while (e + 1 < ny && vw(i, e) == b) ++e;
            boundary.push_back({node_pos(i, j), node_pos(i, e)});
            boundary_bc.push_back(b);
            j = e;
        }
    }
    for (int j = 0; j < ny; ++j) {
        int i = 0;
        while (i + 1 < nx) {
            const Bc b = hw(i, j);
            if (b == Bc::None) { ++i; continue; }
            int e = i;
            while (e + 1 < nx && hw(e, j) == b) ++e;
            boundary.push_back({node_pos(i, j), node_pos(e, j)});
            boundary_bc.push_back(b);
            i = e;
        }
    }

    Sha256 sh;
    sh.update(name);
    sh.update_pod(h);
    sh.update_pod(origin.x);
    sh.update_pod(origin.y);
    sh.update_pod(nx);
    sh.update_pod(ny);
    sh.update(kind.data(), kind.size());
    sh.update(vwall.data(), vwall.size());
    sh.update(hwall.data(), hwall.size());
    hash = sh.hex();
}

GridDomain GridDomain::with_all_walls(Bc b) const {
    GridDomain d = *this;
    d.finalize({}, b);
    return d;
}

namespace {

using Shape = std::function<bool(Vec2)>;

struct Box {
    double x0, y0, x1, y1;
    bool in(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

void require_positive(const DomainSpec& s, std::initializer_list<const char*> keys) {
    for (const char* k : keys)
        if (!(s.param(k) > 0)) throw ConfigError(std::string("parameter '") + k + "' must be positive");
}

GridDomain rasterize(const DomainSpec& spec, const Shape& closed_shape, std::array<double, 4> bbox) {
    GridDomain d;
    d.name = spec.name.empty() ? spec.family : spec.name;
    d.family = spec.family;
    d.bbox = bbox;
    const double w = bbox[2] - bbox[0], ht = bbox[3] - bbox[1];
    d.h = std::max(w, ht) / spec.resolution;
    d.origin = {bbox[0], bbox[1]};
    d.nx = static_cast<int>(std::ceil(w / d.h - 1e-9)) + 1;
    d.ny = static_cast<int>(std::ceil(ht / d.h - 1e-9)) + 1;
    d.kind.assign(static_cast<std::size_t>(d.nx) * d.ny, NodeKind::Outside);
    const double e = 1e-9 * d.h;
    for (int j = 0; j < d.ny; ++j)
        for (int i = 0; i < d.nx; ++i) {
            const Vec2 p = d.node_pos(i, j);
            // Interior of the closed shape: the point and small axis probes all inside.
            const bool in = closed_shape(p) && closed_shape({p.x + e, p.y}) && closed_shape({p.x - e, p.y}) &&
                            closed_shape({p.x, p.y + e}) && closed_shape({p.x, p.y - e});
            if (in) d.kind[d.index(i, j)] = NodeKind::Interior;
        }
    return d;
}

void check_connected(const GridDomain& d) {
    int count = 0;
    label_components(d.interior_mask(), d.nx, d.ny, count);
    if (count == 0) throw ConfigError("domain '" + d.name + "' has no interior nodes at this resolution");
    if (count > 1)
        throw ConfigError("domain '" + d.name + "' rasterizes to " + std::to_string(count) +
                          " disconnected pieces; increase resolution");
}

std::vector<std::uint8_t> region_mask(const GridDomain& d, const std::function<bool(Vec2)>& pred) {
    std::vector<std::uint8_t> m(d.kind.size(), 0);
    for (int k = 0; k < static_cast<int>(d.kind.size()); ++k)
        if (d.kind[k] != NodeKind::Outside && pred(d.node_pos(k))) m[k] = 1;
    return m;
}

GridDomain custom_mask(const DomainSpec& spec) {
    std::vector<std::vector<std::uint8_t>> rows;  // top row first
    if (!spec.mask_pgm.empty()) {
        int w = 0, ht = 0;
        auto px = read_pgm(spec.mask_pgm, w, ht);
        for (int r = 0; r < ht; ++r) {
            rows.emplace_back(w);
            for (int c = 0; c < w; ++c) rows.back()[c] = px[r * w + c] >= 128;
        }
    } else {
        for (const auto& s : spec.mask_rows) {
            rows.emplace_back();
            for (char ch : s) {
                if (ch == '#' || ch == '1') rows.back().push_back(1);
                else if (ch == '.' || ch == '0') rows.back().push_back(0);
                else throw ConfigError(std::string("custom mask: unexpected character '") + ch + "'");
            }
        }
    }
    if (rows.empty() || rows[0].empty()) throw ConfigError("custom mask is empty");
    const int w = static_cast<int>(rows[0].size()), ht = static_cast<int>(rows.size());
    for (const auto& r : rows)
        if (static_cast<int>(r.size()) != w) throw ConfigError("custom mask rows differ in length");
    GridDomain d;
    d.name = spec.name.empty() ? "custom_mask" : spec.name;
    d.family = spec.family;
    d.h = spec.param("h", 1.0 / std::max(w, ht));
    if (!(d.h > 0)) throw ConfigError("custom mask: h must be positive");
    // One padding node on every side keeps boundary nodes inside the raster.
    d.nx = w + 2;
    d.ny = ht + 2;
    d.origin = {spec.param("origin_x", 0.0) - d.h, spec.param("origin_y", 0.0) - d.h};
    d.kind.assign(static_cast<std::size_t>(d.nx) * d.ny, NodeKind::Outside);
    for (int r = 0; r < ht; ++r)
        for (int c = 0; c < w; ++c)
            if (rows[r][c]) d.kind[d.index(c + 1, ht - r)] = NodeKind::Interior;
    d.bbox = {d.origin.x, d.origin.y, d.origin.x + (d.nx - 1) * d.h, d.origin.y + (d.ny - 1) * d.h};
    return d;
}

} // namespace

GridDomain build_domain(const DomainSpec& spec) {
    if (spec.resolution < 16) throw ConfigError("resolution must be >= 16");
    const double s = spec.param("scale", 1.0);
    if (!(s > 0)) throw ConfigError("parameter 'scale' must be positive");
    GridDomain d;
    const std::string& f = spec.family;
    if (f == "rectangle") {
        const double w = s * spec.param("width", 1.0), ht = s * spec.param("height", 1.0);
        if (!(w > 0 && ht > 0)) throw ConfigError("rectangle: width and height must be positive");
        const Box b{0, 0, w, ht};
        d = rasterize(spec, [b](Vec2 p) { return b.in(p); }, {0, 0, w, ht});
    } else if (f == "disk") {
        require_positive(spec, {"radius"});
        const double r = s * spec.param("radius");
        d = rasterize(spec, [r](Vec2 p) { return p.x * p.x + p.y * p.y <= r * r; }, {-r, -r, r, r});
    } else if (f == "annulus") {
        require_positive(spec, {"inner_radius", "outer_radius"});
        const double ri = s * spec.param("inner_radius"), ro = s * spec.param("outer_radius");
        if (ri >= ro) throw ConfigError("annulus: inner_radius must be < outer_radius");
        d = rasterize(
            spec,
            [ri, ro](Vec2 p) {
                const double q = p.x * p.x + p.y * p.y;
                return q <= ro * ro && q >= ri * ri;
            },
            {-ro, -ro, ro, ro});
    } else if (f == "l_shape") {
        const double a = s * spec.param("size", 1.0);
        if (!(a > 0)) throw ConfigError("l_shape: size must be positive");
        const Box full{0, 0, a, a}, cut{a / 2, a / 2, a, a};
        // Closed cut removal would open the re-entrant edges; subtract the open cut instead.
        d = rasterize(
            spec,
            [full, cut](Vec2 p) {
                return full.in(p) && !(p.x > cut.x0 && p.y > cut.y0);
            },
            {0, 0, a, a});
    } else if (f == "dumbbell") {
        require_positive(spec, {"lobe_width", "lobe_height", "neck_width", "neck_length"});
        const double lw = s * spec.param("lobe_width"), lh = s * spec.param("lobe_height");
        const double nw = s * spec.param("neck_width"), nl = s * spec.param("neck_length");
        if (nw >= lh) throw ConfigError("dumbbell: neck_width must be < lobe_height");
        const Box left{0, 0, lw, lh}, right{lw + nl, 0, 2 * lw + nl, lh};
        const Box neck{lw, lh / 2 - nw / 2, lw + nl, lh / 2 + nw / 2};
        d = rasterize(
            spec, [=](Vec2 p) { return left.in(p) || right.in(p) || neck.in(p); }, {0, 0, 2 * lw + nl, lh});
        const double e = 1e-9 * d.h;
        d.submasks["left"] = region_mask(d, [=](Vec2 p) { return p.x < lw - e; });
        d.submasks["right"] = region_mask(d, [=](Vec2 p) { return p.x > lw + nl + e; });
        d.submasks["neck"] = region_mask(d, [=](Vec2 p) { return p.x >= lw - e && p.x <= lw + nl + e; });
        // Resolution guard: count interior nodes across the middle of the neck.
        const int ic = static_cast<int>(std::lround((lw + nl / 2 - d.origin.x) / d.h));
        int across = 0;
        for (int j = 0; j < d.ny; ++j) across += d.interior(ic, j);
        if (across < 4)
            throw ConfigError("dumbbell: only " + std::to_string(across) +
                              " nodes across the neck (need >= 4); increase resolution");
    } else if (f == "octopus") {
        require_positive(spec, {"body_radius", "tentacle_width", "tentacle_length"});
        const double rb = s * spec.param("body_radius"), tw = s * spec.param("tentacle_width");
        const double tl = s * spec.param("tentacle_length");
        const int count = static_cast<int>(spec.param("tentacle_count", 1.0));
        if (count < 1) throw ConfigError("octopus: tentacle_count must be >= 1");
        if (tw >= rb) throw ConfigError("octopus: tentacle_width must be < body_radius");
        std::vector<Vec2> axes;
        for (int k = 0; k < count; ++k) {
            const double a = 2.0 * std::numbers::pi * k / count;
            // Snap to exact axis directions so axis-aligned tentacles rasterize symmetrically.
            double cx = std::cos(a), cy = std::sin(a);
            if (std::abs(cx) < 1e-12) cx = 0;
            if (std::abs(cy) < 1e-12) cy = 0;
            axes.push_back({cx, cy});
        }
        auto in_tentacle = [=](Vec2 p, Vec2 u) {
            const double along = p.x * u.x + p.y * u.y, across = -p.x * u.y + p.y * u.x;
            return along >= 0 && along <= rb + tl && std::abs(across) <= tw / 2;
        };
        std::array<double, 4> bb{-rb, -rb, rb, rb};
        for (Vec2 u : axes) {
            bb[0] = std::min(bb[0], (rb + tl) * u.x - std::abs(u.y) * tw / 2);
            bb[2] = std::max(bb[2], (rb + tl) * u.x + std::abs(u.y) * tw / 2);
            bb[1] = std::min(bb[1], (rb + tl) * u.y - std::abs(u.x) * tw / 2);
            bb[3] = std::max(bb[3], (rb + tl) * u.y + std::abs(u.x) * tw / 2);
        }
        d = rasterize(
            spec,
            [=](Vec2 p) {
                if (p.x * p.x + p.y * p.y <= rb * rb) return true;
                for (Vec2 u : axes)
                    if (in_tentacle(p, u)) return true;
                return false;
            },
            bb);
        d.submasks["body"] = region_mask(d, [=](Vec2 p) { return p.x * p.x + p.y * p.y <= rb * rb; });
        for (int k = 0; k < count; ++k) {
            const Vec2 u = axes[k];
            d.submasks["tentacle" + std::to_string(k)] = region_mask(d, [=](Vec2 p) {
                const double along = p.x * u.x + p.y * u.y, across = -p.x * u.y + p.y * u.x;
                return along > rb && std::abs(across) <= tw / 2 + d.h * 1.000001;
            });
        }
    } else if (f == "custom_mask") {
        d = custom_mask(spec);
    } else {
        throw ConfigError("unknown domain family '" + f + "'");
    }
    check_connected(d);
    d.spec_json = spec.to_json();
    d.finalize(spec.overrides, spec.bc_default);
    return d;
}

std::vector<int> label_components(const std::vector<std::uint8_t>& mask, int nx, int ny, int& count) {
    std::vector<int> lab(mask.size(), -1);
    count = 0;
    std::vector<int> stack;
    for (int s = 0; s < static_cast<int>(mask.size()); ++s) {
        if (!mask[s] || lab[s] >= 0) continue;
        lab[s] = count;
        stack.push_back(s);
        while (!stack.empty()) {
            const int k = stack.back();
            stack.pop_back();
            const int i = k % nx, j = k / nx;
            const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
            for (auto& q : nb) {
                if (q[0] < 0 || q[1] < 0 || q[0] >= nx || q[1] >= ny) continue;
                const int m = q[1] * nx + q[0];
                if (mask[m] && lab[m] < 0) {
                    lab[m] = count;
                    stack.push_back(m);
                }
            }
        }
        ++count;
    }
    return lab;
}

double diameter(const GridDomain& d) {
    std::vector<Vec2> pts;
    for (int k = 0; k < static_cast<int>(d.kind.size()); ++k)
        if (d.kind[k] == NodeKind::Interior) pts.push_back(d.node_pos(k));
    if (pts.size() < 2) return 0.0;
    std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    auto cross = [](Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); };
    std::vector<Vec2> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    double best = 0;
    for (std::size_t a = 0; a < hull.size(); ++a)
        for (std::size_t b = a + 1; b < hull.size(); ++b) best = std::max(best, norm(hull[a] - hull[b]));
    return best;
}

double point_segment_distance(Vec2 p, const Segment& s) {
    const Vec2 d = s.b - s.a;
    const double l2 = d.x * d.x + d.y * d.y;
    double t = l2 > 0 ? ((p.x - s.a.x) * d.x + (p.y - s.a.y) * d.y) / l2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return norm(p - (s.a + t * d));
}

double segment_distance(const Segment& a, const Segment& b) {
    auto orient = [](Vec2 p, Vec2 q, Vec2 r) { return (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x); };
    const double o1 = orient(a.a, a.b, b.a), o2 = orient(a.a, a.b, b.b);
    const double o3 = orient(b.a, b.b, a.a), o4 = orient(b.a, b.b, a.b);
    if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) return 0.0;
    return std::min({point_segment_distance(a.a, b), point_segment_distance(a.b, b),
                     point_segment_distance(b.a, a), point_segment_distance(b.b, a)});
}

double dist_to_boundary(Vec2 p, const GridDomain& d) {
    if (!d.contains(p)) {
        std::ostringstream os;
        os << "point (" << p.x << ", " << p.y << ") lies outside domain '" << d.name << "'";
        throw ConfigError(os.str());
    }
    double best = 1e300;
    for (const auto& s : d.boundary) best = std::min(best, point_segment_distance(p, s));
    return best;
}

void write_mask_pgm(const GridDomain& d, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    f << "P5\n" << d.nx << " " << d.ny << "\n255\n";
    for (int j = d.ny - 1; j >= 0; --j)
        for (int i = 0; i < d.nx; ++i) f.put(d.interior(i, j) ? static_cast<char>(255) : 0);
}

void write_field_pgm(const GridDomain& d, const std::vector<double>& field, const std::string& path) {
    double lo = 1e300, hi = -1e300;
    for (int k = 0; k < static_cast<int>(field.size()); ++k)
        if (d.kind[k] != NodeKind::Outside) {
            lo = std::min(lo, field[k]);
            hi = std::max(hi, field[k]);
        }
    const double span = hi > lo ? hi - lo : 1.0;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    f << "P5\n" << d.nx << " " << d.ny << "\n255\n";
    for (int j = d.ny - 1; j >= 0; --j)
        for (int i = 0; i < d.nx; ++i) {
            const int k = d.index(i, j);
            int v = 0;
            if (d.kind[k] != NodeKind::Outside) v = 1 + static_cast<int>(std::lround(254.0 * (field[k] - lo) / span));
            f.put(static_cast<char>(v));
        }
}

std::vector<std::uint8_t> read_pgm(const std::string& path, int& width, int& height) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5") throw ConfigError(path + ": only binary PGM (P5) is supported");
    auto next_int = [&]() {
        f >> std::ws;
        while (f.peek() == '#') {
            std::string line;
            std::getline(f, line);
            f >> std::ws;
        }
        int v = 0;
        f >> v;
        return v;
    };
    width = next_int();
    height = next_int();
    const int maxval = next_int();
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) throw ConfigError(path + ": bad PGM header");
    f.get();
    std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * height);
    f.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (!f) throw ConfigError(path + ": truncated PGM data");
    return px;
}

nlohmann::json domain_meta(const GridDomain& d) {
    nlohmann::json j;
    j["name"] = d.name;
    j["family"] = d.family;
    j["h"] = d.h;
    j["nx"] = d.nx;
    j["ny"] = d.ny;
    j["origin"] = {d.origin.x, d.origin.y};
    j["bbox"] = d.bbox;
    j["interior_nodes"] = d.interior_count();
    j["area"] = d.area();
    j["diameter"] = diameter(d);
    j["boundary_segments"] = d.boundary.size();
    j["hash"] = d.hash;
    std::vector<std::string> subs;
    for (const auto& [k, v] : d.submasks) subs.push_back(k);
    j["submasks"] = subs;
    j["spec"] = d.spec_json;
    return j;
}

} // namespace hs
