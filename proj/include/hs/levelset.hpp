#pragma once
#include <optional>
#include <string>
#include <vector>

#include "hs/geometry.hpp"

namespace hs {

/// Scalar field on the node raster of a GridDomain (index j*nx + i). Zero off the domain.
using Field = std::vector<double>;

struct Polyline {
    std::vector<Vec2> pts;
    bool closed = false;
};

struct LevelSetGeometry {
    double level_eta = 0;   // normalized level
    double scale = 1;       // max |field| used for normalization
    std::vector<Polyline> polylines;
    std::vector<std::uint8_t> superlevel_mask;  // interior nodes with field/scale > eta
    std::vector<std::uint8_t> sublevel_mask;    // interior nodes with field/scale <= eta
    std::vector<int> components;                // superlevel component id per node, -1 elsewhere
    int n_components = 0;

    bool empty() const { return polylines.empty(); }
    std::vector<Segment> segments() const;
};

/// Bilinear interpolation of a node field at p (p inside the raster).
double bilinear(const GridDomain& d, const Field& f, Vec2 p);

/// Max |f| over interior and boundary nodes.
double sup_norm(const GridDomain& d, const Field& f);

/// Level set of f/sup|f| at eta. Marching squares over the cells of P.
LevelSetGeometry extract_level_set(const GridDomain& d, const Field& f, double eta);

/// Same at an absolute level (no normalization); used for nodal lines at 0.
LevelSetGeometry extract_level_absolute(const GridDomain& d, const Field& f, double level);

/// Minimum distance between two segment sets (points are zero-length segments).
/// Returns nullopt when either side is empty.
std::optional<double> set_distance(const std::vector<Segment>& a, const std::vector<Segment>& b);
std::optional<double> set_distance(const LevelSetGeometry& a, const LevelSetGeometry& b);
std::vector<Segment> as_segments(const std::vector<Vec2>& pts);

void write_levelset_csv(const LevelSetGeometry& g, const std::string& path);

} // namespace hs
