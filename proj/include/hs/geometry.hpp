#pragma once
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace hs {

struct Vec2 {
    double x = 0, y = 0;
};
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double norm(Vec2 a);

enum class Bc : std::uint8_t { None = 0, Dirichlet = 1, Neumann = 2 };
std::string to_string(Bc b);
Bc parse_bc(const std::string& s);

enum class NodeKind : std::uint8_t { Outside = 0, Interior = 1, Boundary = 2 };

struct Segment {
    Vec2 a, b;
};

struct BcOverride {
    std::string side;                       // left/right/bottom/top, or empty
    std::optional<std::array<double, 4>> box;  // xmin, ymin, xmax, ymax: edges whose midpoint lies inside
    Bc bc = Bc::Dirichlet;
};

struct DomainSpec {
    std::string name;
    std::string family;  // rectangle, disk, dumbbell, octopus, annulus, l_shape, custom_mask
    std::map<std::string, double> params;
    int resolution = 128;
    Bc bc_default = Bc::Dirichlet;
    std::vector<BcOverride> overrides;
    std::vector<std::string> mask_rows;  // custom_mask only; first row is the top of the image
    std::string mask_pgm;                // custom_mask only; alternative to mask_rows

    static DomainSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    double param(const std::string& key) const;
    double param(const std::string& key, double fallback) const;
};

/// Node raster of spacing h. Node (i,j) sits at origin + (i h, j h), index j*nx + i.
/// Interior nodes form the mask. The discrete domain P is the union of grid cells having
/// at least one interior corner; its outline carries the boundary conditions, edge by edge.
/// Non-interior corners of P cells are the boundary nodes.
class GridDomain {
public:
    std::string name;
    std::string family;
    double h = 0;
    Vec2 origin;
    int nx = 0, ny = 0;
    std::vector<NodeKind> kind;       // per node
    std::vector<Bc> node_bc;          // per node; set on boundary nodes only
    std::vector<std::uint8_t> cell;   // (nx-1)*(ny-1): 1 if the cell belongs to P
    std::vector<Bc> vwall;            // nx*(ny-1): wall on x = x_i between y_j and y_{j+1}
    std::vector<Bc> hwall;            // (nx-1)*ny: wall on y = y_j between x_i and x_{i+1}
    std::array<double, 4> bbox{};     // xmin, ymin, xmax, ymax of the ideal shape
    std::map<std::string, std::vector<std::uint8_t>> submasks;  // per node, e.g. left/right/neck
    std::vector<Segment> boundary;    // outline of P, maximal collinear pieces
    std::vector<Bc> boundary_bc;      // label per boundary segment
    nlohmann::json spec_json;
    std::string hash;

    int index(int i, int j) const { return j * nx + i; }
    Vec2 node_pos(int i, int j) const { return {origin.x + i * h, origin.y + j * h}; }
    Vec2 node_pos(int idx) const { return node_pos(idx % nx, idx / nx); }
    bool interior(int i, int j) const {
        return i >= 0 && j >= 0 && i < nx && j < ny && kind[index(i, j)] == NodeKind::Interior;
    }
    bool cell_in(int i, int j) const {
        return i >= 0 && j >= 0 && i < nx - 1 && j < ny - 1 && cell[j * (nx - 1) + i];
    }
    int interior_count() const;
    /// Area of P.
    double area() const;
    /// Point lies in P (closed cell test, cells are half-open towards +x/+y).
    bool contains(Vec2 p) const;
    std::vector<std::uint8_t> interior_mask() const;
    /// Rebuild derived data (walls, node labels, outline, hash) after editing labels or mask.
    void finalize(const std::vector<BcOverride>& overrides, Bc bc_default);
    /// Uniform relabel of every wall.
    GridDomain with_all_walls(Bc b) const;
};

GridDomain build_domain(const DomainSpec& spec);

/// Max distance between interior nodes.
double diameter(const GridDomain& d);

/// Distance from p (inside P) to the outline of P. Throws ConfigError if p is outside.
double dist_to_boundary(Vec2 p, const GridDomain& d);

double point_segment_distance(Vec2 p, const Segment& s);
double segment_distance(const Segment& a, const Segment& b);

/// Components (4-connected) of a node mask; returns labels (-1 off mask) and count.
std::vector<int> label_components(const std::vector<std::uint8_t>& mask, int nx, int ny, int& count);

void write_mask_pgm(const GridDomain& d, const std::string& path);
/// Raster heatmap of a node field over the whole grid; values outside P are black.
void write_field_pgm(const GridDomain& d, const std::vector<double>& field, const std::string& path);
std::vector<std::uint8_t> read_pgm(const std::string& path, int& width, int& height);

nlohmann::json domain_meta(const GridDomain& d);

} // namespace hs
