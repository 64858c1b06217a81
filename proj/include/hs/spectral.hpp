#pragma once
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <json.hpp>

#include "hs/geometry.hpp"
#include "hs/levelset.hpp"

namespace hs {

enum class BcMode { Dirichlet, Neumann, Mixed };
std::string to_string(BcMode m);
BcMode parse_bc_mode(const std::string& s);

/// Discrete -Laplacian on the unknown nodes. Dirichlet nodes are eliminated; Neumann walls
/// use the vertex-centred finite-volume form (mirror ghost nodes), which keeps K symmetric
/// with a lumped diagonal mass. A = M^{-1/2} K M^{-1/2} is the symmetric operator solved.
struct Operator {
    const GridDomain* domain = nullptr;  // not owned; must outlive the operator
    BcMode mode = BcMode::Dirichlet;
    std::vector<int> node_of;            // unknown -> node index
    std::vector<int> unknown_of;         // node index -> unknown, -1 if fixed to zero
    Eigen::SparseMatrix<double> K;       // stiffness, 1/length^2
    Eigen::VectorXd mass;                // lumped dual-cell weight (1 for a full cell)
    Eigen::SparseMatrix<double> A;

    int size() const { return static_cast<int>(node_of.size()); }
    /// Full-raster field from a vector of unknowns (zero elsewhere).
    Field to_field(const Eigen::VectorXd& u) const;
    Eigen::VectorXd from_field(const Field& f) const;
    /// <f,g> = h^2 sum M f g over unknown nodes.
    double inner(const Field& f, const Field& g) const;
};

/// Labels come from the domain in Mixed mode; Dirichlet/Neumann override every wall.
std::shared_ptr<const Operator> assemble_laplacian(const GridDomain& d, BcMode mode);

struct SolveOptions {
    int max_iterations = 10000;
    double tolerance = 1e-8;      // residual target relative to (1 + lambda)
    std::uint64_t seed = 12345;   // starting block
    int oversample = 0;           // 0 = automatic
};

struct SpectralResult {
    BcMode mode = BcMode::Dirichlet;
    std::vector<double> eigenvalues;
    std::vector<Field> eigenfields;   // L2-normalized in the discrete inner product
    std::vector<double> residuals;    // ||A v - lambda v|| / ||v||
    int iterations = 0;
    std::string grid_hash;
    std::shared_ptr<const Operator> op;

    int count() const { return static_cast<int>(eigenvalues.size()); }
    nlohmann::json meta() const;
};

/// k smallest eigenpairs by shift-invert block subspace iteration with Rayleigh-Ritz.
/// Within a degenerate cluster the basis is rotated onto the projections of x, y, xy, ...
/// so results do not depend on the starting block. Signs: the first field has a positive
/// maximum; every other field is negative at the first non-negligible node scanning
/// columns from the left. Throws NonConvergence with the achieved residual.
SpectralResult solve_eigs(std::shared_ptr<const Operator> op, int k, const SolveOptions& opt = {});

struct HeatState {
    double t = 0;
    Field field;
    BcMode mode = BcMode::Dirichlet;
    double truncation_l2 = 0;       // e^{-lambda_k t} ||f0||, lambda_k the largest computed
    double truncation_pointwise = 0;  // the same divided by h sqrt(min mass)
};

/// Spectral synthesis of e^{t Delta} f0. Throws ConfigError when a tolerance is given and
/// the truncation bound exceeds it.
HeatState heat_semigroup(const SpectralResult& r, const Field& f0, double t,
                         std::optional<double> tolerance = std::nullopt);

/// q_t = e^{t Delta} 1 on a Dirichlet (or mixed) result.
HeatState survival_profile(const SpectralResult& r, double t, std::optional<double> tolerance = std::nullopt);

struct ClassicalBounds {
    double diameter = 0, area = 0;
    double mu2_lower = 0;  // 1/diam^2
    double mu2_upper = 0;  // 4 pi^2 / (pi |Omega|)
};
ClassicalBounds classical_bounds(const GridDomain& d);

/// zeta_n(eps) of the heat bound max q_t <= zeta_n(eps) e^{-(1-eps) lambda_1 t}.
double zeta(int n, double eps);

Field constant_field(const GridDomain& d, double v, bool include_boundary);
Field indicator_field(const GridDomain& d, const std::vector<std::uint8_t>& mask);

void write_eigen_csv(const GridDomain& d, const Field& f, const std::string& path);

} // namespace hs
