#include "hs/spectral.hpp"
#include "hs/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>

namespace hs {

std::string to_string(BcMode m) {
    switch (m) {
    case BcMode::Dirichlet: return "dirichlet";
    case BcMode::Neumann: return "neumann";
    default: return "mixed";
    }
}

BcMode parse_bc_mode(const std::string& s) {
    if (s == "dirichlet" || s == "kill") return BcMode::Dirichlet;
    if (s == "neumann" || s == "reflect") return BcMode::Neumann;
    if (s == "mixed") return BcMode::Mixed;
    throw ConfigError("unknown bc mode '" + s + "' (expected dirichlet, neumann or mixed)");
}

Field Operator::to_field(const Eigen::VectorXd& u) const {
    Field f(domain->kind.size(), 0.0);
    for (int a = 0; a < size(); ++a) f[node_of[a]] = u[a];
    return f;
}

Eigen::VectorXd Operator::from_field(const Field& f) const {
    if (f.size() != domain->kind.size()) throw ConfigError("field does not match domain raster");
    Eigen::VectorXd u(size());
    for (int a = 0; a < size(); ++a) u[a] = f[node_of[a]];
    return u;
}

double Operator::inner(const Field& f, const Field& g) const {
    double s = 0;
    for (int a = 0; a < size(); ++a) s += mass[a] * f[node_of[a]] * g[node_of[a]];
    return domain->h * domain->h * s;
}

std::shared_ptr<const Operator> assemble_laplacian(const GridDomain& d, BcMode mode) {
    auto op = std::make_shared<Operator>();
    op->domain = &d;
    op->mode = mode;
    op->unknown_of.assign(d.kind.size(), -1);
    for (int k = 0; k < static_cast<int>(d.kind.size()); ++k) {
        bool unknown = false;
        if (d.kind[k] == NodeKind::Interior) unknown = true;
        else if (d.kind[k] == NodeKind::Boundary) {
            if (mode == BcMode::Neumann) unknown = true;
            else if (mode == BcMode::Mixed) {
                if (d.node_bc[k] == Bc::None)
                    throw ConfigError("mixed mode: boundary node without a label in domain '" + d.name + "'");
                unknown = d.node_bc[k] == Bc::Neumann;
            }
        }
        if (unknown) {
            op->unknown_of[k] = static_cast<int>(op->node_of.size());
            op->node_of.push_back(k);
        }
    }
    const int n = op->size();
    if (n == 0) throw ConfigError("domain has no unknowns");
    const double w = 0.5 / (d.h * d.h);
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    op->mass = Eigen::VectorXd::Zero(n);
    auto edge = [&](int p, int q) {
        const int a = op->unknown_of[p], b = op->unknown_of[q];
        if (a >= 0) diag[a] += w;
        if (b >= 0) diag[b] += w;
        if (a >= 0 && b >= 0) {
            trip.emplace_back(a, b, -w);
            trip.emplace_back(b, a, -w);
        }
    };
    for (int j = 0; j + 1 < d.ny; ++j)
        for (int i = 0; i + 1 < d.nx; ++i) {
            if (!d.cell_in(i, j)) continue;
            const int n00 = d.index(i, j), n10 = d.index(i + 1, j), n01 = d.index(i, j + 1), n11 = d.index(i + 1, j + 1);
            edge(n00, n10);
            edge(n10, n11);
            edge(n01, n11);
            edge(n00, n01);
            for (int c : {n00, n10, n01, n11})
                if (op->unknown_of[c] >= 0) op->mass[op->unknown_of[c]] += 0.25;
        }
    for (int a = 0; a < n; ++a) trip.emplace_back(a, a, diag[a]);
    op->K.resize(n, n);
    op->K.setFromTriplets(trip.begin(), trip.end());
    const Eigen::VectorXd s = op->mass.cwiseSqrt().cwiseInverse();
    op->A = s.asDiagonal() * op->K * s.asDiagonal();
    op->A.makeCompressed();
    return op;
}

namespace {

// Eigenvalues closer than this (relative) are treated as one symmetric eigenspace.
constexpr double cluster_tol = 1e-9;

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& Y) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    return qr.householderQ() * Eigen::MatrixXd::Identity(Y.rows(), Y.cols());
}

// Rotate each degenerate cluster onto projections of low-order polynomial probes.
void canonicalize(const Operator& op, std::vector<double>& lam, Eigen::MatrixXd& V) {
    const GridDomain& d = *op.domain;
    const int n = op.size();
    double cx = 0, cy = 0;
    for (int a = 0; a < n; ++a) {
        const Vec2 p = d.node_pos(op.node_of[a]);
        cx += p.x;
        cy += p.y;
    }
    cx /= n;
    cy /= n;
    // The constant comes first so a ground state paired with a tunnelling partner stays one-signed.
    std::vector<Eigen::VectorXd> probes(7, Eigen::VectorXd(n));
    for (int a = 0; a < n; ++a) {
        const Vec2 p = d.node_pos(op.node_of[a]);
        const double x = p.x - cx, y = p.y - cy, sm = std::sqrt(op.mass[a]);
        probes[0][a] = sm;
        probes[1][a] = sm * x;
        probes[2][a] = sm * y;
        probes[3][a] = sm * x * y;
        probes[4][a] = sm * (x * x - y * y);
        probes[5][a] = sm * x * x;
        probes[6][a] = sm * x * x * x;
    }
    const int m = static_cast<int>(lam.size());
    int s = 0;
    while (s < m) {
        int e = s + 1;
        while (e < m && lam[e] - lam[s] <= cluster_tol * (1.0 + std::abs(lam[s]))) ++e;
        const int c = e - s;
        if (c > 1) {
            Eigen::MatrixXd B = V.middleCols(s, c);
            Eigen::MatrixXd R = Eigen::MatrixXd::Identity(c, c);  // remaining subspace coordinates
            Eigen::MatrixXd out(n, c);
            int got = 0;
            for (const auto& w : probes) {
                if (got == c) break;
                Eigen::VectorXd coef = R.transpose() * (B.transpose() * w);
                if (coef.norm() <= 1e-8 * w.norm()) continue;
                Eigen::VectorXd dir = R * coef;
                dir.normalize();
                out.col(got++) = B * dir;
                // Remove dir from the remaining subspace.
                Eigen::MatrixXd P = R - dir * (dir.transpose() * R);
                Eigen::JacobiSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeThinU);
                const int rank = c - got;
                R = svd.matrixU().leftCols(rank);
            }
            for (int q = 0; got < c; ++q) out.col(got++) = B * R.col(q);
            V.middleCols(s, c) = out;
            const double mean = [&] {
                double t = 0;
                for (int q = s; q < e; ++q) t += lam[q];
                return t / c;
            }();
            for (int q = s; q < e; ++q) lam[q] = mean;
        }
        s = e;
    }
}

} // namespace

SpectralResult solve_eigs(std::shared_ptr<const Operator> op, int k, const SolveOptions& opt) {
    const int n = op->size();
    if (k < 1) throw ConfigError("solve_eigs: k must be >= 1");
    if (k >= n) throw ConfigError("solve_eigs: k must be smaller than the number of unknowns");
    const int extra = opt.oversample > 0 ? opt.oversample : std::max(8, k / 2);
    const int p = std::min(n, k + extra);
    const double diam = std::max(diameter(*op->domain), op->domain->h);
    const double shift = op->mode == BcMode::Dirichlet ? 0.0 : -0.05 / (diam * diam);

    Eigen::SparseMatrix<double> S = op->A;
    if (shift != 0.0) {
        Eigen::SparseMatrix<double> I(n, n);
        I.setIdentity();
        S = S - shift * I;
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(S);
    if (ldlt.info() != Eigen::Success) throw NonConvergence("solve_eigs: factorization failed", 1.0);

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd X(n, p);
    for (int c = 0; c < p; ++c)
        for (int r = 0; r < n; ++r) X(r, c) = g(rng);
    X = orthonormalize(X);

    std::vector<double> lam(p);
    Eigen::VectorXd res(p);
    Eigen::MatrixXd AX;
    int it = 0, need = k;
    // Iterate past the acceptance target while the residual still improves, so that
    // nearly degenerate pairs (tunnelling splittings) are resolved.
    const double polish = std::min(opt.tolerance, 1e-11);
    double best = 1e300;
    int stall = 0;
    for (; it < opt.max_iterations; ++it) {
        Eigen::MatrixXd Q = orthonormalize(ldlt.solve(X));
        Eigen::MatrixXd AQ = op->A * Q;
        Eigen::MatrixXd H = Q.transpose() * AQ;
        H = 0.5 * (H + H.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        X = Q * es.eigenvectors();
        AX = AQ * es.eigenvectors();
        for (int c = 0; c < p; ++c) {
            lam[c] = es.eigenvalues()[c];
            res[c] = (AX.col(c) - lam[c] * X.col(c)).norm() / X.col(c).norm();
        }
        // A cluster straddling position k must converge as a whole before canonicalization.
        need = k;
        while (need < p - 1 && lam[need] - lam[k - 1] <= cluster_tol * (1.0 + std::abs(lam[k - 1]))) ++need;
        double worst = 0;
        for (int c = 0; c < need; ++c) worst = std::max(worst, res[c] / (1.0 + std::abs(lam[c])));
        if (worst < polish) break;
        if (worst < 0.5 * best) {
            best = worst;
            stall = 0;
        } else if (++stall >= 8 && worst < opt.tolerance) {
            break;
        }
    }
    if (it == opt.max_iterations) {
        double worst = 0;
        for (int c = 0; c < k; ++c) worst = std::max(worst, res[c] / (1.0 + std::abs(lam[c])));
        throw NonConvergence("solve_eigs: no convergence after " + std::to_string(it) +
                                 " iterations (relative residual " + std::to_string(worst) + ")",
                             worst);
    }

    std::vector<double> lv(lam.begin(), lam.begin() + need);
    Eigen::MatrixXd V = X.leftCols(need);
    canonicalize(*op, lv, V);

    SpectralResult r;
    r.mode = op->mode;
    r.iterations = it + 1;
    r.grid_hash = op->domain->hash;
    r.op = op;
    const double h = op->domain->h;
    const Eigen::VectorXd msi = op->mass.cwiseSqrt().cwiseInverse();
    const auto& dom = *op->domain;
    for (int c = 0; c < k; ++c) {
        Eigen::VectorXd v = V.col(c).normalized();
        double l = v.dot(op->A * v);
        if (!r.eigenvalues.empty()) l = std::max(l, r.eigenvalues.back());  // cluster rounding
        r.residuals.push_back((op->A * v - l * v).norm());
        r.eigenvalues.push_back(l);
        Eigen::VectorXd u = msi.cwiseProduct(v) / h;
        if (c == 0) {
            Eigen::Index imax;
            u.cwiseAbs().maxCoeff(&imax);
            if (u[imax] < 0) u = -u;
        } else {
            // Leftmost column first, bottom to top within a column.
            const double cut = 1e-6 * u.cwiseAbs().maxCoeff();
            int best = -1;
            for (int a = 0; a < u.size(); ++a) {
                const int node = op->node_of[a];
                if (dom.kind[node] != NodeKind::Interior || std::abs(u[a]) <= cut) continue;
                if (best < 0) { best = a; continue; }
                const int ib = op->node_of[best] % dom.nx, jb = op->node_of[best] / dom.nx;
                const int ia = node % dom.nx, ja = node / dom.nx;
                if (ia < ib || (ia == ib && ja < jb)) best = a;
            }
            if (best >= 0 && u[best] > 0) u = -u;
        }
        r.eigenfields.push_back(op->to_field(u));
    }
    return r;
}

nlohmann::json SpectralResult::meta() const {
    nlohmann::json j;
    j["bc_mode"] = to_string(mode);
    j["eigenvalues"] = eigenvalues;
    j["residuals"] = residuals;
    j["iterations"] = iterations;
    j["grid_hash"] = grid_hash;
    j["unknowns"] = op ? op->size() : 0;
    return j;
}

HeatState heat_semigroup(const SpectralResult& r, const Field& f0, double t, std::optional<double> tolerance) {
    if (!(t >= 0)) throw ConfigError("heat_semigroup: t must be >= 0");
    const Operator& op = *r.op;
    if (f0.size() != op.domain->kind.size()) throw ConfigError("heat_semigroup: field does not match the domain");
    HeatState s;
    s.t = t;
    s.mode = r.mode;
    s.field.assign(f0.size(), 0.0);
    for (int j = 0; j < r.count(); ++j) {
        const double c = op.inner(f0, r.eigenfields[j]) * std::exp(-r.eigenvalues[j] * t);
        for (int a = 0; a < op.size(); ++a) s.field[op.node_of[a]] += c * r.eigenfields[j][op.node_of[a]];
    }
    const double nf = std::sqrt(op.inner(f0, f0));
    s.truncation_l2 = std::exp(-r.eigenvalues.back() * t) * nf;
    s.truncation_pointwise = s.truncation_l2 / (op.domain->h * std::sqrt(op.mass.minCoeff()));
    if (tolerance && s.truncation_l2 > *tolerance)
        throw ConfigError("heat_semigroup: truncation bound " + std::to_string(s.truncation_l2) +
                          " exceeds tolerance; use more eigenpairs or a larger t");
    return s;
}

HeatState survival_profile(const SpectralResult& r, double t, std::optional<double> tolerance) {
    if (r.mode == BcMode::Neumann) throw ConfigError("survival_profile needs a Dirichlet or mixed spectrum");
    Field one(r.op->domain->kind.size(), 0.0);
    for (int node : r.op->node_of) one[node] = 1.0;
    return heat_semigroup(r, one, t, tolerance);
}

ClassicalBounds classical_bounds(const GridDomain& d) {
    ClassicalBounds b;
    b.diameter = diameter(d);
    b.area = d.area();
    b.mu2_lower = 1.0 / (b.diameter * b.diameter);
    b.mu2_upper = 4.0 * std::numbers::pi * std::numbers::pi / (std::numbers::pi * b.area);
    return b;
}

double zeta(int n, double eps) {
    if (!(eps > 0) || eps > 1) throw ConfigError("zeta: eps must lie in (0,1]");
    const double dn = n;
    return std::exp(dn / 4.0) * (std::numbers::sqrt2 / std::pow(8.0 * dn, dn / 4.0)) *
           std::sqrt(std::tgamma(dn) / std::tgamma(dn / 2.0)) * std::pow(1.0 + 1.0 / std::sqrt(eps), dn / 2.0);
}

Field constant_field(const GridDomain& d, double v, bool include_boundary) {
    Field f(d.kind.size(), 0.0);
    for (std::size_t k = 0; k < f.size(); ++k)
        if (d.kind[k] == NodeKind::Interior || (include_boundary && d.kind[k] == NodeKind::Boundary)) f[k] = v;
    return f;
}

Field indicator_field(const GridDomain& d, const std::vector<std::uint8_t>& mask) {
    Field f(d.kind.size(), 0.0);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = mask[k] ? 1.0 : 0.0;
    return f;
}

void write_eigen_csv(const GridDomain& d, const Field& f, const std::string& path) {
    std::ofstream o(path);
    if (!o) throw ConfigError("cannot write " + path);
    o << "x,y,value\n" << std::setprecision(12);
    for (int k = 0; k < static_cast<int>(f.size()); ++k)
        if (d.kind[k] != NodeKind::Outside) {
            const Vec2 p = d.node_pos(k);
            o << p.x << "," << p.y << "," << f[k] << "\n";
        }
}

} // namespace hs
