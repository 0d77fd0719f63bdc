#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "degenlab/errors.hpp"
#include "degenlab/radial_mesh.hpp"
#include "degenlab/tridiagonal_eigen.hpp"
#include "degenlab/weighted_assembly.hpp"

namespace degenlab {

/// One discrete eigenpair of K x = rho D x (D the lumped mass).
struct RadialEigenpair {
    int index = 1;                 // 1-based
    double rho = 0.0;
    std::vector<double> R;         // nodal values on the full mesh, zero on constrained nodes
    double flux_at_1 = 0.0;        // R'(right end)
    double weighted_energy = 0.0;  // int r^p (R')^2 = R^T K R
    double mass_norm = 0.0;        // R^T D R
};

/// Eigenbasis together with the matrices it was computed from.
struct RadialBasis {
    WeightedMatrices system;
    std::vector<RadialEigenpair> pairs;

    std::size_t size() const { return pairs.size(); }
    const RadialMesh& mesh() const { return system.mesh; }
};

namespace detail {

/// Derivative at the last node of the quadratic through the last three nodes.
inline double one_sided_derivative_right(const std::vector<double>& x, const std::vector<double>& u) {
    const std::size_t n = x.size();
    const double x0 = x[n - 3], x1 = x[n - 2], x2 = x[n - 1];
    const double u0 = u[n - 3], u1 = u[n - 2], u2 = u[n - 1];
    const double h1 = x1 - x0, h2 = x2 - x1;
    // d/dx of the Lagrange interpolant at x2
    const double c0 = h2 / (h1 * (h1 + h2));
    const double c1 = -(h1 + h2) / (h1 * h2);
    const double c2 = (h1 + 2.0 * h2) / (h2 * (h1 + h2));
    return c0 * u0 + c1 * u1 + c2 * u2;
}

}  // namespace detail

/// Boundary flux R'(1) of a computed eigenpair. With a Dirichlet node at the right
/// end the weak form tested against the last hat gives
///   r^p R'(1) = (K R)_N - rho (M R)_N,
/// with the consistent mass row. Otherwise a second-order one-sided difference.
inline double recover_right_flux(const WeightedMatrices& m, const std::vector<double>& nodal, double rho) {
    const auto& x = m.mesh.nodes;
    const std::size_t n = x.size();
    if (right_constrained(m.bc)) {
        const double prev = nodal[n - 2];
        const double weighted = m.right_stiffness_coupling * prev - rho * m.right_mass_coupling * prev;
        const double flux = weighted / std::pow(x[n - 1], m.p);
        if (std::isfinite(flux)) return flux;
    }
    return detail::one_sided_derivative_right(x, nodal);
}

/// x^T K x summed cell by cell as k_e (x_{j+1} - x_j)^2. Every term is nonnegative, so
/// this keeps full relative accuracy where the assembled form cancels against ||K||.
inline double element_energy(const WeightedMatrices& m, const std::vector<double>& nodal) {
    const auto& x = m.mesh.nodes;
    double s = 0.0;
    for (std::size_t c = 0; c + 1 < x.size(); ++c) {
        const double d = nodal[c + 1] - nodal[c];
        s += element_stiffness(x[c], x[c + 1], m.p).ll * d * d;
    }
    return s;
}

/// Smallest `k_max` eigenpairs of K x = rho M x with M lumped to its diagonal D,
/// solved as the standard problem D^{-1/2} K D^{-1/2} y = rho y.
inline std::vector<RadialEigenpair> solve_eigenpairs(const WeightedMatrices& m, int k_max) {
    const std::size_t n = m.dofs();
    if (k_max < 1 || static_cast<std::size_t>(k_max) > n)
        fail(ErrorCode::TruncationTooSmall, "k_max = " + std::to_string(k_max) + " exceeds " +
                                                std::to_string(n) + " interior dofs");
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(m.lumped[i]);
    SymTridiag a;
    a.diag.resize(n);
    a.off.resize(n - 1);
    for (std::size_t i = 0; i < n; ++i) a.diag[i] = m.stiffness.diag[i] * inv_sqrt[i] * inv_sqrt[i];
    for (std::size_t i = 0; i + 1 < n; ++i) a.off[i] = m.stiffness.off[i] * inv_sqrt[i] * inv_sqrt[i + 1];

    const auto raw = smallest_eigenpairs(a, k_max);
    std::vector<RadialEigenpair> out;
    out.reserve(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = raw[k].vector[i] * inv_sqrt[i];
        // sign: first significant value from the left is positive
        double peak = 0.0;
        for (double v : x) peak = std::max(peak, std::abs(v));
        for (double v : x) {
            if (std::abs(v) > 1e-8 * peak) {
                if (v < 0.0)
                    for (double& w : x) w = -w;
                break;
            }
        }
        RadialEigenpair pair;
        pair.index = static_cast<int>(k) + 1;
        double dnorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) dnorm += m.lumped[i] * x[i] * x[i];
        pair.mass_norm = dnorm;
        pair.R = m.to_nodal(x);
        pair.weighted_energy = element_energy(m, pair.R);
        // bisection is only accurate to eps ||A||, which grading makes huge; the Rayleigh
        // quotient of the inverse-iteration vector is accurate to eps rho
        pair.rho = pair.weighted_energy / dnorm;
        pair.flux_at_1 = recover_right_flux(m, pair.R, pair.rho);
        out.push_back(std::move(pair));
    }
    return out;
}

/// Default radial basis for the wave problem: -(r^alpha R')' = rho R, R(0) = R(1) = 0.
/// With nodes (j/N)^g the eigenvalue error behaves like N^{-min(2, g(1-alpha))}, so g must
/// exceed 2/(1-alpha) strictly; exactly 2/(1-alpha) leaves a slowly converging log factor.
/// The first cell is N^{-g} long and the scaled pencil overflows somewhere past g = 28 at
/// N = 16384, hence the cap; above alpha = 0.9 the order drops to 25(1-alpha).
inline constexpr double kMaxDefaultGrading = 25.0;

inline double default_grading(double alpha) {
    return std::min(kMaxDefaultGrading, std::max(2.0, 2.5 / (1.0 - alpha)));
}

inline RadialBasis build_radial_basis(double alpha, int k_max, int cells = 2048, double grading = 0.0) {
    if (!(alpha >= 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidAlpha, "alpha must lie in [0,1)");
    if (grading <= 0.0) grading = default_grading(alpha);
    RadialBasis basis;
    basis.system = assemble_weighted_system(build_graded_mesh(cells, grading), alpha, 0.0,
                                            BoundaryCondition::DirichletDirichlet);
    basis.pairs = solve_eigenpairs(basis.system, k_max);
    return basis;
}

/// Discrete inner products on dof vectors.
inline double lumped_inner(const WeightedMatrices& m, const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.dofs(); ++i) s += m.lumped[i] * u[m.dof_nodes[i]] * v[m.dof_nodes[i]];
    return s;
}

inline double stiffness_inner(const WeightedMatrices& m, const std::vector<double>& u, const std::vector<double>& v) {
    const std::size_t n = m.dofs();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ui = u[m.dof_nodes[i]];
        s += m.stiffness.diag[i] * ui * v[m.dof_nodes[i]];
        if (i + 1 < n) {
            s += m.stiffness.off[i] * (ui * v[m.dof_nodes[i + 1]] + u[m.dof_nodes[i + 1]] * v[m.dof_nodes[i]]);
        }
    }
    return s;
}

struct EllipticIdentityReport {
    double g_norm_sq = 0.0;          // ||g||^2, nodal route
    double mu_term = 0.0;            // mu^2 ||u||^2
    double flux_divergence_sq = 0.0; // ||d_r(r^alpha u')||^2 = sum c_k^2 rho_k^2, modal route
    double cross_term = 0.0;         // 2 mu int r^alpha (u')^2
    double relative_residual = 0.0;  // |lhs - rhs| / lhs
};

/// Checks ||g||^2 = mu^2 ||u||^2 + ||d_r(r^alpha u')||^2 + 2 mu int r^alpha (u')^2 for
/// g = mu u - d_r(r^alpha u') and u = sum_k c_k R_k. The left side is evaluated from the
/// nodal vector (g = mu u + D^{-1} K u), the flux term from the modal coefficients.
inline EllipticIdentityReport elliptic_identity_residual(const RadialBasis& basis, double mu,
                                                         const std::vector<double>& coefficients) {
    const auto& m = basis.system;
    if (coefficients.size() > basis.pairs.size())
        fail(ErrorCode::TruncationTooSmall, "more coefficients than eigenpairs");
    const std::size_t n = m.dofs();
    std::vector<double> u(n, 0.0);
    for (std::size_t k = 0; k < coefficients.size(); ++k)
        for (std::size_t i = 0; i < n; ++i) u[i] += coefficients[k] * basis.pairs[k].R[m.dof_nodes[i]];
    std::vector<double> ku;
    m.stiffness.apply(u, ku);
    double g2 = 0.0, u2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = mu * u[i] + ku[i] / m.lumped[i];
        g2 += m.lumped[i] * g * g;
        u2 += m.lumped[i] * u[i] * u[i];
    }
    double flux_sq = 0.0;
    for (std::size_t k = 0; k < coefficients.size(); ++k) {
        const double v = coefficients[k] * basis.pairs[k].rho;
        flux_sq += v * v;
    }
    EllipticIdentityReport rep;
    rep.g_norm_sq = g2;
    rep.mu_term = mu * mu * u2;
    rep.flux_divergence_sq = flux_sq;
    rep.cross_term = 2.0 * mu * m.stiffness.quadratic_form(u);
    const double rhs = rep.mu_term + rep.flux_divergence_sq + rep.cross_term;
    rep.relative_residual = g2 > 0.0 ? std::abs(g2 - rhs) / g2 : std::abs(rhs);
    return rep;
}

}  // namespace degenlab
