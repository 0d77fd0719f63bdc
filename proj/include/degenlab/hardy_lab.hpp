#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "degenlab/errors.hpp"
#include "degenlab/radial_mesh.hpp"
#include "degenlab/radial_spectrum.hpp"
#include "degenlab/tridiagonal_eigen.hpp"
#include "degenlab/weighted_assembly.hpp"

namespace degenlab {

enum class CriticalBoundary { Mixed, Dirichlet };  // mixed: u(1) = 0, u(delta) free
enum class CriticalMethod { Direct, LogTransform };

inline std::string_view to_string(CriticalBoundary bc) {
    return bc == CriticalBoundary::Mixed ? "mixed" : "dirichlet";
}
inline std::string_view to_string(CriticalMethod m) {
    return m == CriticalMethod::Direct ? "direct" : "log-transform";
}

struct HardyReport {
    double alpha = 0.0;
    bool critical = false;
    double delta = 0.0;                // truncation, critical case only
    double numerical_best_constant = 0.0;
    double lumped_constant = 0.0;      // same quotient with the lumped weighted mass, for monitoring
    double reference = 0.0;            // 4/(1-alpha)^2 bound or exact critical value
    double ratio = 0.0;                // numerical / reference
    double relative_error = 0.0;       // |numerical - reference| / reference
    int cells = 0;
    double grading = 1.0;
    std::string bc;
    std::string method;
};

/// Both sides of int r^{alpha-2} u^2 <= C int r^alpha (u')^2, C = 4/(1-alpha)^2.
struct SubcriticalCheck {
    double lhs = 0.0;           // int r^{alpha-2} u^2
    double energy = 0.0;        // int r^alpha (u')^2
    double constant = 0.0;      // 4/(1-alpha)^2
    double rhs = 0.0;           // constant * energy
    bool holds = true;
};

inline double subcritical_hardy_bound(double alpha) { return 4.0 / ((1.0 - alpha) * (1.0 - alpha)); }

namespace detail {

inline SubcriticalCheck finish_check(double alpha, double lhs, double energy) {
    SubcriticalCheck c;
    c.lhs = lhs;
    c.energy = energy;
    c.constant = subcritical_hardy_bound(alpha);
    c.rhs = c.constant * energy;
    // exact integrals of the same quadratic forms; allow only roundoff
    c.holds = lhs <= c.rhs * (1.0 + 1e-12) + 1e-300;
    return c;
}

inline void require_hardy_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidAlpha, "alpha must lie in (0,1)");
}

}  // namespace detail

/// Check for a piecewise-linear u given by nodal values on a mesh of [0,1]. The
/// integrals are the exact element integrals, so no quadrature error enters.
inline SubcriticalCheck subcritical_hardy_check(double alpha, const RadialMesh& mesh, const std::vector<double>& u) {
    detail::require_hardy_alpha(alpha);
    if (!mesh.touches_origin()) fail(ErrorCode::InvalidMeshSpec, "mesh must start at r = 0");
    if (u.size() != mesh.nodes.size()) fail(ErrorCode::GridMismatch, "nodal vector does not match mesh");
    if (u.front() != 0.0) fail(ErrorCode::BoundaryViolation, "u(0) must vanish");
    const auto energy_sys = assemble_weighted_system(mesh, alpha, 0.0, BoundaryCondition::DirichletLeftOnly);
    const auto weight_sys = assemble_weighted_system(mesh, 0.0, alpha - 2.0, BoundaryCondition::DirichletLeftOnly);
    const std::vector<double> x(u.begin() + 1, u.end());
    return detail::finish_check(alpha, weight_sys.mass.quadratic_form(x), energy_sys.stiffness.quadratic_form(x));
}

/// u(r) = sum_i c_i r^{e_i}.
struct PowerSum {
    std::vector<double> coeffs;
    std::vector<double> exponents;
};

/// Closed-form check for a finite power sum:
///   int r^{alpha-2} u^2 = sum c_i c_j / (alpha - 1 + e_i + e_j),
///   int r^alpha (u')^2  = sum c_i c_j e_i e_j / (alpha - 1 + e_i + e_j).
inline SubcriticalCheck subcritical_hardy_check(double alpha, const PowerSum& u) {
    detail::require_hardy_alpha(alpha);
    if (u.coeffs.size() != u.exponents.size()) fail(ErrorCode::GridMismatch, "coefficient/exponent size mismatch");
    for (std::size_t i = 0; i < u.coeffs.size(); ++i) {
        if (u.coeffs[i] == 0.0) continue;
        if (!(u.exponents[i] > 0.0)) fail(ErrorCode::BoundaryViolation, "u(0) must vanish");
        if (!(alpha - 1.0 + 2.0 * u.exponents[i] > 0.0))
            fail(ErrorCode::DivergentWeight, "r^{alpha-2} u^2 not integrable at 0");
    }
    double lhs = 0.0, energy = 0.0;
    for (std::size_t i = 0; i < u.coeffs.size(); ++i) {
        for (std::size_t j = 0; j < u.coeffs.size(); ++j) {
            if (u.coeffs[i] == 0.0 || u.coeffs[j] == 0.0) continue;
            const double denom = alpha - 1.0 + u.exponents[i] + u.exponents[j];
            const double cc = u.coeffs[i] * u.coeffs[j];
            lhs += cc / denom;
            energy += cc * u.exponents[i] * u.exponents[j] / denom;
        }
    }
    return detail::finish_check(alpha, lhs, energy);
}

namespace detail {

/// max_u int r^q u^2 / int r^p (u')^2 over the P1 space, as 1 / (smallest pencil eigenvalue),
/// with the consistent mass (exact discrete quotient) and with the lumped mass.
inline std::pair<double, double> max_rayleigh_quotient(const RadialMesh& mesh, double p, double q,
                                                      BoundaryCondition bc) {
    const auto sys = assemble_weighted_system(mesh, p, q, bc);
    const double mu = pencil_eigenvalue(sys.stiffness, sys.mass, 0);
    SymTridiag lumped;
    lumped.diag = sys.lumped;
    lumped.off.assign(sys.lumped.size() - 1, 0.0);
    const double mu_lumped = pencil_eigenvalue(sys.stiffness, lumped, 0);
    return {1.0 / mu, 1.0 / mu_lumped};
}

}  // namespace detail

/// Largest ratio int r^{alpha-2} u^2 / int r^alpha (u')^2 over piecewise-linear u with
/// u(0) = 0 (left-only) or u(0) = u(1) = 0. The discrete space is a subspace of the
/// continuous one, so the consistent-mass value never exceeds 4/(1-alpha)^2 and grows
/// under nested refinement.
inline HardyReport best_subcritical_constant(double alpha, const RadialMesh& mesh,
                                             BoundaryCondition bc = BoundaryCondition::DirichletLeftOnly) {
    detail::require_hardy_alpha(alpha);
    if (!left_constrained(bc)) fail(ErrorCode::BoundaryViolation, "the Hardy class needs u(0) = 0");
    const auto [c, c_lumped] = detail::max_rayleigh_quotient(mesh, alpha, alpha - 2.0, bc);
    HardyReport rep;
    rep.alpha = alpha;
    rep.numerical_best_constant = c;
    rep.lumped_constant = c_lumped;
    rep.reference = subcritical_hardy_bound(alpha);
    rep.ratio = c / rep.reference;
    rep.relative_error = std::abs(c - rep.reference) / rep.reference;
    rep.cells = mesh.cells();
    rep.grading = mesh.grading;
    rep.bc = std::string(to_string(bc));
    rep.method = "direct";
    return rep;
}

/// 4 |ln delta|^2 / pi^2 (mixed) or |ln delta|^2 / pi^2 (dirichlet).
inline double exact_critical_constant(double delta, CriticalBoundary bc) {
    if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::DeltaOutOfRange, "delta must lie in (0,1)");
    const double L = std::log(delta);
    const double base = L * L / (std::numbers::pi * std::numbers::pi);
    return bc == CriticalBoundary::Mixed ? 4.0 * base : base;
}

/// Best constant of int_delta^1 u^2 / r <= C int_delta^1 r (u')^2 with u(1) = 0 (mixed) or
/// u(delta) = u(1) = 0 (dirichlet).
///   Direct: weights (p, q) = (1, -1) on a mesh uniform in ln r.
///   LogTransform: x = -ln r maps the quotient to int v^2 / int (v')^2 on (0, L), L = |ln delta|,
///   with v(0) = 0 and v(L) free (mixed) or v(0) = v(L) = 0.
inline HardyReport critical_truncated_constant(double delta, CriticalBoundary bc, CriticalMethod method,
                                               int cells = 4096) {
    const double exact = exact_critical_constant(delta, bc);
    RadialMesh mesh;
    double p = 0.0, q = 0.0;
    BoundaryCondition fem_bc;
    if (method == CriticalMethod::Direct) {
        mesh = build_geometric_mesh(delta, cells);
        p = 1.0;
        q = -1.0;
        fem_bc = bc == CriticalBoundary::Mixed ? BoundaryCondition::DirichletRightOnly
                                               : BoundaryCondition::DirichletDirichlet;
    } else {
        mesh = build_uniform_mesh(0.0, -std::log(delta), cells);
        fem_bc = bc == CriticalBoundary::Mixed ? BoundaryCondition::DirichletLeftOnly
                                               : BoundaryCondition::DirichletDirichlet;
    }
    const auto [c, c_lumped] = detail::max_rayleigh_quotient(mesh, p, q, fem_bc);
    HardyReport rep;
    rep.alpha = 1.0;
    rep.critical = true;
    rep.delta = delta;
    rep.numerical_best_constant = c;
    rep.lumped_constant = c_lumped;
    rep.reference = exact;
    rep.ratio = c / exact;
    rep.relative_error = std::abs(c - exact) / exact;
    rep.cells = cells;
    rep.grading = 1.0;
    rep.bc = std::string(to_string(bc));
    rep.method = std::string(to_string(method));
    return rep;
}

struct PowerFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least-squares fit of ln C against ln |ln delta|.
inline PowerFit blowup_rate_fit(const std::vector<double>& deltas, const std::vector<double>& constants) {
    if (deltas.size() != constants.size()) fail(ErrorCode::GridMismatch, "deltas and constants differ in length");
    if (deltas.size() < 4) fail(ErrorCode::InsufficientData, "need at least 4 truncation values");
    double dmin = 1.0, dmax = 0.0;
    for (double d : deltas) {
        if (!(d > 0.0 && d < 1.0)) fail(ErrorCode::DeltaOutOfRange, "delta must lie in (0,1)");
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    if (dmax / dmin < 100.0 * (1.0 - 1e-12)) fail(ErrorCode::InsufficientData, "deltas must span two decades");
    const std::size_t n = deltas.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(constants[i] > 0.0)) fail(ErrorCode::NonPositiveInput, "constants must be positive");
        x[i] = std::log(std::abs(std::log(deltas[i])));
        y[i] = std::log(constants[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    PowerFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

/// Numerical constants for each delta followed by the fit.
inline std::pair<PowerFit, std::vector<HardyReport>> blowup_rate_scan(const std::vector<double>& deltas,
                                                                      CriticalBoundary bc,
                                                                      CriticalMethod method = CriticalMethod::Direct,
                                                                      int cells = 8192) {
    std::vector<HardyReport> reports;
    std::vector<double> values;
    for (double d : deltas) {
        reports.push_back(critical_truncated_constant(d, bc, method, cells));
        values.push_back(reports.back().numerical_best_constant);
    }
    return {blowup_rate_fit(deltas, values), reports};
}

}  // namespace degenlab
