#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "degenlab/errors.hpp"
#include "degenlab/radial_mesh.hpp"

namespace degenlab {

enum class BoundaryCondition { DirichletDirichlet, DirichletLeftOnly, DirichletRightOnly };

inline std::string_view to_string(BoundaryCondition bc) {
    switch (bc) {
        case BoundaryCondition::DirichletDirichlet: return "dirichlet-dirichlet";
        case BoundaryCondition::DirichletLeftOnly: return "dirichlet-left-only";
        case BoundaryCondition::DirichletRightOnly: return "dirichlet-right-only";
    }
    return "unknown";
}

inline bool left_constrained(BoundaryCondition bc) { return bc != BoundaryCondition::DirichletRightOnly; }
inline bool right_constrained(BoundaryCondition bc) { return bc != BoundaryCondition::DirichletLeftOnly; }

/// Symmetric tridiagonal matrix: `diag` of size n, `off` of size n - 1.
struct SymTridiag {
    std::vector<double> diag;
    std::vector<double> off;

    std::size_t size() const { return diag.size(); }

    void apply(const std::vector<double>& x, std::vector<double>& y) const {
        const std::size_t n = diag.size();
        y.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double v = diag[i] * x[i];
            if (i > 0) v += off[i - 1] * x[i - 1];
            if (i + 1 < n) v += off[i] * x[i + 1];
            y[i] = v;
        }
    }

    double quadratic_form(const std::vector<double>& x) const {
        double s = 0.0;
        for (std::size_t i = 0; i < diag.size(); ++i) {
            s += diag[i] * x[i] * x[i];
            if (i + 1 < diag.size()) s += 2.0 * off[i] * x[i] * x[i + 1];
        }
        return s;
    }
};

/// Element matrices of one cell [a, b] for the P1 hat functions (left L, right R).
struct ElementPair {
    double ll = 0.0;
    double lr = 0.0;
    double rr = 0.0;
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// int_a^b r^m dr, with a^{m+1} expm1((m+1) log1p(h/a)) / (m+1) when a > 0.
inline double power_integral(double a, double b, double m) {
    if (a == 0.0) return (m > -1.0) ? std::pow(b, m + 1.0) / (m + 1.0) : kInf;
    const double ratio = (b - a) / a;
    if (m == -1.0) return std::log1p(ratio);
    return std::pow(a, m + 1.0) * std::expm1((m + 1.0) * std::log1p(ratio)) / (m + 1.0);
}

}  // namespace detail

/// int_a^b r^p phi_i' phi_j' dr for the two hats: (int r^p) / h^2 times [[1,-1],[-1,1]].
inline ElementPair element_stiffness(double a, double b, double p) {
    const double h = b - a;
    const double s = detail::power_integral(a, b, p) / (h * h);
    return {s, -s, s};
}

/// int_a^b r^q phi_i phi_j dr in closed form. Divergent entries are +inf.
///
/// For a > 0 and h/a <= 1/2 the weight is expanded as a^q (1 + x)^q, x = (r - a)/a,
/// and the binomial series is integrated term by term against the hat products;
/// this avoids the cancellation of the raw moment formula on small cells.
inline ElementPair element_mass(double a, double b, double q) {
    const double h = b - a;
    ElementPair e;
    if (a == 0.0) {
        const double scale = std::pow(b, q + 1.0);
        e.ll = (q > -1.0) ? scale * 2.0 / ((q + 1.0) * (q + 2.0) * (q + 3.0)) : detail::kInf;
        e.lr = (q > -2.0) ? scale / ((q + 2.0) * (q + 3.0)) : detail::kInf;
        e.rr = (q > -3.0) ? scale / (q + 3.0) : detail::kInf;
        return e;
    }
    const double rho = h / a;
    if (rho <= 0.5) {
        const double scale = std::pow(a, q + 1.0);
        double coeff = 1.0;  // binom(q, k)
        double rpow = rho;   // rho^{k+1}
        double sll = 0.0, slr = 0.0, srr = 0.0;
        for (int k = 0; k < 200; ++k) {
            const double kk = k;
            const double term = coeff * rpow;
            const double tll = term * 2.0 / ((kk + 1.0) * (kk + 2.0) * (kk + 3.0));
            const double tlr = term / ((kk + 2.0) * (kk + 3.0));
            const double trr = term / (kk + 3.0);
            sll += tll;
            slr += tlr;
            srr += trr;
            if (std::abs(trr) <= 1e-18 * std::abs(srr) && k > 1) break;
            coeff *= (q - kk) / (kk + 1.0);
            rpow *= rho;
            if (coeff == 0.0) break;
        }
        return {scale * sll, scale * slr, scale * srr};
    }
    const double i0 = detail::power_integral(a, b, q);
    const double i1 = detail::power_integral(a, b, q + 1.0);
    const double i2 = detail::power_integral(a, b, q + 2.0);
    const double h2 = h * h;
    e.ll = (b * b * i0 - 2.0 * b * i1 + i2) / h2;
    e.lr = (-a * b * i0 + (a + b) * i1 - i2) / h2;
    e.rr = (a * a * i0 - 2.0 * a * i1 + i2) / h2;
    return e;
}

/// Stiffness int r^p u' v' and mass int r^q u v on the free degrees of freedom.
struct WeightedMatrices {
    RadialMesh mesh;
    double p = 0.0;
    double q = 0.0;
    BoundaryCondition bc = BoundaryCondition::DirichletDirichlet;
    std::vector<int> dof_nodes;  // mesh node index of each free dof
    SymTridiag stiffness;
    SymTridiag mass;              // consistent
    std::vector<double> lumped;   // row sums of the full mass matrix, int r^q phi_i
    // couplings of the last mesh node (r = right end) to its neighbour, used for flux recovery
    double right_stiffness_coupling = 0.0;
    double right_mass_coupling = 0.0;

    std::size_t dofs() const { return dof_nodes.size(); }

    /// Expands dof values to a full nodal vector with zeros on constrained nodes.
    std::vector<double> to_nodal(const std::vector<double>& x) const {
        std::vector<double> out(mesh.nodes.size(), 0.0);
        for (std::size_t i = 0; i < dof_nodes.size(); ++i) out[dof_nodes[i]] = x[i];
        return out;
    }
};

inline void check_integrability(const RadialMesh& mesh, double p, double q, BoundaryCondition bc) {
    if (!mesh.touches_origin()) return;
    if (!(p > -1.0))
        fail(ErrorCode::DivergentWeight, "stiffness weight r^" + std::to_string(p) + " not integrable at 0");
    const double q_min = left_constrained(bc) ? -2.0 : -1.0;
    if (!(q > q_min))
        fail(ErrorCode::DivergentWeight, "mass weight r^" + std::to_string(q) + " requires q > " +
                                             std::to_string(q_min) + " for this boundary condition");
}

inline WeightedMatrices assemble_weighted_system(const RadialMesh& mesh, double p, double q, BoundaryCondition bc) {
    check_mesh(mesh);
    check_integrability(mesh, p, q, bc);

    const int n_nodes = static_cast<int>(mesh.nodes.size());
    const int first = left_constrained(bc) ? 1 : 0;
    const int last = right_constrained(bc) ? n_nodes - 2 : n_nodes - 1;

    WeightedMatrices m;
    m.mesh = mesh;
    m.p = p;
    m.q = q;
    m.bc = bc;
    for (int j = first; j <= last; ++j) m.dof_nodes.push_back(j);
    const std::size_t n = m.dof_nodes.size();
    m.stiffness.diag.assign(n, 0.0);
    m.stiffness.off.assign(n > 0 ? n - 1 : 0, 0.0);
    m.mass.diag.assign(n, 0.0);
    m.mass.off.assign(n > 0 ? n - 1 : 0, 0.0);
    m.lumped.assign(n, 0.0);

    auto dof_of = [&](int node) { return (node >= first && node <= last) ? node - first : -1; };

    for (int c = 0; c < n_nodes - 1; ++c) {
        const double a = mesh.nodes[c];
        const double b = mesh.nodes[c + 1];
        const ElementPair ks = element_stiffness(a, b, p);
        const ElementPair ms = element_mass(a, b, q);
        const int il = dof_of(c);
        const int ir = dof_of(c + 1);
        if (il >= 0) {
            m.stiffness.diag[il] += ks.ll;
            m.mass.diag[il] += ms.ll;
            m.lumped[il] += ms.ll + ms.lr;
        }
        if (ir >= 0) {
            m.stiffness.diag[ir] += ks.rr;
            m.mass.diag[ir] += ms.rr;
            m.lumped[ir] += ms.rr + ms.lr;
        }
        if (il >= 0 && ir >= 0) {
            m.stiffness.off[il] += ks.lr;
            m.mass.off[il] += ms.lr;
        }
        if (c == n_nodes - 2) {
            m.right_stiffness_coupling = ks.lr;
            m.right_mass_coupling = ms.lr;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(m.stiffness.diag[i]) || !std::isfinite(m.lumped[i]) || !(m.lumped[i] > 0.0))
            fail(ErrorCode::DivergentWeight, "non-finite element integral at dof " + std::to_string(i));
    return m;
}

}  // namespace degenlab
