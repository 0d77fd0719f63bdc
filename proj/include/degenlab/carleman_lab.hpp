#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "degenlab/analytic_mode.hpp"
#include "degenlab/cutoffs.hpp"
#include "degenlab/errors.hpp"
#include "degenlab/params.hpp"
#include "degenlab/quadrature.hpp"

namespace degenlab {

// ---------------------------------------------------------------------------
// Weight xi = theta^2 + r^{2-alpha} - beta (t - t0)^2, sigma = exp(lambda xi)
// ---------------------------------------------------------------------------

/// Pair of components (theta, r).
struct Vec2 {
    double theta = 0.0;
    double r = 0.0;
};

/// Symmetric 2x2 matrix in (theta, r).
struct Sym2 {
    double tt = 0.0;
    double tr = 0.0;
    double rr = 0.0;
};

/// xi, sigma and every derivative used by the conjugated operator at one point.
/// At r = 0 the entries carrying r^{-alpha} are +infinity and `hessian_bounded` is false.
struct WeightDerivatives {
    double xi = 0.0;
    double sigma = 0.0;
    Vec2 grad_xi;
    double xi_t = 0.0;
    Vec2 A_grad_xi;
    Sym2 hess_xi;
    bool hessian_bounded = true;

    double sigma_t = 0.0;
    double sigma_tt = 0.0;
    Vec2 grad_sigma;
    Vec2 A_grad_sigma;
    double div_A_grad_sigma = 0.0;
    Vec2 grad_sigma_tt;
    Sym2 hess_sigma;
    Vec2 grad_div_A_grad_sigma;
    double b = 0.0;  // (xi_t)^2 - A grad xi . grad xi
};

inline double eval_b(const WeightParams& w, double theta, double r, double t) {
    const double k = 2.0 - w.alpha;
    const double dt = t - w.t0;
    return 4.0 * w.beta * w.beta * dt * dt - (4.0 * theta * theta + k * k * std::pow(r, k));
}

inline WeightDerivatives eval_xi_sigma(const WeightParams& w, double theta, double r, double t) {
    if (r < 0.0) fail(ErrorCode::InvalidDomain, "r must be nonnegative");
    const double a = w.alpha, k = 2.0 - a, lam = w.lambda, dt = t - w.t0;
    const double r1 = std::pow(r, 1.0 - a);  // r^{1-alpha}
    const double r2 = std::pow(r, k);        // r^{2-alpha}
    const double inf = std::numeric_limits<double>::infinity();
    WeightDerivatives d;
    d.xi = theta * theta + r2 - w.beta * dt * dt;
    d.sigma = std::exp(lam * d.xi);
    const double sg = d.sigma;
    d.grad_xi = {2.0 * theta, k * r1};
    d.xi_t = -2.0 * w.beta * dt;
    d.A_grad_xi = {2.0 * theta, k * r};
    d.hessian_bounded = r > 0.0;
    const double r_neg = r > 0.0 ? std::pow(r, -a) : inf;  // r^{-alpha}
    d.hess_xi = {2.0, 0.0, r > 0.0 ? k * (1.0 - a) * r_neg : inf};

    d.sigma_t = lam * sg * d.xi_t;
    d.sigma_tt = -2.0 * w.beta * lam * sg + 4.0 * w.beta * w.beta * lam * lam * sg * dt * dt;
    d.grad_sigma = {lam * sg * d.grad_xi.theta, lam * sg * d.grad_xi.r};
    d.A_grad_sigma = {lam * sg * d.A_grad_xi.theta, lam * sg * d.A_grad_xi.r};
    const double bracket = 4.0 * theta * theta + k * k * r2;
    d.div_A_grad_sigma = (4.0 - a) * lam * sg + lam * lam * sg * bracket;
    const double tt_factor = -2.0 * w.beta * lam * lam + 4.0 * w.beta * w.beta * lam * lam * lam * dt * dt;
    d.grad_sigma_tt = {tt_factor * sg * 2.0 * theta, tt_factor * sg * k * r1};
    d.hess_sigma.tt = 2.0 * lam * sg + 4.0 * lam * lam * sg * theta * theta;
    d.hess_sigma.tr = 2.0 * lam * lam * sg * k * theta * r1;
    d.hess_sigma.rr = r > 0.0 ? lam * sg * k * (1.0 - a) * r_neg + lam * lam * sg * k * k * r1 * r1 : inf;
    d.grad_div_A_grad_sigma.theta = (4.0 - a) * lam * lam * sg * 2.0 * theta + lam * lam * lam * sg * 2.0 * theta * bracket +
                                    8.0 * lam * lam * sg * theta;
    d.grad_div_A_grad_sigma.r = lam * lam * sg * k * r1 * (8.0 - 5.0 * a + a * a) + lam * lam * lam * sg * k * r1 * bracket;
    d.b = eval_b(w, theta, r, t);
    return d;
}

// ---------------------------------------------------------------------------
// Tensor grids and conjugation
// ---------------------------------------------------------------------------

/// Vertex grid over [theta0, theta1] x [r0, r1] x [t0, t1] with the given cell counts.
struct GridSpec {
    double theta0 = 0.0, theta1 = 1.0;
    double r0 = 0.0, r1 = 1.0;
    double t0 = 0.0, t1 = 1.0;
    int n_theta = 8, n_r = 8, n_t = 8;

    std::size_t points() const {
        return static_cast<std::size_t>(n_theta + 1) * (n_r + 1) * (n_t + 1);
    }
    double h_theta() const { return (theta1 - theta0) / n_theta; }
    double h_r() const { return (r1 - r0) / n_r; }
    double h_t() const { return (t1 - t0) / n_t; }
    double theta(int i) const { return i == n_theta ? theta1 : theta0 + i * h_theta(); }
    double r(int j) const { return j == n_r ? r1 : r0 + j * h_r(); }
    double t(int l) const { return l == n_t ? t1 : t0 + l * h_t(); }
    std::size_t index(int i, int j, int l) const {
        return (static_cast<std::size_t>(l) * (n_r + 1) + j) * (n_theta + 1) + i;
    }
    bool same_as(const GridSpec& o) const {
        return theta0 == o.theta0 && theta1 == o.theta1 && r0 == o.r0 && r1 == o.r1 && t0 == o.t0 && t1 == o.t1 &&
               n_theta == o.n_theta && n_r == o.n_r && n_t == o.n_t;
    }
};

struct GridField {
    GridSpec grid;
    std::vector<double> values;

    double at(int i, int j, int l) const { return values[grid.index(i, j, l)]; }
};

inline void check_field(const GridField& f) {
    if (f.values.size() != f.grid.points()) fail(ErrorCode::GridMismatch, "field size does not match its grid");
}

inline GridField sample_field(const GridSpec& g, const std::function<double(double, double, double)>& f) {
    GridField out{g, std::vector<double>(g.points())};
    for (int l = 0; l <= g.n_t; ++l)
        for (int j = 0; j <= g.n_r; ++j)
            for (int i = 0; i <= g.n_theta; ++i) out.values[g.index(i, j, l)] = f(g.theta(i), g.r(j), g.t(l));
    return out;
}

namespace detail {

inline GridField scale_by_weight(const GridField& f, const WeightParams& w, double sign) {
    check_field(f);
    GridField out = f;
    const auto& g = f.grid;
    for (int l = 0; l <= g.n_t; ++l)
        for (int j = 0; j <= g.n_r; ++j)
            for (int i = 0; i <= g.n_theta; ++i) {
                const double xi = g.theta(i) * g.theta(i) + std::pow(g.r(j), 2.0 - w.alpha) -
                                  w.beta * (g.t(l) - w.t0) * (g.t(l) - w.t0);
                out.values[g.index(i, j, l)] *= std::exp(sign * w.s * std::exp(w.lambda * xi));
            }
    return out;
}

}  // namespace detail

/// eta = exp(s sigma) psi, pointwise on the grid.
inline GridField conjugate_field(const GridField& psi, const WeightParams& w) {
    return detail::scale_by_weight(psi, w, 1.0);
}

/// psi = exp(-s sigma) eta.
inline GridField deconjugate_field(const GridField& eta, const WeightParams& w) {
    return detail::scale_by_weight(eta, w, -1.0);
}

namespace detail {

/// Values of a grid function at a node and its six axis neighbours.
struct Stencil {
    double c = 0.0;
    double theta_p = 0.0, theta_m = 0.0;
    double r_p = 0.0, r_m = 0.0;
    double t_p = 0.0, t_m = 0.0;
};

struct Spacing {
    double theta = 0.0, r = 0.0, t = 0.0;
};

/// Second-order centred approximation of u_tt - Div(A grad u), the radial part in
/// conservative form with r^alpha at the half nodes.
inline double wave_operator_at(const Stencil& u, const Spacing& h, double r, double alpha) {
    const double utt = (u.t_p - 2.0 * u.c + u.t_m) / (h.t * h.t);
    const double uthth = (u.theta_p - 2.0 * u.c + u.theta_m) / (h.theta * h.theta);
    const double wp = std::pow(r + 0.5 * h.r, alpha), wm = std::pow(r - 0.5 * h.r, alpha);
    const double radial = (wp * (u.r_p - u.c) - wm * (u.c - u.r_m)) / (h.r * h.r);
    return utt - uthth - radial;
}

/// Factors of the conjugated operator at one node that do not involve eta.
struct ConjugationFactors {
    double potential = 0.0;  // s^2 [(sigma_t)^2 - A grad sigma . grad sigma] - s sigma_tt + s Div(A grad sigma)
    double sigma_t = 0.0;
    Vec2 A_grad_sigma;
};

inline ConjugationFactors conjugation_factors(const WeightParams& w, double theta, double r, double t) {
    const double a = w.alpha, k = 2.0 - a, lam = w.lambda, dt = t - w.t0;
    const double sg = std::exp(lam * (theta * theta + std::pow(r, k) - w.beta * dt * dt));
    const double bracket = 4.0 * theta * theta + k * k * std::pow(r, k);
    const double b = 4.0 * w.beta * w.beta * dt * dt - bracket;
    const double sigma_tt = -2.0 * w.beta * lam * sg + 4.0 * w.beta * w.beta * lam * lam * sg * dt * dt;
    const double div = (4.0 - a) * lam * sg + lam * lam * sg * bracket;
    ConjugationFactors f;
    f.potential = w.s * w.s * lam * lam * sg * sg * b - w.s * sigma_tt + w.s * div;
    f.sigma_t = -2.0 * w.beta * lam * sg * dt;
    f.A_grad_sigma = {lam * sg * 2.0 * theta, lam * sg * k * r};
    return f;
}

/// (P+ + P-) eta at a node:
///   P+ eta = eta_tt - Div(A grad eta) + s^2 eta [(sigma_t)^2 - A grad sigma . grad sigma]
///   P- eta = 2 s [-eta_t sigma_t + grad eta . A grad sigma] + s eta [-sigma_tt + Div(A grad sigma)]
inline double conjugated_operator_at(const Stencil& e, const Spacing& h, double r, double alpha, double s,
                                     const ConjugationFactors& f) {
    const double et = (e.t_p - e.t_m) / (2.0 * h.t);
    const double eth = (e.theta_p - e.theta_m) / (2.0 * h.theta);
    const double er = (e.r_p - e.r_m) / (2.0 * h.r);
    return wave_operator_at(e, h, r, alpha) + f.potential * e.c +
           2.0 * s * (-et * f.sigma_t + eth * f.A_grad_sigma.theta + er * f.A_grad_sigma.r);
}

inline Stencil stencil_of(const GridField& u, int i, int j, int l) {
    return {u.at(i, j, l), u.at(i + 1, j, l), u.at(i - 1, j, l), u.at(i, j + 1, l),
            u.at(i, j - 1, l), u.at(i, j, l + 1), u.at(i, j, l - 1)};
}

inline void require_off_origin(const GridSpec& g) {
    if (!(g.r0 - g.h_r() >= 0.0) || !(g.r0 > 0.0))
        fail(ErrorCode::DegenerateCellTouched, "radial stencil must stay at least one cell away from r = 0");
}

}  // namespace detail

/// u_tt - Div(A grad u) at interior nodes by centred differences; boundary nodes are 0.
inline GridField apply_wave_operator(const GridField& u, double alpha) {
    check_field(u);
    const auto& g = u.grid;
    detail::require_off_origin(g);
    GridField out{g, std::vector<double>(g.points(), 0.0)};
    const detail::Spacing h{g.h_theta(), g.h_r(), g.h_t()};
    for (int l = 1; l < g.n_t; ++l)
        for (int j = 1; j < g.n_r; ++j)
            for (int i = 1; i < g.n_theta; ++i)
                out.values[g.index(i, j, l)] = detail::wave_operator_at(detail::stencil_of(u, i, j, l), h, g.r(j), alpha);
    return out;
}

/// (P+ + P-) eta at interior nodes with analytic weight factors; boundary nodes are 0.
inline GridField apply_conjugated_operator(const GridField& eta, const WeightParams& w) {
    check_field(eta);
    const auto& g = eta.grid;
    detail::require_off_origin(g);
    GridField out{g, std::vector<double>(g.points(), 0.0)};
    const detail::Spacing h{g.h_theta(), g.h_r(), g.h_t()};
    for (int l = 1; l < g.n_t; ++l)
        for (int j = 1; j < g.n_r; ++j)
            for (int i = 1; i < g.n_theta; ++i) {
                const auto f = detail::conjugation_factors(w, g.theta(i), g.r(j), g.t(l));
                out.values[g.index(i, j, l)] =
                    detail::conjugated_operator_at(detail::stencil_of(eta, i, j, l), h, g.r(j), w.alpha, w.s, f);
            }
    return out;
}

// ---------------------------------------------------------------------------
// Exact modal solutions with smooth radial factors
// ---------------------------------------------------------------------------

/// phi = sum_terms sin(n pi theta) R_k(r) [a cos(w t) + (b / w) sin(w t)], w^2 = (n pi)^2 + rho_k,
/// with R_k the analytic radial eigenfunctions; phi_tt - Div(A grad phi) = 0 holds exactly.
class ModalSolution {
public:
    struct Term {
        int n = 1;
        int k = 1;
        double a = 0.0;
        double b = 0.0;
        double omega = 0.0;
    };

    explicit ModalSolution(double alpha) : alpha_(alpha) { require_subcritical(alpha); }

    ModalSolution& add(int n, int k, double a, double b) {
        if (n < 1) fail(ErrorCode::TruncationTooSmall, "tangential index must be positive");
        auto it = modes_.find(k);
        if (it == modes_.end()) it = modes_.emplace(k, AnalyticRadialMode::dirichlet(alpha_, k)).first;
        const auto& mode = it->second;
        const double mu = n * std::numbers::pi;
        terms_.push_back({n, k, a, b, std::sqrt(mu * mu + mode.rho())});
        return *this;
    }

    double alpha() const { return alpha_; }
    const std::vector<Term>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    const AnalyticRadialMode& radial(int k) const {
        const auto it = modes_.find(k);
        if (it == modes_.end()) fail(ErrorCode::TruncationTooSmall, "radial mode " + std::to_string(k) + " not in the solution");
        return it->second;
    }

    double time_factor(const Term& m, double t) const {
        return m.a * std::cos(m.omega * t) + m.b / m.omega * std::sin(m.omega * t);
    }
    double time_derivative(const Term& m, double t) const {
        return -m.a * m.omega * std::sin(m.omega * t) + m.b * std::cos(m.omega * t);
    }

    /// phi and its first derivatives; `flux` is r^alpha phi_r.
    struct Jet {
        double value = 0.0;
        double t = 0.0;
        double theta = 0.0;
        double flux = 0.0;
    };

    Jet eval(double theta, double r, double t) const {
        Jet j;
        for (const auto& m : terms_) {
            const double w = m.n * std::numbers::pi;
            const double sn = std::sin(w * theta), cs = std::cos(w * theta);
            const auto& R = radial(m.k);
            const double rv = R.value(r), rf = R.flux(r);
            const double T = time_factor(m, t), Tt = time_derivative(m, t);
            j.value += sn * rv * T;
            j.t += sn * rv * Tt;
            j.theta += w * cs * rv * T;
            j.flux += sn * rf * T;
        }
        return j;
    }

private:
    double alpha_;
    std::vector<Term> terms_;
    std::map<int, AnalyticRadialMode> modes_;
};

// ---------------------------------------------------------------------------
// Conjugation identity residual
// ---------------------------------------------------------------------------

struct ResidualGrid {
    int theta_cells = 128;
    int r_cells = 32;
    int time_cells = 512;
    double r_floor = 0.25;  // lowest radial node; the stencil never reaches below it

    ResidualGrid refined() const { return {2 * theta_cells, 2 * r_cells, 2 * time_cells, r_floor}; }
};

struct ResidualReport {
    double residual_norm = 0.0;   // discrete L2 norm of e^{s sigma} h - (P+ + P-) eta
    double reference_norm = 0.0;  // discrete L2 norm of e^{s sigma} h
    double relative = 0.0;        // residual / reference (absolute residual when the reference is 0)
    double h_theta = 0.0, h_r = 0.0, h_t = 0.0;
    std::size_t nodes = 0;
};

/// psi = k zeta phi, eta = e^{s sigma} psi. The source
///   h = 2 zeta k' phi_t + zeta phi k'' - 2 k zeta' phi_theta - k phi zeta''
/// is built analytically (zeta depends on theta only, so grad zeta . A grad phi = zeta' phi_theta
/// and Div(A grad zeta) = zeta''). (P+ + P-) eta uses centred differences of eta with the
/// weight factors analytic. An empty cutoff means the constant 1.
inline ResidualReport conjugation_residual(const ModalSolution& phi, const std::optional<CutoffSpec>& zeta,
                                           const std::optional<CutoffSpec>& k_cut, const WeightParams& w, double T,
                                           const ResidualGrid& res) {
    if (!(T > 0.0)) fail(ErrorCode::NonPositiveInput, "T must be positive");
    if (res.theta_cells < 2 || res.r_cells < 2 || res.time_cells < 2)
        fail(ErrorCode::GridMismatch, "residual grid needs at least two cells per axis");
    if (phi.alpha() != w.alpha) fail(ErrorCode::GridMismatch, "solution and weight use different alpha");
    if (!(res.r_floor < 1.0)) fail(ErrorCode::InvalidDomain, "r_floor must lie below 1");
    const GridSpec g{0.0, 1.0, res.r_floor, 1.0, 0.0, T, res.theta_cells, res.r_cells, res.time_cells};
    detail::require_off_origin(g);

    const int nth = g.n_theta, nr = g.n_r, nt = g.n_t;
    const std::size_t row = static_cast<std::size_t>(nth) + 1;
    const double alpha = w.alpha, k2 = 2.0 - alpha, lam = w.lambda, s = w.s, beta = w.beta;
    const detail::Spacing h{g.h_theta(), g.h_r(), g.h_t()};
    const auto& terms = phi.terms();
    const std::size_t nterm = terms.size();

    // separable tables; sigma = exp(lambda theta^2) exp(lambda r^{2-alpha}) exp(-lambda beta (t-t0)^2)
    std::vector<Jet2> zt(row);
    std::vector<double> e_theta(row), theta_sq(row);
    std::vector<double> sin_t(nterm * row), dsin_t(nterm * row);
    for (int i = 0; i <= nth; ++i) {
        const double th = g.theta(i);
        zt[i] = zeta ? eval_cutoff(*zeta, th) : Jet2{1.0, 0.0, 0.0};
        theta_sq[i] = th * th;
        e_theta[i] = std::exp(lam * th * th);
        for (std::size_t m = 0; m < nterm; ++m) {
            const double wn = terms[m].n * std::numbers::pi;
            sin_t[m * row + i] = std::sin(wn * th);
            dsin_t[m * row + i] = wn * std::cos(wn * th);
        }
    }
    std::vector<double> e_r(nr + 1), r_pow(nr + 1), w_plus(nr + 1), w_minus(nr + 1), rv(nterm * (nr + 1));
    for (int j = 0; j <= nr; ++j) {
        const double r = g.r(j);
        r_pow[j] = std::pow(r, k2);
        e_r[j] = std::exp(lam * r_pow[j]);
        w_plus[j] = std::pow(r + 0.5 * h.r, alpha);
        w_minus[j] = std::pow(std::max(r - 0.5 * h.r, 0.0), alpha);
        for (std::size_t m = 0; m < nterm; ++m) rv[m * (nr + 1) + j] = phi.radial(terms[m].k).value(r);
    }

    struct Slab {
        std::vector<double> eta, weight;  // eta and exp(s sigma)
        std::vector<double> T0, T1;       // time factors per term
        Jet2 k;
        double e_t = 0.0;
    };
    const std::size_t slab_size = row * (nr + 1);
    auto make_slab = [&] {
        Slab sl;
        sl.eta.assign(slab_size, 0.0);
        sl.weight.assign(slab_size, 0.0);
        sl.T0.resize(nterm);
        sl.T1.resize(nterm);
        return sl;
    };
    Slab prev = make_slab(), cur = make_slab(), next = make_slab();
    std::vector<double> radial_sum(nterm);

    auto fill = [&](int l, Slab& sl) {
        const double t = g.t(l);
        for (std::size_t m = 0; m < nterm; ++m) {
            sl.T0[m] = phi.time_factor(terms[m], t);
            sl.T1[m] = phi.time_derivative(terms[m], t);
        }
        sl.k = k_cut ? eval_cutoff(*k_cut, t) : Jet2{1.0, 0.0, 0.0};
        sl.e_t = std::exp(-lam * beta * (t - w.t0) * (t - w.t0));
        for (int j = 0; j <= nr; ++j) {
            for (std::size_t m = 0; m < nterm; ++m) radial_sum[m] = rv[m * (nr + 1) + j] * sl.T0[m];
            const double sig_rt = e_r[j] * sl.e_t;
            double* eta = &sl.eta[j * row];
            double* wt = &sl.weight[j * row];
            for (int i = 0; i <= nth; ++i) {
                const double ws = std::exp(s * e_theta[i] * sig_rt);
                wt[i] = ws;
                const double cut = sl.k.value * zt[i].value;
                if (cut == 0.0) {
                    eta[i] = 0.0;
                    continue;
                }
                double v = 0.0;
                for (std::size_t m = 0; m < nterm; ++m) v += sin_t[m * row + i] * radial_sum[m];
                eta[i] = ws * cut * v;
            }
        }
    };

    double res_sum = 0.0, ref_sum = 0.0;
    fill(0, prev);
    fill(1, cur);
    std::vector<double> rt0(nterm), rt1(nterm);
    for (int l = 1; l < nt; ++l) {
        fill(l + 1, next);
        const double dt = g.t(l) - w.t0;
        const Jet2 kt = cur.k;
        const bool k_moving = kt.d1 != 0.0 || kt.d2 != 0.0;
        for (int j = 1; j < nr; ++j) {
            const double r = g.r(j);
            const double sig_rt = e_r[j] * cur.e_t;
            for (std::size_t m = 0; m < nterm; ++m) {
                rt0[m] = rv[m * (nr + 1) + j] * cur.T0[m];
                rt1[m] = rv[m * (nr + 1) + j] * cur.T1[m];
            }
            const std::size_t base = static_cast<std::size_t>(j) * row;
            for (int i = 1; i < nth; ++i) {
                const std::size_t idx = base + i;
                const detail::Stencil e{cur.eta[idx],       cur.eta[idx + 1],   cur.eta[idx - 1], cur.eta[idx + row],
                                        cur.eta[idx - row], next.eta[idx],      prev.eta[idx]};
                const Jet2& z = zt[i];
                const bool active = (z.value != 0.0 && k_moving) || (kt.value != 0.0 && (z.d1 != 0.0 || z.d2 != 0.0));
                if (!active && e.c == 0.0 && e.theta_p == 0.0 && e.theta_m == 0.0 && e.r_p == 0.0 && e.r_m == 0.0 &&
                    e.t_p == 0.0 && e.t_m == 0.0)
                    continue;
                // weight factors from the separable sigma
                const double sg = e_theta[i] * sig_rt;
                const double bracket = 4.0 * theta_sq[i] + k2 * k2 * r_pow[j];
                const double b = 4.0 * beta * beta * dt * dt - bracket;
                const double sigma_tt = -2.0 * beta * lam * sg + 4.0 * beta * beta * lam * lam * sg * dt * dt;
                const double div = (4.0 - alpha) * lam * sg + lam * lam * sg * bracket;
                const double potential = s * s * lam * lam * sg * sg * b - s * sigma_tt + s * div;
                const double sigma_t = -2.0 * beta * lam * sg * dt;
                const double ag_theta = lam * sg * 2.0 * g.theta(i), ag_r = lam * sg * k2 * r;

                const double ett = (e.t_p - 2.0 * e.c + e.t_m) / (h.t * h.t);
                const double ethth = (e.theta_p - 2.0 * e.c + e.theta_m) / (h.theta * h.theta);
                const double radial = (w_plus[j] * (e.r_p - e.c) - w_minus[j] * (e.c - e.r_m)) / (h.r * h.r);
                const double et = (e.t_p - e.t_m) / (2.0 * h.t);
                const double eth = (e.theta_p - e.theta_m) / (2.0 * h.theta);
                const double er = (e.r_p - e.r_m) / (2.0 * h.r);
                const double lhs = ett - ethth - radial + potential * e.c +
                                   2.0 * s * (-et * sigma_t + eth * ag_theta + er * ag_r);

                double source = 0.0;
                if (active) {
                    double v = 0.0, vt = 0.0, vth = 0.0;
                    for (std::size_t m = 0; m < nterm; ++m) {
                        const double sn = sin_t[m * row + i];
                        v += sn * rt0[m];
                        vt += sn * rt1[m];
                        vth += dsin_t[m * row + i] * rt0[m];
                    }
                    const double hval =
                        2.0 * z.value * kt.d1 * vt + z.value * v * kt.d2 - 2.0 * kt.value * z.d1 * vth - kt.value * v * z.d2;
                    source = cur.weight[idx] * hval;
                }
                const double diff = source - lhs;
                res_sum += diff * diff;
                ref_sum += source * source;
            }
        }
        std::swap(prev, cur);
        std::swap(cur, next);
    }
    ResidualReport rep;
    rep.h_theta = h.theta;
    rep.h_r = h.r;
    rep.h_t = h.t;
    const double cell = h.theta * h.r * h.t;
    rep.residual_norm = std::sqrt(res_sum * cell);
    rep.reference_norm = std::sqrt(ref_sum * cell);
    rep.relative = rep.reference_norm > 0.0 ? rep.residual_norm / rep.reference_norm : rep.residual_norm;
    rep.nodes = static_cast<std::size_t>(nth - 1) * (nr - 1) * (nt - 1);
    return rep;
}

struct ConvergenceStudy {
    std::vector<ResidualReport> levels;
    std::vector<double> orders;  // log2 of successive residual ratios

    double finest_order() const { return orders.empty() ? 0.0 : orders.back(); }
};

/// Residuals on `levels` grids, each halving every spacing of the previous one.
inline ConvergenceStudy conjugation_convergence(const ModalSolution& phi, const std::optional<CutoffSpec>& zeta,
                                                const std::optional<CutoffSpec>& k_cut, const WeightParams& w,
                                                double T, ResidualGrid grid, int levels = 3) {
    if (levels < 2) fail(ErrorCode::InsufficientData, "order estimate needs at least two levels");
    ConvergenceStudy study;
    for (int lv = 0; lv < levels; ++lv) {
        study.levels.push_back(conjugation_residual(phi, zeta, k_cut, w, T, grid));
        grid = grid.refined();
    }
    for (std::size_t i = 1; i < study.levels.size(); ++i)
        study.orders.push_back(std::log2(study.levels[i - 1].residual_norm / study.levels[i].residual_norm));
    return study;
}

// ---------------------------------------------------------------------------
// Component integrals of the Carleman inequality
// ---------------------------------------------------------------------------

/// A nonnegative integral stored as value * exp(log_scale), so that weights e^{2 s sigma}
/// far beyond the double range stay representable.
struct ScaledIntegral {
    double value = 0.0;
    double log_scale = 0.0;

    double log10() const { return value > 0.0 ? std::log10(value) + log_scale / std::numbers::ln10 : -std::numeric_limits<double>::infinity(); }
    double unscaled() const { return value * std::exp(log_scale); }
};

struct ComponentIntegrals {
    ScaledIntegral lhs_gradient;  // s lambda int sigma [psi_t^2 + A grad psi . grad psi] e^{2 s sigma}, theta in (3d0, 1-3d0)
    ScaledIntegral lhs_zero;      // s^3 lambda^3 int sigma^3 psi^2 e^{2 s sigma}, same region
    ScaledIntegral trace;         // s lambda int sigma (d_r phi)^2 e^{2 s sigma} on (d0, 1-d0) x {1} x (0,T)
    ScaledIntegral interior;      // int_{omega x (0,T)} (s^2 phi^2 + A grad phi . grad phi + phi_t^2) e^{2 s sigma}
    ScaledIntegral commutator;    // int_{omega x (0,T)} (k_t phi_t + k_tt phi)^2 e^{2 s sigma}
    double c_hat = 0.0;           // (lhs_gradient + lhs_zero) / (trace + interior), may underflow
    double log_c_hat = -std::numeric_limits<double>::infinity();
    double s = 0.0;
    double lambda = 0.0;
};

struct IntegralResolution {
    int theta_panels = 32;
    int r_panels = 12;
    int time_panels = 96;
    int order = 6;

    IntegralResolution doubled() const { return {2 * theta_panels, 2 * r_panels, 2 * time_panels, order}; }
};

namespace detail {

// Per-axis tables of the modal solution at quadrature nodes.
struct ThetaTable {
    QuadratureRule rule;
    std::vector<Jet2> zeta;
    std::vector<double> sigma_part;            // exp(lambda theta^2)
    std::vector<std::vector<double>> sin_n;    // per term
    std::vector<std::vector<double>> dsin_n;   // per term
};

inline ThetaTable theta_table(const ModalSolution& phi, const CutoffSpec& zeta, double lambda, QuadratureRule rule) {
    ThetaTable t;
    t.rule = std::move(rule);
    const std::size_t n = t.rule.size();
    t.zeta.resize(n);
    t.sigma_part.resize(n);
    t.sin_n.assign(phi.terms().size(), std::vector<double>(n));
    t.dsin_n.assign(phi.terms().size(), std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double th = t.rule.nodes[i];
        t.zeta[i] = eval_cutoff(zeta, th);
        t.sigma_part[i] = std::exp(lambda * th * th);
        for (std::size_t m = 0; m < phi.terms().size(); ++m) {
            const double w = phi.terms()[m].n * std::numbers::pi;
            t.sin_n[m][i] = std::sin(w * th);
            t.dsin_n[m][i] = w * std::cos(w * th);
        }
    }
    return t;
}

// r = u^{1/(1-alpha)}: with dr = r^alpha du / (1-alpha) the singular r^alpha (R')^2 becomes
// the bounded (r^alpha R')^2 / (1-alpha).
struct RadialTable {
    std::vector<double> weight;                // du weight * r^alpha / (1-alpha)
    std::vector<double> flux_weight;           // du weight / (1-alpha), multiplies (r^alpha phi_r)^2
    std::vector<double> sigma_part;            // exp(lambda r^{2-alpha})
    std::vector<std::vector<double>> value;    // R per term
    std::vector<std::vector<double>> flux;     // r^alpha R' per term
};

inline RadialTable radial_table(const ModalSolution& phi, double lambda, int panels, int order) {
    const double a = phi.alpha();
    const auto rule = composite_gauss(0.0, 1.0, panels, order);
    RadialTable t;
    const std::size_t n = rule.size();
    t.weight.resize(n);
    t.flux_weight.resize(n);
    t.sigma_part.resize(n);
    t.value.assign(phi.terms().size(), std::vector<double>(n));
    t.flux.assign(phi.terms().size(), std::vector<double>(n));
    for (std::size_t j = 0; j < n; ++j) {
        const double u = rule.nodes[j];
        const double r = std::pow(u, 1.0 / (1.0 - a));
        t.weight[j] = rule.weights[j] * std::pow(r, a) / (1.0 - a);
        t.flux_weight[j] = rule.weights[j] / (1.0 - a);
        t.sigma_part[j] = std::exp(lambda * std::pow(r, 2.0 - a));
        for (std::size_t m = 0; m < phi.terms().size(); ++m) {
            const auto& R = phi.radial(phi.terms()[m].k);
            t.value[m][j] = R.value(r);
            t.flux[m][j] = R.flux(r);
        }
    }
    return t;
}

struct TimeTable {
    QuadratureRule rule;
    std::vector<Jet2> k;
    std::vector<double> sigma_part;            // exp(-lambda beta (t - t0)^2)
    std::vector<std::vector<double>> f0, f1;   // time factor and derivative per term
};

inline TimeTable time_table(const ModalSolution& phi, const CarlemanParams& p, int panels, int order) {
    TimeTable t;
    const double e = p.epsilon, T = p.T;
    t.rule = composite_gauss(0.0, T, panels, order, {e, 2.0 * e, p.t0, T - 2.0 * e, T - e});
    const auto kc = p.k_cutoff();
    const std::size_t n = t.rule.size();
    t.k.resize(n);
    t.sigma_part.resize(n);
    t.f0.assign(phi.terms().size(), std::vector<double>(n));
    t.f1.assign(phi.terms().size(), std::vector<double>(n));
    for (std::size_t l = 0; l < n; ++l) {
        const double tt = t.rule.nodes[l];
        t.k[l] = eval_cutoff(kc, tt);
        t.sigma_part[l] = std::exp(-p.lambda * p.beta * (tt - p.t0) * (tt - p.t0));
        for (std::size_t m = 0; m < phi.terms().size(); ++m) {
            t.f0[m][l] = phi.time_factor(phi.terms()[m], tt);
            t.f1[m][l] = phi.time_derivative(phi.terms()[m], tt);
        }
    }
    return t;
}

}  // namespace detail

namespace detail {

inline double log_sum(const ScaledIntegral& a, const ScaledIntegral& b) {
    const double la = a.value > 0.0 ? std::log(a.value) + a.log_scale : -std::numeric_limits<double>::infinity();
    const double lb = b.value > 0.0 ? std::log(b.value) + b.log_scale : -std::numeric_limits<double>::infinity();
    const double hi = std::max(la, lb);
    if (hi == -std::numeric_limits<double>::infinity()) return hi;
    return hi + std::log(std::exp(la - hi) + std::exp(lb - hi));
}

}  // namespace detail

/// Each integral is computed with exp(2 s sigma - 2 s sigma_peak) in the integrand, sigma_peak
/// the supremum of sigma over that integral's region; the scales come back in log_c_hat.
inline ComponentIntegrals carleman_component_integrals(const ModalSolution& phi, const CarlemanParams& p,
                                                       const IntegralResolution& res = {}) {
    if (std::abs(phi.alpha() - p.alpha) > 0.0) fail(ErrorCode::GridMismatch, "solution and parameters use different alpha");
    const double s = p.s, lam = p.lambda, d0 = p.delta0;
    const auto zeta = theta_cutoff(d0);
    const std::size_t nterm = phi.terms().size();

    ComponentIntegrals out;
    out.s = s;
    out.lambda = lam;
    if (nterm == 0) return out;

    const auto rt = detail::radial_table(phi, lam, res.r_panels, res.order);
    const auto tt = detail::time_table(phi, p, res.time_panels, res.order);
    const std::size_t nr = rt.weight.size(), ntm = tt.rule.size();

    // region of the left-hand side: theta in (3 d0, 1 - 3 d0), where zeta = 1
    const auto th_lhs = detail::theta_table(phi, zeta, lam, composite_gauss(3.0 * d0, 1.0 - 3.0 * d0, res.theta_panels, res.order));
    // omega strips
    const int strip_panels = std::max(2, res.theta_panels / 4);
    auto strip_rule = composite_gauss(0.0, 4.0 * d0, strip_panels, res.order, {2.0 * d0, 3.0 * d0});
    const auto right = composite_gauss(1.0 - 4.0 * d0, 1.0, strip_panels, res.order, {1.0 - 3.0 * d0, 1.0 - 2.0 * d0});
    strip_rule.nodes.insert(strip_rule.nodes.end(), right.nodes.begin(), right.nodes.end());
    strip_rule.weights.insert(strip_rule.weights.end(), right.weights.begin(), right.weights.end());
    const auto th_omega = detail::theta_table(phi, zeta, lam, strip_rule);
    // restricted top segment
    const auto th_top = detail::theta_table(phi, zeta, lam,
                                            composite_gauss(d0, 1.0 - d0, res.theta_panels, res.order,
                                                            {2.0 * d0, 3.0 * d0, 1.0 - 3.0 * d0, 1.0 - 2.0 * d0}));

    // sup of sigma over each region: r = 1, t = t0 and the largest theta
    auto peak = [&](double theta_max) { return 2.0 * s * std::exp(lam * (theta_max * theta_max + 1.0)); };
    const double scale_lhs = peak(1.0 - 3.0 * d0), scale_omega = peak(1.0), scale_top = peak(1.0 - d0);
    out.lhs_gradient.log_scale = out.lhs_zero.log_scale = scale_lhs;
    out.interior.log_scale = out.commutator.log_scale = scale_omega;
    out.trace.log_scale = scale_top;

    // left-hand side and interior terms: loop time, r, theta
    double lhs_g = 0.0, lhs_0 = 0.0, inter = 0.0, comm = 0.0;
    std::vector<double> A(nterm), B(nterm), C(nterm);  // per-term r * t products
    auto volume = [&](const detail::ThetaTable& th, bool lhs_region) {
        const double log_scale = lhs_region ? scale_lhs : scale_omega;
        for (std::size_t l = 0; l < ntm; ++l) {
            const double wt = tt.rule.weights[l];
            const Jet2 k = tt.k[l];
            if (lhs_region && k.value == 0.0) continue;
            for (std::size_t j = 0; j < nr; ++j) {
                for (std::size_t m = 0; m < nterm; ++m) {
                    A[m] = rt.value[m][j] * tt.f0[m][l];  // R T
                    B[m] = rt.value[m][j] * tt.f1[m][l];  // R T'
                    C[m] = rt.flux[m][j] * tt.f0[m][l];   // r^a R' T
                }
                const double sig_rt = rt.sigma_part[j] * tt.sigma_part[l];
                for (std::size_t i = 0; i < th.rule.size(); ++i) {
                    double v = 0.0, vt = 0.0, vth = 0.0, vflux = 0.0;
                    for (std::size_t m = 0; m < nterm; ++m) {
                        const double sn = th.sin_n[m][i];
                        v += sn * A[m];
                        vt += sn * B[m];
                        vth += th.dsin_n[m][i] * A[m];
                        vflux += sn * C[m];
                    }
                    const double sigma = th.sigma_part[i] * sig_rt;
                    const double ew = std::exp(2.0 * s * sigma - log_scale);
                    const double wq = th.rule.weights[i] * wt;
                    if (lhs_region) {
                        // zeta = 1 here, so psi = k phi
                        const double pt = k.d1 * v + k.value * vt;
                        const double pth = k.value * vth;
                        const double pflux = k.value * vflux;
                        const double grad = pt * pt * rt.weight[j] + pth * pth * rt.weight[j] + pflux * pflux * rt.flux_weight[j];
                        const double psi = k.value * v;
                        lhs_g += wq * sigma * grad * ew;
                        lhs_0 += wq * sigma * sigma * sigma * psi * psi * rt.weight[j] * ew;
                    } else {
                        inter += wq * ((s * s * v * v + vth * vth + vt * vt) * rt.weight[j] + vflux * vflux * rt.flux_weight[j]) * ew;
                        const double c = k.d1 * vt + k.d2 * v;
                        comm += wq * c * c * rt.weight[j] * ew;
                    }
                }
            }
        }
    };
    volume(th_lhs, true);
    volume(th_omega, false);

    // trace on r = 1
    double trace = 0.0;
    const double e_r1 = std::exp(lam);
    for (std::size_t l = 0; l < ntm; ++l) {
        for (std::size_t i = 0; i < th_top.rule.size(); ++i) {
            double dr = 0.0;
            for (std::size_t m = 0; m < nterm; ++m)
                dr += th_top.sin_n[m][i] * phi.radial(phi.terms()[m].k).flux(1.0) * tt.f0[m][l];
            const double sigma = th_top.sigma_part[i] * e_r1 * tt.sigma_part[l];
            trace += th_top.rule.weights[i] * tt.rule.weights[l] * sigma * dr * dr * std::exp(2.0 * s * sigma - scale_top);
        }
    }

    out.lhs_gradient.value = s * lam * lhs_g;
    out.lhs_zero.value = s * s * s * lam * lam * lam * lhs_0;
    out.trace.value = s * lam * trace;
    out.interior.value = inter;
    out.commutator.value = comm;
    const double den = detail::log_sum(out.trace, out.interior);
    if (den > -std::numeric_limits<double>::infinity()) {
        out.log_c_hat = detail::log_sum(out.lhs_gradient, out.lhs_zero) - den;
        out.c_hat = std::exp(out.log_c_hat);
    }
    return out;
}

struct ScanRow {
    double s = 0.0;
    double lambda = 0.0;
    double c_hat = 0.0;
    double log_c_hat = 0.0;
};

struct ScanSummary {
    std::vector<ScanRow> rows;
    double max_c_hat = 0.0;
    double log_last_over_first = 0.0;
    bool bounded = false;  // the larger half of the s values never exceeds the maximum over the smaller half
};

/// C-hat over a list of s values at fixed lambda (all other parameters from `p`).
inline ScanSummary carleman_s_scan(const ModalSolution& phi, CarlemanParams p, const std::vector<double>& s_values,
                                   const IntegralResolution& res = {}) {
    if (s_values.size() < 2) fail(ErrorCode::InsufficientData, "scan needs at least two values of s");
    if (!std::is_sorted(s_values.begin(), s_values.end())) fail(ErrorCode::InsufficientData, "s values must be sorted");
    ScanSummary sum;
    for (double s : s_values) {
        p.s = s;
        const auto c = carleman_component_integrals(phi, p, res);
        sum.rows.push_back({s, p.lambda, c.c_hat, c.log_c_hat});
        sum.max_c_hat = std::max(sum.max_c_hat, c.c_hat);
    }
    sum.log_last_over_first = sum.rows.back().log_c_hat - sum.rows.front().log_c_hat;
    const std::size_t half = sum.rows.size() / 2;
    double head = -std::numeric_limits<double>::infinity(), tail = head;
    for (std::size_t i = 0; i < sum.rows.size(); ++i) (i < half ? head : tail) = std::max(i < half ? head : tail, sum.rows[i].log_c_hat);
    sum.bounded = std::isfinite(head) && !std::isnan(tail) && tail <= head + 1e-9;
    return sum;
}

}  // namespace degenlab
