#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "degenlab/errors.hpp"
#include "degenlab/params.hpp"
#include "degenlab/radial_spectrum.hpp"

namespace degenlab {

/// Initial state of phi = sum_{n,k} [a cos(w t) + (b/w) sin(w t)] sin(n pi theta) R_k(r),
/// w_{nk}^2 = (n pi)^2 + rho_k. Row-major storage, index (n - 1) * k_max + (k - 1).
struct ModalCoefficients {
    int n_max = 0;
    int k_max = 0;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> omega;
    std::shared_ptr<const RadialBasis> basis;

    std::size_t index(int n, int k) const {
        return static_cast<std::size_t>(n - 1) * k_max + static_cast<std::size_t>(k - 1);
    }
    std::size_t modes() const { return a.size(); }
    double rho(int k) const { return basis->pairs[k - 1].rho; }
    double flux(int k) const { return basis->pairs[k - 1].flux_at_1; }
};

/// Amplitudes and velocities of every mode at one time.
struct ModalSnapshot {
    double t = 0.0;
    int n_max = 0;
    int k_max = 0;
    std::vector<double> amplitude;
    std::vector<double> velocity;
    std::vector<double> omega;
};

inline ModalCoefficients make_modal_state(std::shared_ptr<const RadialBasis> basis, int n_max, int k_max) {
    if (!basis) fail(ErrorCode::TruncationTooSmall, "no eigenbasis supplied");
    if (n_max < 1 || k_max < 1) fail(ErrorCode::TruncationTooSmall, "truncation orders must be positive");
    if (static_cast<std::size_t>(k_max) > basis->size())
        fail(ErrorCode::TruncationTooSmall, "k_max = " + std::to_string(k_max) + " exceeds the " +
                                                std::to_string(basis->size()) + " available eigenpairs");
    ModalCoefficients s;
    s.n_max = n_max;
    s.k_max = k_max;
    s.basis = std::move(basis);
    const std::size_t m = static_cast<std::size_t>(n_max) * k_max;
    s.a.assign(m, 0.0);
    s.b.assign(m, 0.0);
    s.omega.resize(m);
    for (int n = 1; n <= n_max; ++n)
        for (int k = 1; k <= k_max; ++k) {
            const double mu = n * std::numbers::pi;
            s.omega[s.index(n, k)] = std::sqrt(mu * mu + s.rho(k));
        }
    return s;
}

/// phi0, phi1 as callables f(theta, r), sampled on a uniform theta grid (theta_intervals
/// cells) times the radial mesh nodes. a_{nk} = 2 int int phi0 sin(n pi theta) R_k, with the
/// trapezoid rule in theta (exact for sine polynomials of degree < theta_intervals) and the
/// lumped mass in r (the inner product the R_k are orthonormal in).
using Field = std::function<double(double, double)>;

namespace detail {

inline void project_one(const Field& f, const ModalCoefficients& s, int theta_intervals, std::vector<double>& out) {
    const auto& sys = s.basis->system;
    const auto& nodes = sys.mesh.nodes;
    const std::size_t nd = sys.dofs();
    const int M = theta_intervals;
    // g_n(r_i) = 2/M sum_j f(theta_j, r_i) sin(n pi theta_j)
    std::vector<double> g(static_cast<std::size_t>(s.n_max) * nd, 0.0);
    std::vector<double> column(nd);
    for (int j = 1; j < M; ++j) {
        const double th = static_cast<double>(j) / M;
        for (std::size_t i = 0; i < nd; ++i) column[i] = f(th, nodes[sys.dof_nodes[i]]);
        for (int n = 1; n <= s.n_max; ++n) {
            const double w = 2.0 / M * std::sin(n * std::numbers::pi * th);
            double* gn = &g[static_cast<std::size_t>(n - 1) * nd];
            for (std::size_t i = 0; i < nd; ++i) gn[i] += w * column[i];
        }
    }
    out.assign(s.modes(), 0.0);
    for (int n = 1; n <= s.n_max; ++n) {
        const double* gn = &g[static_cast<std::size_t>(n - 1) * nd];
        for (int k = 1; k <= s.k_max; ++k) {
            const auto& R = s.basis->pairs[k - 1].R;
            double acc = 0.0;
            for (std::size_t i = 0; i < nd; ++i) acc += sys.lumped[i] * gn[i] * R[sys.dof_nodes[i]];
            out[s.index(n, k)] = acc;
        }
    }
}

}  // namespace detail

inline ModalCoefficients project_initial_data(const Field& phi0, const Field& phi1,
                                              std::shared_ptr<const RadialBasis> basis, int n_max, int k_max,
                                              int theta_intervals = 1024) {
    auto s = make_modal_state(std::move(basis), n_max, k_max);
    if (theta_intervals <= n_max)
        fail(ErrorCode::TruncationTooSmall, "theta grid must have more than n_max intervals");
    if (phi0) detail::project_one(phi0, s, theta_intervals, s.a);
    if (phi1) detail::project_one(phi1, s, theta_intervals, s.b);
    return s;
}

/// Discrete ||f||^2 - 1/2 sum a_{nk}^2 on the projection grid: the squared reconstruction
/// error, by Parseval for the discretely orthonormal system sqrt(2) sin(n pi theta) R_k.
inline double projection_residual_sq(const Field& f, const std::vector<double>& coeffs, const ModalCoefficients& s,
                                     int theta_intervals = 1024) {
    const auto& sys = s.basis->system;
    const auto& nodes = sys.mesh.nodes;
    double norm = 0.0;
    for (int j = 1; j < theta_intervals; ++j) {
        const double th = static_cast<double>(j) / theta_intervals;
        for (std::size_t i = 0; i < sys.dofs(); ++i) {
            const double v = f(th, nodes[sys.dof_nodes[i]]);
            norm += sys.lumped[i] * v * v;
        }
    }
    norm /= theta_intervals;
    double captured = 0.0;
    for (double c : coeffs) captured += 0.5 * c * c;
    return std::max(0.0, norm - captured);
}

/// Exact modal evolution with f = 0.
inline ModalSnapshot evolve(const ModalCoefficients& s, double t) {
    ModalSnapshot out;
    out.t = t;
    out.n_max = s.n_max;
    out.k_max = s.k_max;
    out.omega = s.omega;
    out.amplitude.resize(s.modes());
    out.velocity.resize(s.modes());
    for (std::size_t m = 0; m < s.modes(); ++m) {
        const double w = s.omega[m];
        const double c = std::cos(w * t), sn = std::sin(w * t);
        out.amplitude[m] = s.a[m] * c + s.b[m] / w * sn;
        out.velocity[m] = -s.a[m] * w * sn + s.b[m] * c;
    }
    return out;
}

/// Per-mode forcing series fhat_{nk}(j dt), j = 0..steps, same mode indexing as the state.
struct ModalForcing {
    double dt = 0.0;
    std::vector<std::vector<double>> samples;
};

/// Adds int_0^t sin(w (t - s)) / w fhat(s) ds to the amplitude (and the cos kernel to the
/// velocity) with the trapezoid rule on the forcing grid. t must be a grid time.
inline ModalSnapshot duhamel_forcing(const ModalCoefficients& s, const ModalForcing& f, double t) {
    ModalSnapshot out = evolve(s, t);
    if (f.samples.empty()) return out;
    if (f.samples.size() != s.modes()) fail(ErrorCode::GridMismatch, "forcing has wrong number of modes");
    if (!(f.dt > 0.0)) fail(ErrorCode::GridMismatch, "forcing step must be positive");
    const double steps_real = t / f.dt;
    const long steps = std::lround(steps_real);
    if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * std::max(1.0, steps_real) || steps < 0)
        fail(ErrorCode::GridMismatch, "t is not a point of the forcing grid");
    for (std::size_t m = 0; m < s.modes(); ++m) {
        const auto& series = f.samples[m];
        if (series.size() < static_cast<std::size_t>(steps) + 1)
            fail(ErrorCode::GridMismatch, "forcing series shorter than t / dt");
        const double w = s.omega[m];
        double amp = 0.0, vel = 0.0;
        for (long j = 0; j <= steps; ++j) {
            const double weight = (j == 0 || j == steps) ? 0.5 : 1.0;
            const double lag = t - j * f.dt;
            amp += weight * std::sin(w * lag) / w * series[j];
            vel += weight * std::cos(w * lag) * series[j];
        }
        out.amplitude[m] += amp * f.dt;
        out.velocity[m] += vel * f.dt;
    }
    return out;
}

struct EnergySplit {
    double kinetic = 0.0;    // 1/2 int phi_t^2
    double potential = 0.0;  // 1/2 int A grad phi . grad phi
    double total() const { return kinetic + potential; }
};

/// E = 1/4 sum [vel^2 + w^2 amp^2] by orthogonality of sin(n pi theta) R_k.
inline EnergySplit energy_split(const ModalSnapshot& x) {
    EnergySplit e;
    for (std::size_t m = 0; m < x.amplitude.size(); ++m) {
        e.kinetic += 0.25 * x.velocity[m] * x.velocity[m];
        e.potential += 0.25 * x.omega[m] * x.omega[m] * x.amplitude[m] * x.amplitude[m];
    }
    return e;
}

inline double energy(const ModalSnapshot& x) { return energy_split(x).total(); }
inline double energy(const ModalCoefficients& s) { return energy(evolve(s, 0.0)); }

/// ||phi(t)||^2_{L2} = 1/2 sum amp^2.
inline double l2_norm_sq(const ModalSnapshot& x) {
    double s = 0.0;
    for (double v : x.amplitude) s += 0.5 * v * v;
    return s;
}

struct EnergyReport {
    std::vector<double> times;
    std::vector<double> E;
    std::vector<double> kinetic;
    std::vector<double> potential;

    double max_relative_drift() const {
        double d = 0.0;
        for (double e : E) d = std::max(d, std::abs(e - E.front()));
        return E.front() > 0.0 ? d / E.front() : d;
    }
};

inline EnergyReport energy_series(const ModalCoefficients& s, double T, int samples) {
    if (samples < 2) fail(ErrorCode::GridMismatch, "need at least two sample times");
    EnergyReport rep;
    for (int j = 0; j < samples; ++j) {
        const double t = T * j / (samples - 1);
        const auto e = energy_split(evolve(s, t));
        rep.times.push_back(t);
        rep.E.push_back(e.total());
        rep.kinetic.push_back(e.kinetic);
        rep.potential.push_back(e.potential);
    }
    return rep;
}

/// H^1_0(Omega; w) seminorm of phi0 plus L2 norm of phi1, both squared:
/// 1/2 sum w^2 a^2 + 1/2 sum b^2.
inline double data_norm_sq(const ModalCoefficients& s) {
    double v = 0.0;
    for (std::size_t m = 0; m < s.modes(); ++m) v += 0.5 * (s.omega[m] * s.omega[m] * s.a[m] * s.a[m] + s.b[m] * s.b[m]);
    return v;
}

namespace detail {

/// int_0^T cos(d t) dt and int_0^T sin(d t) dt, stable for small d.
inline double cos_integral(double d, double T) {
    if (std::abs(d * T) < 1e-8) return T;
    return std::sin(d * T) / d;
}
inline double sin_integral(double d, double T) {
    if (std::abs(d * T) < 1e-8) return 0.5 * d * T * T;
    const double h = std::sin(0.5 * d * T);
    return 2.0 * h * h / d;
}

/// x(t) = p cos(w t) + q sin(w t)
struct Oscillation {
    double p = 0.0;
    double q = 0.0;
    double w = 0.0;
};

/// int_0^T x(t) y(t) dt in closed form.
inline double time_product(const Oscillation& x, const Oscillation& y, double T) {
    const double cm = cos_integral(x.w - y.w, T), cp = cos_integral(x.w + y.w, T);
    const double sm = sin_integral(x.w - y.w, T), sp = sin_integral(x.w + y.w, T);
    const double cc = 0.5 * (cm + cp);
    const double ss = 0.5 * (cm - cp);
    const double cs_xy = 0.5 * (sp - sm);  // int cos(wx t) sin(wy t)
    const double sc_xy = 0.5 * (sp + sm);  // int sin(wx t) cos(wy t)
    return x.p * y.p * cc + x.p * y.q * cs_xy + x.q * y.p * sc_xy + x.q * y.q * ss;
}

inline Oscillation amplitude_of(const ModalCoefficients& s, std::size_t m) {
    return {s.a[m], s.b[m] / s.omega[m], s.omega[m]};
}
inline Oscillation velocity_of(const ModalCoefficients& s, std::size_t m) {
    return {s.b[m], -s.a[m] * s.omega[m], s.omega[m]};
}

/// int_a^b cos(j pi theta) d theta for integer j.
inline double cos_segment(int j, double a, double b) {
    if (j == 0) return b - a;
    const double w = j * std::numbers::pi;
    return (std::sin(w * b) - std::sin(w * a)) / w;
}

/// Overlaps of sin(n pi theta) sin(m pi theta) and cos cos over a union of disjoint segments.
struct ThetaOverlaps {
    int n_max = 0;
    std::vector<double> sin_sin;
    std::vector<double> cos_cos;
    double ss(int n, int m) const { return sin_sin[static_cast<std::size_t>(n - 1) * n_max + (m - 1)]; }
    double cc(int n, int m) const { return cos_cos[static_cast<std::size_t>(n - 1) * n_max + (m - 1)]; }
};

inline ThetaOverlaps theta_overlaps(int n_max, const std::vector<std::pair<double, double>>& segments) {
    ThetaOverlaps o;
    o.n_max = n_max;
    o.sin_sin.assign(static_cast<std::size_t>(n_max) * n_max, 0.0);
    o.cos_cos.assign(static_cast<std::size_t>(n_max) * n_max, 0.0);
    for (int n = 1; n <= n_max; ++n)
        for (int m = 1; m <= n_max; ++m) {
            double minus = 0.0, plus = 0.0;
            for (const auto& [a, b] : segments) {
                minus += cos_segment(n - m, a, b);
                plus += cos_segment(n + m, a, b);
            }
            o.sin_sin[static_cast<std::size_t>(n - 1) * n_max + (m - 1)] = 0.5 * (minus - plus);
            o.cos_cos[static_cast<std::size_t>(n - 1) * n_max + (m - 1)] = 0.5 * (minus + plus);
        }
    return o;
}

/// theta-segments of [0, width) u (1 - width, 1], merged when they overlap.
inline std::vector<std::pair<double, double>> strip_segments(double width) {
    if (width >= 0.5) return {{0.0, 1.0}};
    return {{0.0, width}, {1.0 - width, 1.0}};
}

}  // namespace detail

enum class TimeIntegration { Exact, Trapezoid };

struct TimeQuadrature {
    TimeIntegration mode = TimeIntegration::Exact;
    int samples = 4096;              // trapezoid nodes, including both ends
    double refinement_tolerance = 1e-3;
};

/// A time integral with its refinement diagnostics (trapezoid mode only).
struct TimeIntegral {
    double value = 0.0;
    double coarse_value = 0.0;  // every other sample
    bool under_resolved = false;
};

namespace detail {

// B_n(t) = sum_k amp_{nk}(t) R_k'(1)
inline std::vector<double> trace_coefficients(const ModalSnapshot& x, const ModalCoefficients& s) {
    std::vector<double> B(s.n_max, 0.0);
    for (int n = 1; n <= s.n_max; ++n)
        for (int k = 1; k <= s.k_max; ++k) B[n - 1] += x.amplitude[s.index(n, k)] * s.flux(k);
    return B;
}

template <class Density>
TimeIntegral trapezoid_in_time(Density density, double T, const TimeQuadrature& q) {
    const int n = std::max(q.samples, 3);
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) v[j] = density(T * j / (n - 1));
    double fine = 0.0;
    for (int j = 0; j < n; ++j) fine += (j == 0 || j == n - 1 ? 0.5 : 1.0) * v[j];
    fine *= T / (n - 1);
    // coarse rule on every other node (exact grid halving when n is odd)
    const int last = (n - 1) - ((n - 1) % 2);
    double coarse = 0.0;
    for (int j = 0; j <= last; j += 2) coarse += (j == 0 || j == last ? 0.5 : 1.0) * v[j];
    coarse *= 2.0 * T / (n - 1);
    if (last != n - 1) coarse += 0.5 * (v[n - 2] + v[n - 1]) * T / (n - 1);
    TimeIntegral out;
    out.value = fine;
    out.coarse_value = coarse;
    const double scale = std::max(std::abs(fine), std::numeric_limits<double>::min());
    out.under_resolved = std::abs(fine - coarse) > q.refinement_tolerance * scale;
    return out;
}

}  // namespace detail

/// int_0^T int (d_r phi(theta, 1, t))^2 d theta dt over the full top side or over the
/// segment (delta0, 1 - delta0). d_r phi|_{r=1} = sum_n sin(n pi theta) B_n(t).
inline TimeIntegral boundary_trace_norm(const ModalCoefficients& s, double T, bool restricted, double delta0,
                                        const TimeQuadrature& q = {}) {
    if (!(T >= 0.0)) fail(ErrorCode::NonPositiveInput, "T must be nonnegative");
    if (restricted && !(delta0 > 0.0 && delta0 < 0.5)) fail(ErrorCode::InvalidDomain, "delta0 must lie in (0, 1/2)");
    const int N = s.n_max;
    detail::ThetaOverlaps ov;
    if (restricted) ov = detail::theta_overlaps(N, {{delta0, 1.0 - delta0}});

    if (q.mode == TimeIntegration::Trapezoid) {
        auto density = [&](double t) {
            const auto B = detail::trace_coefficients(evolve(s, t), s);
            double v = 0.0;
            if (!restricted) {
                for (double x : B) v += 0.5 * x * x;
            } else {
                for (int n = 1; n <= N; ++n)
                    for (int m = 1; m <= N; ++m) v += ov.ss(n, m) * B[n - 1] * B[m - 1];
            }
            return v;
        };
        return detail::trapezoid_in_time(density, T, q);
    }

    // closed form: int B_n B_m dt = sum_{k,k'} R_k'(1) R_k''(1) int amp_{nk} amp_{mk'} dt
    auto pair_integral = [&](int n, int m) {
        double acc = 0.0;
        for (int k = 1; k <= s.k_max; ++k) {
            const auto xk = detail::amplitude_of(s, s.index(n, k));
            if (xk.p == 0.0 && xk.q == 0.0) continue;
            for (int kk = 1; kk <= s.k_max; ++kk) {
                const auto yk = detail::amplitude_of(s, s.index(m, kk));
                if (yk.p == 0.0 && yk.q == 0.0) continue;
                acc += s.flux(k) * s.flux(kk) * detail::time_product(xk, yk, T);
            }
        }
        return acc;
    };
    TimeIntegral out;
    if (!restricted) {
        for (int n = 1; n <= N; ++n) out.value += 0.5 * pair_integral(n, n);
    } else {
        for (int n = 1; n <= N; ++n)
            for (int m = n; m <= N; ++m) {
                const double o = ov.ss(n, m);
                if (o == 0.0) continue;
                out.value += (n == m ? 1.0 : 2.0) * o * pair_integral(n, m);
            }
    }
    out.coarse_value = out.value;
    return out;
}

/// int_0^T int_{strips x (0,1)} [phi_t^2 + A grad phi . grad phi + phi^2] over the lateral
/// theta-strips of the given width. The r-integrals use the orthogonality of the R_k in
/// the lumped mass (int R_k R_k' = delta) and the stiffness (int r^alpha R_k' R_k'' = rho_k delta);
/// the theta-integrals are closed-form sine/cosine overlaps; time is integrated exactly.
inline double interior_observation_norm(const ModalCoefficients& s, const ObservationStrips& strips, double T) {
    if (!(strips.width > 0.0)) fail(ErrorCode::InvalidDomain, "strip width must be positive");
    const auto ov = detail::theta_overlaps(s.n_max, detail::strip_segments(strips.width));
    double total = 0.0;
    for (int k = 1; k <= s.k_max; ++k) {
        const double rho = s.rho(k);
        for (int n = 1; n <= s.n_max; ++n) {
            const std::size_t in = s.index(n, k);
            const auto an = detail::amplitude_of(s, in);
            const auto vn = detail::velocity_of(s, in);
            if (an.p == 0.0 && an.q == 0.0) continue;
            for (int m = 1; m <= s.n_max; ++m) {
                const std::size_t im = s.index(m, k);
                const auto am = detail::amplitude_of(s, im);
                if (am.p == 0.0 && am.q == 0.0) continue;
                const auto vm = detail::velocity_of(s, im);
                const double nm = n * m * std::numbers::pi * std::numbers::pi;
                const double amp_weight = ov.ss(n, m) * (rho + 1.0) + nm * ov.cc(n, m);
                total += amp_weight * detail::time_product(an, am, T) + ov.ss(n, m) * detail::time_product(vn, vm, T);
            }
        }
    }
    return total;
}

inline double interior_observation_norm(const ModalCoefficients& s, const DomainSpec& domain, double T) {
    return interior_observation_norm(s, domain.omega(), T);
}

/// int_0^T 2 E(t) dt + int_0^T ||phi||^2 dt over the whole square, exact in time.
inline double whole_domain_norm(const ModalCoefficients& s, double T) {
    double v = 0.0;
    for (std::size_t m = 0; m < s.modes(); ++m) {
        const auto a = detail::amplitude_of(s, m);
        const auto b = detail::velocity_of(s, m);
        const double w2 = s.omega[m] * s.omega[m];
        v += 0.5 * ((w2 + 1.0) * detail::time_product(a, a, T) + detail::time_product(b, b, T));
    }
    return v;
}

struct TraceReport {
    double full_trace_norm_sq = 0.0;
    double restricted_trace_norm_sq = 0.0;
    double interior_norm_sq = 0.0;
    bool under_resolved = false;
};

inline TraceReport trace_report(const ModalCoefficients& s, const DomainSpec& domain, double T,
                                const TimeQuadrature& q = {}) {
    TraceReport r;
    const auto full = boundary_trace_norm(s, T, false, domain.delta0, q);
    const auto part = boundary_trace_norm(s, T, true, domain.delta0, q);
    r.full_trace_norm_sq = full.value;
    r.restricted_trace_norm_sq = part.value;
    r.interior_norm_sq = interior_observation_norm(s, domain, T);
    r.under_resolved = full.under_resolved || part.under_resolved;
    return r;
}

}  // namespace degenlab
