#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "degenlab/cutoffs.hpp"
#include "degenlab/errors.hpp"

namespace degenlab {

/// Exponent of the degenerate diffusion matrix A = diag(1, r^alpha).
struct DegeneracyParams {
    double alpha = 0.5;
    bool critical = false;  // alpha == 1, only for the truncated Hardy computations

    static DegeneracyParams subcritical(double alpha) {
        if (!(alpha > 0.0 && alpha < 1.0))
            fail(ErrorCode::InvalidAlpha, "alpha must lie in (0,1), got " + std::to_string(alpha));
        return {alpha, false};
    }
    static DegeneracyParams critical_endpoint() { return {1.0, true}; }

    double weight(double r) const { return std::pow(r, alpha); }
};

inline void require_subcritical(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        fail(ErrorCode::InvalidAlpha, "alpha must lie in (0,1), got " + std::to_string(alpha));
}

/// Union of two lateral theta-strips [0, width) and (1 - width, 1], full r-range.
struct ObservationStrips {
    double width = 0.0;

    bool contains(double theta) const { return theta < width || theta > 1.0 - width; }
};

/// delta0 together with the regions built from it. Coordinates are z = (theta, r).
struct DomainSpec {
    double delta0 = 0.01;

    static DomainSpec make(double delta0) {
        if (!(delta0 > 0.0 && delta0 < 1.0 / 32.0))
            fail(ErrorCode::InvalidDomain, "delta0 must lie in (0, 1/32), got " + std::to_string(delta0));
        return {delta0};
    }

    /// omega = [(0, 4 delta0) u (1 - 4 delta0, 1)] x (0,1)
    ObservationStrips omega() const { return {4.0 * delta0}; }
    /// theta-range of Omega0 = (delta0, 1 - delta0) x (0,1)
    double omega0_begin() const { return delta0; }
    double omega0_end() const { return 1.0 - delta0; }
    /// Gamma_{2,delta0}^1 = (delta0, 1 - delta0) x {1}
    double restricted_top_begin() const { return delta0; }
    double restricted_top_end() const { return 1.0 - delta0; }
    /// Plateau of the theta cutoff: (3 delta0, 1 - 3 delta0)
    double plateau_begin() const { return 3.0 * delta0; }
    double plateau_end() const { return 1.0 - 3.0 * delta0; }

    CutoffSpec zeta() const { return theta_cutoff(delta0); }
};

/// T must exceed max{4 delta0^{-1/2}, sqrt(8 / beta)}.
inline double observation_time_threshold(double delta0, double beta) {
    if (!(delta0 > 0.0) || !(beta > 0.0))
        fail(ErrorCode::NonPositiveInput, "delta0 and beta must be positive");
    return std::max(4.0 / std::sqrt(delta0), std::sqrt(8.0 / beta));
}

/// Open upper bound of the admissible beta interval: 1/2 min{(2 - alpha)^2 / 8, delta0}.
inline double beta_upper_bound(double alpha, double delta0) {
    return 0.5 * std::min((2.0 - alpha) * (2.0 - alpha) / 8.0, delta0);
}

/// Weight parameters of xi = theta^2 + r^{2-alpha} - beta (t - t0)^2, sigma = exp(lambda xi),
/// and the conjugation strength s. No admissibility is implied.
struct WeightParams {
    double alpha = 0.5;
    double beta = 0.0;
    double t0 = 0.0;
    double lambda = 1.0;
    double s = 2.0;
};

struct CarlemanParams {
    double alpha = 0.5;
    double delta0 = 0.01;
    double lambda = 1.0;
    double s = 2.0;
    double beta = 0.0;
    double t0 = 0.0;
    double T = 0.0;
    // derived
    double threshold = 0.0;
    double gamma = 0.0;
    double gamma_hat = 0.0;
    double epsilon = 0.0;
    double A0 = 0.0;
    double A1 = 0.0;

    WeightParams weight() const { return {alpha, beta, t0, lambda, s}; }
    DomainSpec domain() const { return {delta0}; }
    CutoffSpec k_cutoff() const { return time_cutoff(epsilon, T); }
};

namespace detail {

// Extremes of S(theta, r) = theta^2 + r^{2-alpha} over a uniform grid of the closed square.
struct SpatialRange {
    double min = 0.0;
    double max = 0.0;
};

inline SpatialRange spatial_xi_range(double alpha, int points_per_unit) {
    const int n = std::max(points_per_unit, 1);
    SpatialRange out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (int i = 0; i <= n; ++i) {
        const double th = static_cast<double>(i) / n;
        for (int j = 0; j <= n; ++j) {
            const double r = static_cast<double>(j) / n;
            const double v = th * th + std::pow(r, 2.0 - alpha);
            out.min = std::min(out.min, v);
            out.max = std::max(out.max, v);
        }
    }
    return out;
}

// Extremes of -beta (t - t0)^2 over a uniform grid of [a, b] that contains both endpoints.
inline SpatialRange temporal_xi_range(double beta, double t0, double a, double b, int points_per_unit) {
    const int n = std::max(2, static_cast<int>(std::ceil((b - a) * points_per_unit)));
    SpatialRange out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (int i = 0; i <= n; ++i) {
        const double t = (i == n) ? b : a + (b - a) * static_cast<double>(i) / n;
        const double v = -beta * (t - t0) * (t - t0);
        out.min = std::min(out.min, v);
        out.max = std::max(out.max, v);
    }
    return out;
}

}  // namespace detail

/// Grid certification of the two terminal-time inequalities for a given epsilon:
///   xi <= -2 gamma_hat on [0, 2 eps] u [T - 2 eps, T],
///   xi >= -gamma_hat   on |t - T/2| <= eps.
inline bool certify_epsilon(const detail::SpatialRange& space, double beta, double T, double gamma_hat,
                            double epsilon, int points_per_unit) {
    if (!(epsilon > 0.0) || !(epsilon < T / 16.0)) return false;
    const double t0 = 0.5 * T;
    const auto early = detail::temporal_xi_range(beta, t0, 0.0, 2.0 * epsilon, points_per_unit);
    const auto late = detail::temporal_xi_range(beta, t0, T - 2.0 * epsilon, T, points_per_unit);
    const auto mid = detail::temporal_xi_range(beta, t0, t0 - epsilon, t0 + epsilon, points_per_unit);
    const bool ends_low = space.max + std::max(early.max, late.max) <= -2.0 * gamma_hat;
    const bool middle_high = space.min + mid.min >= -gamma_hat;
    return ends_low && middle_high;
}

inline bool certify_epsilon(double alpha, double beta, double T, double gamma_hat, double epsilon,
                            int points_per_unit) {
    return certify_epsilon(detail::spatial_xi_range(alpha, points_per_unit), beta, T, gamma_hat, epsilon,
                           points_per_unit);
}

inline constexpr int kDefaultCertificationResolution = 256;

/// Validates (alpha, delta0, beta, T, lambda, s) and derives gamma, gamma_hat,
/// epsilon, A0, A1 with t0 = T/2.
inline CarlemanParams validate_carleman_params(double alpha, const DomainSpec& domain, double beta, double T,
                                               double lambda, double s,
                                               int resolution = kDefaultCertificationResolution) {
    require_subcritical(alpha);
    const double delta0 = domain.delta0;
    if (!(delta0 > 0.0 && delta0 < 1.0 / 32.0))
        fail(ErrorCode::InvalidDomain, "delta0 must lie in (0, 1/32)");
    if (!(beta > 0.0) || !(T > 0.0) || !(lambda > 0.0) || !(s > 0.0))
        fail(ErrorCode::NonPositiveInput, "beta, T, lambda and s must be positive");
    if (s < 2.0) fail(ErrorCode::NonPositiveInput, "s must be at least 2");

    const double threshold = observation_time_threshold(delta0, beta);
    if (!(T > threshold))
        fail(ErrorCode::TimeTooShort,
             "T = " + std::to_string(T) + " does not exceed threshold " + std::to_string(threshold));
    const double beta_max = beta_upper_bound(alpha, delta0);
    if (!(beta < beta_max))
        fail(ErrorCode::BetaOutOfRange,
             "beta = " + std::to_string(beta) + " not below " + std::to_string(beta_max));

    CarlemanParams p;
    p.alpha = alpha;
    p.delta0 = delta0;
    p.lambda = lambda;
    p.s = s;
    p.beta = beta;
    p.T = T;
    p.t0 = 0.5 * T;
    p.threshold = threshold;
    // half of the supremum of admissible gamma: min{delta0, beta} T^2 > 8 + 4 gamma
    p.gamma = (std::min(delta0, beta) * T * T - 8.0) / 8.0;
    p.gamma_hat = 0.25 * p.gamma;
    if (!(p.gamma > 0.0)) fail(ErrorCode::NoAdmissibleEpsilon, "no positive gamma");

    // Both inequalities only get easier as epsilon shrinks, so bisect for the
    // largest certified epsilon below T/16.
    // The admissible epsilon scales like gamma, which can be arbitrarily small just past
    // the threshold, so the lower bracket is found by halving rather than fixed.
    double hi = T / 16.0;
    double lo = 0.5 * hi;
    const auto space = detail::spatial_xi_range(alpha, resolution);
    while (!certify_epsilon(space, beta, T, p.gamma_hat, lo, resolution)) {
        hi = lo;
        lo *= 0.5;
        if (!(lo > std::numeric_limits<double>::min()))
            fail(ErrorCode::NoAdmissibleEpsilon, "no epsilon certified on the grid");
    }
    for (int it = 0; it < 80 && hi - lo > 1e-13 * lo; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (certify_epsilon(space, beta, T, p.gamma_hat, mid, resolution))
            lo = mid;
        else
            hi = mid;
    }
    p.epsilon = lo;
    p.A0 = std::exp(-lambda * p.gamma_hat);
    p.A1 = std::exp(-2.0 * lambda * p.gamma_hat);
    return p;
}

inline CarlemanParams validate_carleman_params(double alpha, double delta0, double beta, double T, double lambda,
                                               double s) {
    return validate_carleman_params(alpha, DomainSpec::make(delta0), beta, T, lambda, s);
}

}  // namespace degenlab
