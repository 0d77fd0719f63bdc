#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "degenlab/errors.hpp"

namespace degenlab {

/// Value of a scalar function together with its first two derivatives.
struct Jet2 {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

namespace detail {

// f(x) = exp(-1/x) for x > 0, 0 otherwise.
inline Jet2 mollifier_ramp(double x) {
    if (x <= 0.0) return {};
    const double f = std::exp(-1.0 / x);
    if (f == 0.0) return {};
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    return {f, f * inv2, f * (inv2 * inv2 - 2.0 * inv2 * inv)};
}

}  // namespace detail

/// C-infinity step S on [0,1]: S = 0 for x <= 0, S = 1 for x >= 1,
/// S(x) = f(x) / (f(x) + f(1-x)) in between, f(x) = exp(-1/x).
inline Jet2 smooth_step(double x) {
    if (x <= 0.0) return {0.0, 0.0, 0.0};
    if (x >= 1.0) return {1.0, 0.0, 0.0};
    const Jet2 f = detail::mollifier_ramp(x);
    const Jet2 gr = detail::mollifier_ramp(1.0 - x);
    // g(x) = f(1-x): g' = -f'(1-x), g'' = f''(1-x)
    const double g = gr.value, g1 = -gr.d1, g2 = gr.d2;
    const double den = f.value + g;
    const double den1 = f.d1 + g1;
    const double num = f.d1 * g - f.value * g1;      // (f/den)' * den^2
    const double num1 = f.d2 * g - f.value * g2;
    Jet2 out;
    out.value = f.value / den;
    out.d1 = num / (den * den);
    out.d2 = num1 / (den * den) - 2.0 * num * den1 / (den * den * den);
    return out;
}

enum class CutoffKind { Theta, Time };

/// Plateau cutoff: 0 below `rise_begin`, smooth rise to 1 on
/// [rise_begin, rise_end], 1 on [rise_end, fall_begin], smooth fall to 0 on
/// [fall_begin, fall_end], 0 above.
struct CutoffSpec {
    CutoffKind kind = CutoffKind::Theta;
    double rise_begin = 0.0;
    double rise_end = 0.0;
    double fall_begin = 1.0;
    double fall_end = 1.0;

    bool in_transition(double x) const {
        return (x > rise_begin && x < rise_end) || (x > fall_begin && x < fall_end);
    }
};

inline void validate_cutoff(const CutoffSpec& c) {
    if (!(c.rise_begin < c.rise_end && c.rise_end <= c.fall_begin && c.fall_begin < c.fall_end))
        fail(ErrorCode::InvalidDomain, "cutoff band endpoints must be ordered");
}

/// zeta(theta): 1 on (3 delta0, 1 - 3 delta0), 0 on [0, 2 delta0) and (1 - 2 delta0, 1].
inline CutoffSpec theta_cutoff(double delta0) {
    if (!(delta0 > 0.0 && delta0 < 1.0 / 6.0))
        fail(ErrorCode::InvalidDomain, "theta cutoff needs 0 < delta0 < 1/6");
    return {CutoffKind::Theta, 2.0 * delta0, 3.0 * delta0, 1.0 - 3.0 * delta0, 1.0 - 2.0 * delta0};
}

/// k(t): 1 on (2 eps, T - 2 eps), 0 outside (eps, T - eps).
inline CutoffSpec time_cutoff(double epsilon, double horizon) {
    if (!(epsilon > 0.0 && 4.0 * epsilon < horizon))
        fail(ErrorCode::InvalidDomain, "time cutoff needs 0 < 4 eps < T");
    return {CutoffKind::Time, epsilon, 2.0 * epsilon, horizon - 2.0 * epsilon, horizon - epsilon};
}

inline Jet2 eval_cutoff(const CutoffSpec& c, double x) {
    if (x <= c.rise_begin || x >= c.fall_end) return {0.0, 0.0, 0.0};
    if (x >= c.rise_end && x <= c.fall_begin) return {1.0, 0.0, 0.0};
    if (x < c.rise_end) {
        const double w = c.rise_end - c.rise_begin;
        const Jet2 s = smooth_step((x - c.rise_begin) / w);
        return {s.value, s.d1 / w, s.d2 / (w * w)};
    }
    const double w = c.fall_end - c.fall_begin;
    const Jet2 s = smooth_step((c.fall_end - x) / w);
    return {s.value, -s.d1 / w, s.d2 / (w * w)};
}

inline Jet2 eval_cutoff_theta(const CutoffSpec& c, double theta) { return eval_cutoff(c, theta); }
inline Jet2 eval_cutoff_time(const CutoffSpec& c, double t) { return eval_cutoff(c, t); }

/// Measured constants C1 = max |zeta'| * delta0 and C2 = max |zeta''| * delta0^2
/// on a uniform grid of `samples` points over [0,1].
struct CutoffBounds {
    double first = 0.0;
    double second = 0.0;
};

inline CutoffBounds measure_theta_cutoff_bounds(double delta0, int samples = 10000) {
    const CutoffSpec c = theta_cutoff(delta0);
    CutoffBounds b;
    for (int i = 0; i <= samples; ++i) {
        const Jet2 z = eval_cutoff(c, static_cast<double>(i) / samples);
        b.first = std::max(b.first, std::abs(z.d1) * delta0);
        b.second = std::max(b.second, std::abs(z.d2) * delta0 * delta0);
    }
    return b;
}

}  // namespace degenlab
