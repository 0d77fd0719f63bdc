#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "degenlab/errors.hpp"

namespace degenlab {

/// Smooth radial eigenfunction of -(r^alpha R')' = rho R with R(0) = R(1) = 0 from its
/// Frobenius series at the regular singular point r = 0:
///   R(r) = sum_j c_j r^{e_j},  e_j = (j + 1)(2 - alpha) - 1,
///   c_{j+1} = -rho c_j / (e_{j+1} (j + 1)(2 - alpha)).
/// The series is entire in r^{2-alpha}; long double keeps the alternating sum accurate
/// for the low modes used here.
class AnalyticRadialMode {
public:
    AnalyticRadialMode() = default;

    /// k-th (1-based) Dirichlet mode, L2(0,1)-normalized, positive near r = 0.
    static AnalyticRadialMode dirichlet(double alpha, int k) {
        if (!(alpha >= 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidAlpha, "analytic mode needs alpha in [0,1)");
        if (k < 1 || k > 12) fail(ErrorCode::TruncationTooSmall, "analytic modes are provided for k in 1..12");
        AnalyticRadialMode mode;
        mode.alpha_ = alpha;
        mode.rho_ = find_root(alpha, k);
        mode.build(mode.rho_);
        mode.normalize();
        return mode;
    }

    double alpha() const { return alpha_; }
    double rho() const { return rho_; }

    double value(double r) const {
        if (r <= 0.0) return 0.0;
        const long double lr = std::log(static_cast<long double>(r));
        long double s = 0.0L;
        for (std::size_t j = 0; j < coeffs_.size(); ++j) s += coeffs_[j] * std::exp(exps_[j] * lr);
        return static_cast<double>(scale_ * s);
    }

    /// R'(r) for r > 0 (unbounded like r^{-alpha} at the origin).
    double derivative(double r) const {
        if (r <= 0.0) return std::numeric_limits<double>::infinity();
        const long double lr = std::log(static_cast<long double>(r));
        long double s = 0.0L;
        for (std::size_t j = 0; j < coeffs_.size(); ++j)
            s += coeffs_[j] * exps_[j] * std::exp((exps_[j] - 1.0L) * lr);
        return static_cast<double>(scale_ * s);
    }

    /// Radial flux r^alpha R'(r); finite at the origin.
    double flux(double r) const {
        if (r <= 0.0) return static_cast<double>(scale_ * coeffs_[0] * exps_[0]);
        return std::pow(r, alpha_) * derivative(r);
    }

private:
    double alpha_ = 0.0;
    double rho_ = 0.0;
    long double scale_ = 1.0L;
    std::vector<long double> coeffs_;
    std::vector<long double> exps_;

    static long double series_at_one(double alpha, long double rho) {
        const long double kappa = 2.0L - alpha;
        long double c = 1.0L, s = 1.0L, peak = 1.0L;
        for (int j = 0; j < 400; ++j) {
            const long double e_next = (j + 2) * kappa - 1.0L;
            c *= -rho / (e_next * (j + 1) * kappa);
            s += c;
            peak = std::max(peak, std::abs(c));
            if (std::abs(c) < 1e-24L * peak && j > 4) break;
        }
        return s;
    }

    static double find_root(double alpha, int k) {
        // zeros are spaced roughly like ((2 - alpha) pi / 2)^2 (2k); scan finely, then bisect
        const long double kappa = 2.0L - alpha;
        const long double base = kappa * 3.14159265358979323846L / 2.0L;
        const long double step = 0.02L * base * base;
        long double lo = 1e-9L;
        long double flo = series_at_one(alpha, lo);
        int found = 0;
        for (int it = 0; it < 200000; ++it) {
            const long double hi = lo + step;
            const long double fhi = series_at_one(alpha, hi);
            if ((flo > 0) != (fhi > 0)) {
                if (++found == k) {
                    long double a = lo, b = hi, fa = flo;
                    for (int bis = 0; bis < 200; ++bis) {
                        const long double m = 0.5L * (a + b);
                        const long double fm = series_at_one(alpha, m);
                        if ((fm > 0) == (fa > 0)) {
                            a = m;
                            fa = fm;
                        } else {
                            b = m;
                        }
                        if (b - a < 1e-17L * b) break;
                    }
                    return static_cast<double>(0.5L * (a + b));
                }
            }
            lo = hi;
            flo = fhi;
        }
        fail(ErrorCode::ConvergenceFailure, "analytic mode root search failed");
    }

    void build(long double rho) {
        const long double kappa = 2.0L - alpha_;
        coeffs_.assign(1, 1.0L);
        exps_.assign(1, 1.0L - alpha_);
        long double c = 1.0L, peak = 1.0L;
        for (int j = 0; j < 400; ++j) {
            const long double e_next = (j + 2) * kappa - 1.0L;
            c *= -rho / (e_next * (j + 1) * kappa);
            coeffs_.push_back(c);
            exps_.push_back(e_next);
            peak = std::max(peak, std::abs(c));
            if (std::abs(c) < 1e-24L * peak && j > 4) break;
        }
    }

    void normalize() {
        long double s = 0.0L;
        for (std::size_t i = 0; i < coeffs_.size(); ++i)
            for (std::size_t j = 0; j < coeffs_.size(); ++j)
                s += coeffs_[i] * coeffs_[j] / (exps_[i] + exps_[j] + 1.0L);
        scale_ = 1.0L / std::sqrt(s);
    }
};

}  // namespace degenlab
