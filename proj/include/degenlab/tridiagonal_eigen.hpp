#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "degenlab/errors.hpp"
#include "degenlab/weighted_assembly.hpp"

namespace degenlab {

/// Number of eigenvalues of `a` strictly less than `x` (Sturm count from the
/// LDL^T pivots of a - x I).
inline int sturm_count(const SymTridiag& a, double x) {
    const std::size_t n = a.size();
    const double tiny = std::numeric_limits<double>::min();
    int count = 0;
    double pivot = a.diag[0] - x;
    if (pivot == 0.0) pivot = -tiny;
    if (pivot < 0.0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = a.diag[i] - x - a.off[i - 1] * a.off[i - 1] / pivot;
        if (pivot == 0.0) pivot = -tiny;
        if (pivot < 0.0) ++count;
    }
    return count;
}

inline std::pair<double, double> gershgorin_bounds(const SymTridiag& a) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        double radius = 0.0;
        if (i > 0) radius += std::abs(a.off[i - 1]);
        if (i + 1 < n) radius += std::abs(a.off[i]);
        lo = std::min(lo, a.diag[i] - radius);
        hi = std::max(hi, a.diag[i] + radius);
    }
    return {lo, hi};
}

/// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
inline double bisect_eigenvalue(const SymTridiag& a, int k, double lo, double hi) {
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)))
            break;
        if (sturm_count(a, mid) > k)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

/// k-th smallest (0-based) eigenvalue of the pencil K x = mu M x with K positive
/// semidefinite and M positive definite, both tridiagonal. By Sylvester's law of
/// inertia the number of pencil eigenvalues below mu equals the number of negative
/// pivots of K - mu M, so plain bisection on that count needs no factorization of M.
inline double pencil_eigenvalue(const SymTridiag& k_mat, const SymTridiag& m_mat, int k = 0) {
    const std::size_t n = k_mat.size();
    if (m_mat.size() != n || n == 0) fail(ErrorCode::GridMismatch, "pencil matrices differ in size");
    if (k < 0 || static_cast<std::size_t>(k) >= n) fail(ErrorCode::TruncationTooSmall, "pencil index out of range");
    SymTridiag shifted;
    shifted.diag.resize(n);
    shifted.off.resize(n - 1);
    auto count_below = [&](double mu) {
        for (std::size_t i = 0; i < n; ++i) shifted.diag[i] = k_mat.diag[i] - mu * m_mat.diag[i];
        for (std::size_t i = 0; i + 1 < n; ++i) shifted.off[i] = k_mat.off[i] - mu * m_mat.off[i];
        return sturm_count(shifted, 0.0);
    };
    double lo = 0.0;
    // any diagonal ratio K_ii / M_ii bounds the smallest eigenvalue; grow until k+1 lie below
    double hi = 1.0;
    for (std::size_t i = 0; i < n; ++i) hi = std::max(hi, k_mat.diag[i] / m_mat.diag[i]);
    for (int grow = 0; count_below(hi) <= k; ++grow) {
        if (grow > 200) fail(ErrorCode::ConvergenceFailure, "no upper bracket for pencil eigenvalue");
        hi *= 2.0;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
        if (count_below(mid) > k)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

namespace detail {

/// LU factorization with partial pivoting of a general tridiagonal matrix
/// (sub = lower, d = diagonal, sup = upper), LAPACK gttrf layout.
struct TridiagLU {
    std::vector<double> dl, d, du, du2;
    std::vector<int> ipiv;

    explicit TridiagLU(const SymTridiag& a, double shift) {
        const std::size_t n = a.size();
        d.resize(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = a.diag[i] - shift;
        dl = a.off;
        du = a.off;
        du2.assign(n > 2 ? n - 2 : 0, 0.0);
        ipiv.resize(n);
        for (std::size_t i = 0; i < n; ++i) ipiv[i] = static_cast<int>(i);
        const double floor = std::numeric_limits<double>::epsilon() *
                             std::max(1.0, *std::max_element(a.diag.begin(), a.diag.end(),
                                                             [](double x, double y) { return std::abs(x) < std::abs(y); }));
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (std::abs(d[i]) >= std::abs(dl[i])) {
                if (d[i] == 0.0) d[i] = floor;
                const double fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                const double fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                const double temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if (i + 2 < n) {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                ipiv[i] = static_cast<int>(i + 1);
            }
        }
        if (n > 0 && d[n - 1] == 0.0) d[n - 1] = floor;
    }

    void solve(std::vector<double>& b) const {
        const std::size_t n = d.size();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (ipiv[i] == static_cast<int>(i)) {
                b[i + 1] -= dl[i] * b[i];
            } else {
                const double temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - dl[i] * b[i];
            }
        }
        b[n - 1] /= d[n - 1];
        if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        for (std::size_t ii = n >= 2 ? n - 2 : 0; ii-- > 0;)
            b[ii] = (b[ii] - du[ii] * b[ii + 1] - du2[ii] * b[ii + 2]) / d[ii];
    }
};

inline double norm2(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace detail

struct TridiagEigenpair {
    double value = 0.0;
    std::vector<double> vector;  // Euclidean unit norm
    double residual = 0.0;       // ||A v - value v||
};

/// Smallest `count` eigenpairs of a symmetric tridiagonal matrix: Sturm bisection for
/// the values, shifted inverse iteration for the vectors, then Gram-Schmidt against
/// the previously accepted vectors.
inline std::vector<TridiagEigenpair> smallest_eigenpairs(const SymTridiag& a, int count) {
    const int n = static_cast<int>(a.size());
    if (count < 1 || count > n)
        fail(ErrorCode::TruncationTooSmall,
             "requested " + std::to_string(count) + " eigenpairs of a " + std::to_string(n) + "-dof system");
    auto [glo, ghi] = gershgorin_bounds(a);
    const double span = std::max(std::abs(glo), std::abs(ghi));
    glo -= 1e-12 * span + std::numeric_limits<double>::min();
    ghi += 1e-12 * span + std::numeric_limits<double>::min();

    std::vector<TridiagEigenpair> out;
    out.reserve(count);
    std::vector<double> y(n), ay(n);
    for (int k = 0; k < count; ++k) {
        const double lambda = bisect_eigenvalue(a, k, glo, ghi);
        // shift slightly below the eigenvalue so the factorization stays nonsingular
        const double shift = lambda - 1e-13 * std::max(std::abs(lambda), 1.0);
        const detail::TridiagLU lu(a, shift);
        for (int i = 0; i < n; ++i) y[i] = 1.0 + 0.1 * std::sin(1.0 + 0.7 * i);
        double resid = std::numeric_limits<double>::infinity();
        const double scale = std::max(span, 1.0);
        for (int it = 0; it < 8; ++it) {
            lu.solve(y);
            for (const auto& prev : out) {
                double dot = 0.0;
                for (int i = 0; i < n; ++i) dot += prev.vector[i] * y[i];
                for (int i = 0; i < n; ++i) y[i] -= dot * prev.vector[i];
            }
            const double nrm = detail::norm2(y);
            if (!(nrm > 0.0) || !std::isfinite(nrm))
                fail(ErrorCode::ConvergenceFailure, "inverse iteration broke down at index " + std::to_string(k));
            for (double& v : y) v /= nrm;
            a.apply(y, ay);
            double r2 = 0.0;
            for (int i = 0; i < n; ++i) r2 += (ay[i] - lambda * y[i]) * (ay[i] - lambda * y[i]);
            resid = std::sqrt(r2);
            if (it >= 2 && resid <= 1e-9 * scale) break;
        }
        if (!(resid <= 1e-6 * scale))
            fail(ErrorCode::ConvergenceFailure, "inverse iteration stagnated at index " + std::to_string(k) +
                                                    " (residual " + std::to_string(resid) + ")");
        out.push_back({lambda, y, resid});
    }
    return out;
}

}  // namespace degenlab
