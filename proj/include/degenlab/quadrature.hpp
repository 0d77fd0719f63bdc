#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "degenlab/errors.hpp"

namespace degenlab {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule of the given order on [-1, 1] (Newton on P_n from Chebyshev guesses).
inline QuadratureRule gauss_legendre(int order) {
    if (order < 1) fail(ErrorCode::InvalidMeshSpec, "quadrature order must be positive");
    QuadratureRule q;
    q.nodes.resize(order);
    q.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        q.nodes[i] = x;
        q.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return q;
}

/// Composite Gauss-Legendre rule on [a, b]: `panels` equal panels, further split at
/// every breakpoint inside (a, b).
inline QuadratureRule composite_gauss(double a, double b, int panels, int order, std::vector<double> breaks = {}) {
    if (!(b > a) || panels < 1) fail(ErrorCode::InvalidMeshSpec, "empty quadrature interval");
    std::vector<double> cuts;
    for (int p = 0; p <= panels; ++p) cuts.push_back(a + (b - a) * p / panels);
    for (double x : breaks)
        if (x > a && x < b) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [&](double x, double y) { return std::abs(x - y) <= 1e-14 * (b - a); }),
               cuts.end());
    const auto ref = gauss_legendre(order);
    QuadratureRule q;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double mid = 0.5 * (cuts[c] + cuts[c + 1]);
        const double half = 0.5 * (cuts[c + 1] - cuts[c]);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            q.nodes.push_back(mid + half * ref.nodes[i]);
            q.weights.push_back(half * ref.weights[i]);
        }
    }
    return q;
}

}  // namespace degenlab
