#pragma once

// Reference values for -(r^a R')' = rho R, R(0) = R(1) = 0, computed without the library.

#include <cmath>
#include <utility>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

namespace oracle {

// R = r^{(1-a)/2} J_nu(2 sqrt(rho) r^{(2-a)/2} / (2-a)), nu = (1-a)/(2-a), so
// rho_k = ((2-a) j_{nu,k} / 2)^2.
inline double bessel_eigenvalue(double a, int k) {
    const double nu = (1.0 - a) / (2.0 - a);
    const double j = boost::math::cyl_bessel_j_zero(nu, k);
    const double x = 0.5 * (2.0 - a) * j;
    return x * x;
}

// Boundary flux R'(1) of the L2-normalized eigenfunction with positive interior sign.
inline double bessel_flux(double a, int k) {
    const double nu = (1.0 - a) / (2.0 - a);
    const double c = 2.0 / (2.0 - a);
    const double rho = bessel_eigenvalue(a, k);
    const double j = boost::math::cyl_bessel_j_zero(nu, k);
    // R(r) = r^{(1-a)/2} J_nu(c sqrt(rho) r^{1/c}); at r = 1 only the J' term survives
    const double dj = 0.5 * (boost::math::cyl_bessel_j(nu - 1.0, j) - boost::math::cyl_bessel_j(nu + 1.0, j));
    // the argument has derivative sqrt(rho) at r = 1; R > 0 near 0, so no sign fix is needed
    const double raw_flux = dj * std::sqrt(rho);
    // int_0^1 R^2 dr = c int_0^1 x J_nu(j x)^2 dx = c J_{nu+1}(j)^2 / 2
    const double jn1 = boost::math::cyl_bessel_j(nu + 1.0, j);
    const double norm = std::sqrt(c * 0.5 * jn1 * jn1);
    return raw_flux / norm;
}

// Shooting: in u = r^{1-a} the system R_u = F/(1-a), F_u = -rho R r^a/(1-a) is smooth, F = r^a R'.
// Start at u0 from the leading Frobenius terms R = r^{1-a}(1 - rho r^{2-a}/((2-a)(3-2a))).
inline double shoot(double a, double rho, double r0 = 1e-12) {
    using State = std::array<double, 2>;
    namespace odeint = boost::numeric::odeint;
    const double e = 2.0 - a;
    const double c1 = -rho / (e * (3.0 - 2.0 * a));
    State x{std::pow(r0, 1.0 - a) * (1.0 + c1 * std::pow(r0, e)),
            (1.0 - a) + c1 * (1.0 - a + e) * std::pow(r0, e)};
    auto rhs = [&](const State& s, State& d, double u) {
        const double r = std::pow(u, 1.0 / (1.0 - a));
        d[0] = s[1] / (1.0 - a);
        d[1] = -rho * s[0] * std::pow(r, a) / (1.0 - a);
    };
    auto stepper = odeint::make_controlled(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_adaptive(stepper, rhs, x, std::pow(r0, 1.0 - a), 1.0, 1e-4);
    return x[0];
}

// k-th root of R(1; rho), bracketed by a scan that starts just below the Bessel-free guess
// ((2-a) pi (k + 1/4) / 2)^2 and walks in steps until the sign of shoot() changes k times.
inline double shooting_eigenvalue(double a, int k) {
    const double step = 0.02 * std::pow(0.5 * (2.0 - a) * M_PI, 2);
    double lo = step, flo = shoot(a, lo);
    int found = 0;
    for (double hi = lo + step;; hi += step) {
        const double fhi = shoot(a, hi);
        if ((flo < 0.0) != (fhi < 0.0) && ++found == k) {
            boost::uintmax_t iters = 200;
            const auto tol = [](double x, double y) { return std::abs(x - y) <= 1e-14 * std::abs(x); };
            const auto r = boost::math::tools::toms748_solve([&](double rho) { return shoot(a, rho); }, lo, hi, flo,
                                                             fhi, tol, iters);
            return 0.5 * (r.first + r.second);
        }
        lo = hi;
        flo = fhi;
    }
}

}  // namespace oracle
