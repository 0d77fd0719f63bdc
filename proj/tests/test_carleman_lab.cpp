#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "degenlab/carleman_lab.hpp"

using namespace degenlab;

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
void expect_code(ErrorCode code, F&& f) {
    try {
        f();
        ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

// xi and sigma written out directly for the finite-difference oracle
struct Weight {
    double alpha, beta, t0, lambda;
    double xi(double th, double r, double t) const {
        return th * th + std::pow(r, 2.0 - alpha) - beta * (t - t0) * (t - t0);
    }
    double sigma(double th, double r, double t) const { return std::exp(lambda * xi(th, r, t)); }
};

void expect_rel(double got, double want, double tol, const char* what) {
    EXPECT_NEAR(got, want, tol * std::max(1.0, std::abs(want))) << what;
}

}  // namespace

TEST(Weight, OriginAndCorner) {
    const WeightParams w{0.5, 0.01, 3.0, 0.7, 2.0};
    const auto o = eval_xi_sigma(w, 0.0, 0.0, 3.0);
    EXPECT_EQ(o.xi, 0.0);
    EXPECT_EQ(o.sigma, 1.0);
    EXPECT_EQ(o.A_grad_xi.theta, 0.0);
    EXPECT_EQ(o.A_grad_xi.r, 0.0);
    EXPECT_FALSE(o.hessian_bounded);
    EXPECT_TRUE(std::isinf(o.hess_xi.rr));
    const auto c = eval_xi_sigma(w, 1.0, 1.0, 3.0);
    EXPECT_DOUBLE_EQ(c.xi, 2.0);
    EXPECT_DOUBLE_EQ(c.sigma, std::exp(1.4));
    EXPECT_DOUBLE_EQ(c.A_grad_xi.theta, 2.0);
    EXPECT_DOUBLE_EQ(c.A_grad_xi.r, 1.5);
    EXPECT_TRUE(c.hessian_bounded);
}

TEST(Weight, DerivativesMatchFiniteDifferences) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (double alpha : {0.2, 0.5, 0.8}) {
        const WeightParams w{alpha, 0.01, 5.0, 0.9, 1.0};
        const Weight o{alpha, w.beta, w.t0, w.lambda};
        for (int trial = 0; trial < 1000; ++trial) {
            const double th = 0.05 + 0.9 * U(rng), r = 0.1 + 0.85 * U(rng), t = 10.0 * U(rng);
            const double h = 1e-4;
            const auto d = eval_xi_sigma(w, th, r, t);
            auto S = [&](double a, double b, double c) { return o.sigma(a, b, c); };
            const double s0 = S(th, r, t);
            expect_rel(d.xi, o.xi(th, r, t), 1e-14, "xi");
            expect_rel(d.sigma, s0, 1e-14, "sigma");
            // first derivatives of xi
            expect_rel(d.grad_xi.theta, (o.xi(th + h, r, t) - o.xi(th - h, r, t)) / (2 * h), 1e-7, "xi_theta");
            expect_rel(d.grad_xi.r, (o.xi(th, r + h, t) - o.xi(th, r - h, t)) / (2 * h), 1e-6, "xi_r");
            expect_rel(d.xi_t, (o.xi(th, r, t + h) - o.xi(th, r, t - h)) / (2 * h), 1e-7, "xi_t");
            expect_rel(d.hess_xi.rr, (o.xi(th, r + h, t) - 2 * o.xi(th, r, t) + o.xi(th, r - h, t)) / (h * h), 1e-4, "xi_rr");
            expect_rel(d.hess_xi.tt, 2.0, 1e-15, "xi_thth");
            // sigma
            const double st = (S(th, r, t + h) - S(th, r, t - h)) / (2 * h);
            const double sth = (S(th + h, r, t) - S(th - h, r, t)) / (2 * h);
            const double sr = (S(th, r + h, t) - S(th, r - h, t)) / (2 * h);
            expect_rel(d.sigma_t, st, 1e-6, "sigma_t");
            expect_rel(d.grad_sigma.theta, sth, 1e-6, "sigma_theta");
            expect_rel(d.grad_sigma.r, sr, 1e-6, "sigma_r");
            expect_rel(d.A_grad_sigma.r, std::pow(r, alpha) * sr, 1e-6, "A grad sigma r");
            expect_rel(d.A_grad_sigma.theta, sth, 1e-6, "A grad sigma theta");
            expect_rel(d.sigma_tt, (S(th, r, t + h) - 2 * s0 + S(th, r, t - h)) / (h * h), 1e-4, "sigma_tt");
            expect_rel(d.hess_sigma.tt, (S(th + h, r, t) - 2 * s0 + S(th - h, r, t)) / (h * h), 1e-4, "sigma_thth");
            expect_rel(d.hess_sigma.rr, (S(th, r + h, t) - 2 * s0 + S(th, r - h, t)) / (h * h), 1e-4, "sigma_rr");
            expect_rel(d.hess_sigma.tr,
                       (S(th + h, r + h, t) - S(th + h, r - h, t) - S(th - h, r + h, t) + S(th - h, r - h, t)) / (4 * h * h),
                       1e-4, "sigma_thr");
            // Div(A grad sigma) = sigma_thth + d_r (r^alpha sigma_r), the flux differenced at half steps
            auto flux = [&](double rr) { return std::pow(rr, alpha) * (S(th, rr + h, t) - S(th, rr - h, t)) / (2 * h); };
            const double div = (S(th + h, r, t) - 2 * s0 + S(th - h, r, t)) / (h * h) + (flux(r + h) - flux(r - h)) / (2 * h);
            expect_rel(d.div_A_grad_sigma, div, 1e-4, "div A grad sigma");
            // third-order quantities: differences of the (separately verified) analytic second-order ones
            auto D = [&](double a, double b, double c) { return eval_xi_sigma(w, a, b, c); };
            expect_rel(d.grad_sigma_tt.theta, (D(th + h, r, t).sigma_tt - D(th - h, r, t).sigma_tt) / (2 * h), 1e-6, "grad sigma_tt theta");
            expect_rel(d.grad_sigma_tt.r, (D(th, r + h, t).sigma_tt - D(th, r - h, t).sigma_tt) / (2 * h), 1e-6, "grad sigma_tt r");
            expect_rel(d.grad_div_A_grad_sigma.theta,
                       (D(th + h, r, t).div_A_grad_sigma - D(th - h, r, t).div_A_grad_sigma) / (2 * h), 1e-6, "grad div theta");
            expect_rel(d.grad_div_A_grad_sigma.r,
                       (D(th, r + h, t).div_A_grad_sigma - D(th, r - h, t).div_A_grad_sigma) / (2 * h), 1e-6, "grad div r");
            // b = (xi_t)^2 - A grad xi . grad xi and (sigma_t)^2 - A grad sigma . grad sigma = lambda^2 sigma^2 b
            const double b = d.xi_t * d.xi_t - (d.A_grad_xi.theta * d.grad_xi.theta + d.A_grad_xi.r * d.grad_xi.r);
            expect_rel(d.b, b, 1e-12, "b");
            const double lhs = d.sigma_t * d.sigma_t - (d.A_grad_sigma.theta * d.grad_sigma.theta + d.A_grad_sigma.r * d.grad_sigma.r);
            expect_rel(lhs, w.lambda * w.lambda * d.sigma * d.sigma * d.b, 1e-12, "sigma b identity");
            if (::testing::Test::HasFailure()) return;
        }
    }
}

TEST(Weight, BValues) {
    const WeightParams w{0.5, 0.01, 2.0, 1.0, 1.0};
    EXPECT_EQ(eval_b(w, 0.0, 0.0, 2.0), 0.0);
    EXPECT_NEAR(eval_b(w, 0.0, 0.0, 3.0), 4e-4, 1e-18);
    for (double th : {0.0, 0.3, 1.0})
        for (double r : {0.0, 0.2, 1.0}) {
            const double b = eval_b(w, th, r, 2.0);
            EXPECT_NEAR(b, -(4.0 * th * th + 2.25 * std::pow(r, 1.5)), 1e-15);
            if (th > 0.0 || r > 0.0) {
                EXPECT_LT(b, 0.0);
            }
        }
}

TEST(Weight, RadialHessianScalesWithOneMinusAlpha) {
    for (double r : {0.1, 0.5, 1.0}) {
        for (double alpha : {0.01, 0.3, 0.6, 0.9, 0.99}) {
            const auto d = eval_xi_sigma(WeightParams{alpha, 0.01, 0.0, 1.0, 1.0}, 0.5, r, 0.0);
            EXPECT_GT(d.hess_xi.rr, 0.0);
            EXPECT_NEAR(d.hess_xi.rr / (1.0 - alpha), (2.0 - alpha) * std::pow(r, -alpha), 1e-12 * std::pow(r, -alpha));
        }
    }
}

TEST(Conjugation, RoundTripAndTrivialCases) {
    const GridSpec g{0.0, 1.0, 0.2, 1.0, 0.0, 4.0, 10, 6, 12};
    const WeightParams w{0.5, 0.01, 2.0, 1.0, 3.0};
    const auto psi = sample_field(g, [](double th, double r, double t) { return std::sin(3 * th) * r * std::cos(t); });
    const auto back = deconjugate_field(conjugate_field(psi, w), w);
    for (std::size_t i = 0; i < psi.values.size(); ++i) EXPECT_NEAR(back.values[i], psi.values[i], 1e-12 * std::max(1.0, std::abs(psi.values[i])));
    const auto zero = conjugate_field(sample_field(g, [](double, double, double) { return 0.0; }), w);
    for (double v : zero.values) EXPECT_EQ(v, 0.0);
    WeightParams w0 = w;
    w0.s = 0.0;
    const auto same = conjugate_field(psi, w0);
    for (std::size_t i = 0; i < psi.values.size(); ++i) EXPECT_EQ(same.values[i], psi.values[i]);
    GridField bad = psi;
    bad.values.pop_back();
    expect_code(ErrorCode::GridMismatch, [&] { conjugate_field(bad, w); });
}

TEST(Conjugation, SplitReproducesConjugatedWaveOperator) {
    // psi = sin(pi theta) cos(r) cos(0.7 t):
    //   psi_tt - psi_thth - (r^a psi_r)_r = [-0.49 + pi^2] psi + (a r^{a-1} sin r + r^a cos r) sin(pi th) cos(0.7 t)
    const double a = 0.5;
    const WeightParams w{a, 0.02, 1.5, 0.5, 1.0};
    auto psi = [](double th, double r, double t) { return std::sin(kPi * th) * std::cos(r) * std::cos(0.7 * t); };
    auto L_psi = [&](double th, double r, double t) {
        return (kPi * kPi - 0.49) * psi(th, r, t) +
               (a * std::pow(r, a - 1.0) * std::sin(r) + std::pow(r, a) * std::cos(r)) * std::sin(kPi * th) * std::cos(0.7 * t);
    };
    const Weight o{a, w.beta, w.t0, w.lambda};
    std::vector<double> errs;
    for (int n : {24, 48, 96}) {
        const GridSpec g{0.2, 0.8, 0.3, 0.9, 1.0, 2.0, n, n, n};
        const auto eta = conjugate_field(sample_field(g, psi), w);
        const auto out = apply_conjugated_operator(eta, w);
        double err = 0.0, ref = 0.0;
        for (int l = 1; l < n; ++l)
            for (int j = 1; j < n; ++j)
                for (int i = 1; i < n; ++i) {
                    const double th = g.theta(i), r = g.r(j), t = g.t(l);
                    const double want = std::exp(w.s * o.sigma(th, r, t)) * L_psi(th, r, t);
                    err += (out.at(i, j, l) - want) * (out.at(i, j, l) - want);
                    ref += want * want;
                }
        // discrete L2, the norm the residual is reported in
        errs.push_back(std::sqrt(err / ref));
    }
    EXPECT_LT(errs.back(), 1e-3);
    for (std::size_t i = 1; i < errs.size(); ++i) EXPECT_NEAR(std::log2(errs[i - 1] / errs[i]), 2.0, 0.15) << i;
}

TEST(Conjugation, PlainWaveOperatorOfModalSolution) {
    // at s = 0 the conjugated operator is the wave operator, and an exact solution has zero residual up to O(h^2)
    ModalSolution phi(0.5);
    phi.add(1, 1, 1.0, 0.0).add(2, 1, 0.0, 0.5);
    std::vector<double> res;
    for (int n : {16, 32}) {
        const GridSpec g{0.0, 1.0, 0.3, 1.0, 0.0, 1.0, n, n, n};
        const auto u = sample_field(g, [&](double th, double r, double t) { return phi.eval(th, r, t).value; });
        const auto out = apply_wave_operator(u, 0.5);
        double m = 0.0;
        for (double v : out.values) m = std::max(m, std::abs(v));
        res.push_back(m);
    }
    EXPECT_NEAR(std::log2(res[0] / res[1]), 2.0, 0.2);
    expect_code(ErrorCode::DegenerateCellTouched, [] {
        const GridSpec g{0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 4, 4, 4};
        apply_wave_operator(sample_field(g, [](double, double, double) { return 0.0; }), 0.5);
    });
}

namespace {

CarlemanParams default_params() { return validate_carleman_params(0.5, 0.03, 0.0149, 25.5, 0.5, 2.0); }

ModalSolution default_solution() {
    ModalSolution phi(0.5);
    phi.add(1, 1, 1.0, 0.0).add(2, 2, 0.5, 0.3);
    return phi;
}

}  // namespace

TEST(Residual, ZeroSolution) {
    const auto p = default_params();
    const ModalSolution phi(0.5);
    const auto rep = conjugation_residual(phi, p.domain().zeta(), p.k_cutoff(), p.weight(), p.T, ResidualGrid{64, 4, 32, 0.25});
    EXPECT_EQ(rep.residual_norm, 0.0);
    EXPECT_EQ(rep.reference_norm, 0.0);
}

TEST(Residual, DegenerateCellTouched) {
    const auto p = default_params();
    const auto phi = default_solution();
    expect_code(ErrorCode::DegenerateCellTouched,
                [&] { conjugation_residual(phi, std::nullopt, std::nullopt, p.weight(), p.T, ResidualGrid{8, 4, 8, 0.0}); });
    expect_code(ErrorCode::DegenerateCellTouched,
                [&] { conjugation_residual(phi, std::nullopt, std::nullopt, p.weight(), p.T, ResidualGrid{8, 8, 8, 0.05}); });
}

TEST(Residual, WithoutCutoffsIsPdeResidual) {
    auto p = default_params();
    auto w = p.weight();
    w.s = 0.0;
    const auto phi = default_solution();
    // with zeta = k = 1 the source vanishes, so the residual is the discretization error of the exact solution
    const auto a = conjugation_residual(phi, std::nullopt, std::nullopt, w, 2.0, ResidualGrid{32, 16, 32, 0.25});
    const auto b = conjugation_residual(phi, std::nullopt, std::nullopt, w, 2.0, ResidualGrid{64, 32, 64, 0.25});
    EXPECT_EQ(a.reference_norm, 0.0);
    EXPECT_NEAR(std::log2(a.residual_norm / b.residual_norm), 2.0, 0.1);
}

TEST(Residual, SecondOrderWithCutoffs) {
    const auto p = default_params();
    const auto study = conjugation_convergence(default_solution(), p.domain().zeta(), p.k_cutoff(), p.weight(), p.T,
                                               ResidualGrid{1280, 8, 128, 0.25}, 2);
    ASSERT_EQ(study.orders.size(), 1u);
    EXPECT_NEAR(study.orders[0], 2.0, 0.1);
    EXPECT_GT(study.levels[0].reference_norm, 0.0);
    EXPECT_LT(study.levels[1].relative, study.levels[0].relative);
}

TEST(Integrals, ZeroSolutionGivesZero) {
    const auto c = carleman_component_integrals(ModalSolution(0.5), default_params());
    EXPECT_EQ(c.lhs_gradient.value, 0.0);
    EXPECT_EQ(c.lhs_zero.value, 0.0);
    EXPECT_EQ(c.trace.value, 0.0);
    EXPECT_EQ(c.interior.value, 0.0);
    EXPECT_EQ(c.commutator.value, 0.0);
    EXPECT_EQ(c.c_hat, 0.0);
}

TEST(Integrals, StableUnderRefinement) {
    const auto p = default_params();
    const auto phi = default_solution();
    const IntegralResolution base{};
    const auto a = carleman_component_integrals(phi, p, base);
    const auto b = carleman_component_integrals(phi, p, base.doubled());
    auto rel = [](const ScaledIntegral& x, const ScaledIntegral& y) {
        EXPECT_EQ(x.log_scale, y.log_scale);
        return std::abs(x.value - y.value) / std::abs(y.value);
    };
    EXPECT_LT(rel(a.lhs_gradient, b.lhs_gradient), 5e-3);
    EXPECT_LT(rel(a.lhs_zero, b.lhs_zero), 5e-3);
    EXPECT_LT(rel(a.trace, b.trace), 5e-3);
    EXPECT_LT(rel(a.interior, b.interior), 5e-3);
    EXPECT_LT(rel(a.commutator, b.commutator), 5e-3);
    EXPECT_GT(a.c_hat, 0.0);
    EXPECT_NEAR(std::log(a.c_hat), a.log_c_hat, 1e-12);
}

TEST(Integrals, TraceMatchesDirectQuadrature) {
    // s lambda int sigma (d_r phi)^2 e^{2 s sigma} over (d0, 1-d0) x (0, T) at r = 1, by a plain midpoint sum
    const auto p = default_params();
    const auto phi = default_solution();
    const auto c = carleman_component_integrals(phi, p);
    const Weight o{p.alpha, p.beta, p.t0, p.lambda};
    const int nth = 800, nt = 4000;
    double sum = 0.0;
    for (int l = 0; l < nt; ++l) {
        const double t = p.T * (l + 0.5) / nt;
        for (int i = 0; i < nth; ++i) {
            const double th = p.delta0 + (1.0 - 2.0 * p.delta0) * (i + 0.5) / nth;
            const double dr = phi.eval(th, 1.0, t).flux;  // r^alpha phi_r = phi_r at r = 1
            const double sg = o.sigma(th, 1.0, t);
            sum += sg * dr * dr * std::exp(2.0 * p.s * sg - c.trace.log_scale);
        }
    }
    sum *= p.s * p.lambda * p.T / nt * (1.0 - 2.0 * p.delta0) / nth;
    EXPECT_NEAR(c.trace.value, sum, 1e-5 * sum);
}

TEST(Integrals, ScanIsBoundedInS) {
    const auto p = default_params();
    const auto scan = carleman_s_scan(default_solution(), p, {2.0, 4.0, 8.0, 16.0, 32.0, 64.0});
    ASSERT_EQ(scan.rows.size(), 6u);
    EXPECT_TRUE(scan.bounded);
    EXPECT_LT(scan.log_last_over_first, 0.0);
    for (const auto& r : scan.rows) EXPECT_TRUE(std::isfinite(r.log_c_hat));
    expect_code(ErrorCode::InsufficientData, [&] { carleman_s_scan(default_solution(), p, {4.0, 2.0}); });
    expect_code(ErrorCode::InsufficientData, [&] { carleman_s_scan(default_solution(), p, {4.0}); });
}
