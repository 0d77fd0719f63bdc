// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "degenlab/carleman_lab.hpp"
#include "degenlab/hardy_lab.hpp"
#include "degenlab/observability.hpp"
#include "degenlab/params.hpp"
#include "degenlab/radial_spectrum.hpp"
#include "degenlab/wave_simulator.hpp"

#include "radial_oracles.hpp"

using namespace degenlab;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... xs) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, xs...);
    return buf;
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

// closed forms: lowest eigenvalue of -v'' on (0, |ln delta|), mixed or Dirichlet, inverted
double mixed_exact(double delta) {
    const double L = -std::log(delta);
    return 4.0 * L * L / (kPi * kPi);
}
double dirichlet_exact(double delta) { return 0.25 * mixed_exact(delta); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome critical_mixed() {
    Outcome o{true, ""};
    for (double d : {std::exp(-kPi), 0.01}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = critical_truncated_constant(d, CriticalBoundary::Mixed, CriticalMethod::Direct, 4096);
        const double secs = seconds_since(t0), err = rel(r.numerical_best_constant, mixed_exact(d));
        o.pass = o.pass && err <= 5e-3 && secs < 10.0;
        o.detail += fmt("delta=%.5g C=%.7g exact=%.7g err=%.2e (%.2fs); ", d, r.numerical_best_constant, mixed_exact(d), err, secs);
    }
    return o;
}

Outcome critical_dirichlet() {
    Outcome o{true, ""};
    for (double d : {std::exp(-kPi), 0.01}) {
        const auto q = critical_truncated_constant(d, CriticalBoundary::Dirichlet, CriticalMethod::Direct, 4096);
        const auto m = critical_truncated_constant(d, CriticalBoundary::Mixed, CriticalMethod::Direct, 4096);
        const double err = rel(q.numerical_best_constant, dirichlet_exact(d));
        const double ratio = m.numerical_best_constant / q.numerical_best_constant;
        o.pass = o.pass && err <= 5e-3 && std::abs(ratio / 4.0 - 1.0) <= 1e-2;
        o.detail += fmt("delta=%.5g C=%.7g exact=%.7g err=%.2e ratio=%.6f; ", d, q.numerical_best_constant, dirichlet_exact(d),
                        err, ratio);
    }
    return o;
}

Outcome blowup_rate() {
    const auto [fit, reps] = blowup_rate_scan({1e-1, 1e-2, 1e-3, 1e-4}, CriticalBoundary::Mixed);
    return {std::abs(fit.slope - 2.0) <= 0.05, fmt("slope=%.5f r^2=%.8f", fit.slope, fit.r_squared)};
}

Outcome subcritical_hardy() {
    Outcome o{true, ""};
    std::mt19937_64 rng(424242);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;
    const auto mesh = build_graded_mesh(64, 3.0);
    int violations = 0;
    for (int i = 1; i <= 9; ++i) {
        const double alpha = 0.1 * i;
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<double> u(mesh.nodes.size(), 0.0);
            if (trial % 3 == 0) {
                for (std::size_t j = 1; j < u.size(); ++j) u[j] = normal(rng);
            } else if (trial % 3 == 1) {
                for (int m = 1; m <= 8; ++m) {
                    const double c = normal(rng) / m;
                    for (std::size_t j = 1; j < u.size(); ++j) u[j] += c * std::sin((m - 0.5) * kPi * mesh.nodes[j]);
                }
            } else {
                // just above the critical power r^{(1-alpha)/2}
                const double e = 0.5 * (1.0 - alpha) + 0.01 + 0.5 * unit(rng);
                for (std::size_t j = 1; j < u.size(); ++j) u[j] = std::pow(mesh.nodes[j], e);
            }
            if (!subcritical_hardy_check(alpha, mesh, u).holds) ++violations;
        }
        const double bound = 4.0 / ((1.0 - alpha) * (1.0 - alpha));
        double prev = 0.0;
        bool monotone = true, below = true;
        for (int n : {512, 2048, 8192}) {
            const double c = best_subcritical_constant(alpha, build_graded_mesh(n, default_grading(alpha))).numerical_best_constant;
            below = below && c < bound * (1.0 + 1e-6);
            monotone = monotone && c > prev;
            prev = c;
        }
        o.pass = o.pass && below && monotone;
        o.detail += fmt("a=%.1f C/bound=%.6f%s; ", alpha, prev / bound, below && monotone ? "" : " (not monotone below)");
    }
    o.pass = o.pass && violations == 0;
    o.detail = fmt("violations=%d/9000; ", violations) + o.detail;
    return o;
}

Outcome eigensolver_oracle() {
    Outcome o{true, ""};
    const auto flat = build_radial_basis(0.0, 5, 2048, 1.0);
    double worst = 0.0;
    for (int k = 1; k <= 5; ++k) worst = std::max(worst, rel(flat.pairs[k - 1].rho, std::pow(k * kPi, 2)));
    const auto half = build_radial_basis(0.5, 1, 2048);
    const double shooting = oracle::shooting_eigenvalue(0.5, 1), err = rel(half.pairs[0].rho, shooting);
    o.pass = worst <= 1e-4 && err <= 5e-6;
    o.detail = fmt("alpha=0 max rel err k<=5: %.2e; alpha=0.5 rho1=%.9g shooting=%.9g err=%.2e", worst, half.pairs[0].rho,
                   shooting, err);
    return o;
}

Outcome elliptic_identity() {
    const auto basis = build_radial_basis(0.5, 4, 8192);
    double worst = 0.0;
    for (double mu : {kPi * kPi, 4.0 * kPi * kPi, 25.0 * kPi * kPi})
        for (const auto& c : std::vector<std::vector<double>>{{1.0, 1.0}, {0.3, -1.2, 0.0, 0.7}, {0.5, 0.5, 0.5, 0.5}})
            worst = std::max(worst, elliptic_identity_residual(basis, mu, c).relative_residual);
    return {worst <= 1e-6, fmt("max relative residual=%.2e", worst)};
}

Outcome energy_conservation() {
    auto basis = std::make_shared<const RadialBasis>(build_radial_basis(0.5, 8, 1024));
    double worst = 0.0;
    for (int member = 0; member < 5; ++member) {
        const auto s = random_modal_data(basis, 8, 8, 7, member);
        worst = std::max(worst, energy_series(s, 100.0, 1000).max_relative_drift());
    }
    return {worst <= 1e-12, fmt("max relative drift=%.2e over 1000 samples", worst)};
}

Outcome conjugation_identity() {
    const auto p = validate_carleman_params(0.5, 0.03, 0.0149, 25.5, 0.5, 2.0);
    ModalSolution phi(0.5);
    phi.add(1, 1, 1.0, 0.0).add(2, 2, 0.5, 0.3);
    const auto study = conjugation_convergence(phi, p.domain().zeta(), p.k_cutoff(), p.weight(), p.T,
                                               ResidualGrid{1280, 8, 128, 0.25}, 3);
    bool ok = !study.orders.empty();
    std::string orders;
    for (double q : study.orders) {
        ok = ok && std::abs(q - 2.0) <= 0.1;
        orders += fmt("%.3f ", q);
    }
    const double finest = study.levels.back().relative;
    return {ok && finest <= 1e-3, "orders=" + orders + fmt("finest relative residual=%.2e", finest)};
}

Outcome high_mode_obstruction() {
    const auto domain = DomainSpec::make(0.01);
    const double beta = 0.004;
    const auto scan = high_mode_obstruction_scan({8, 16, 32, 64}, domain, beta, default_observation_time(domain.delta0, beta));
    return {scan.slope >= 1.9 && scan.slope <= 2.1 && scan.remedy_spread <= 10.0,
            fmt("slope=%.4f remedy max/min=%.4f", scan.slope, scan.remedy_spread)};
}

Outcome hidden_trace() {
    const auto e = hidden_trace_ratio_ensemble(42, 100, 16, 16, default_observation_time(0.01, 0.004));
    return {e.max_increase <= 0.05 && e.base.degenerate == 0,
            fmt("max base=%.6g doubled=%.6g increase=%.3f%%", e.base.max, e.doubled.max, 100.0 * e.max_increase)};
}

Outcome parameter_gate() {
    // 4 (delta0, beta) pairs, two per branch of the max, times 25 offsets around the boundary
    const std::vector<std::pair<double, double>> cases{{0.01, 0.004}, {0.02, 0.002}, {0.005, 0.0024}, {0.03, 0.012}};
    const std::vector<double> offsets{-0.5, -0.1, -1e-2, -1e-3, -1e-4, -1e-6, -1e-9, -1e-12, -1e-15, -2.2e-16, 0.0,
                                      1e-15, 1e-12, 1e-9, 1e-6, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0};
    int checked = 0, mismatched = 0;
    for (const auto& [delta0, beta] : cases) {
        const double boundary = std::max(4.0 / std::sqrt(delta0), std::sqrt(8.0 / beta));
        for (double off : offsets) {
            const double T = boundary * (1.0 + off);
            const bool expect = T > boundary;
            bool accepted = false, wrong_reason = false;
            try {
                validate_carleman_params(0.5, delta0, beta, T, 1.0, 2.0);
                accepted = true;
            } catch (const Error& e) {
                wrong_reason = e.code() != ErrorCode::TimeTooShort;
            }
            ++checked;
            if (accepted != expect || wrong_reason) ++mismatched;
        }
    }
    return {checked == 100 && mismatched == 0, fmt("points=%d mismatches=%d", checked, mismatched)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"critical mixed constant", critical_mixed},
        {"critical Dirichlet constant", critical_dirichlet},
        {"blow-up rate", blowup_rate},
        {"subcritical Hardy", subcritical_hardy},
        {"eigensolver oracle", eigensolver_oracle},
        {"elliptic identity", elliptic_identity},
        {"energy conservation", energy_conservation},
        {"conjugation identity", conjugation_identity},
        {"high-mode obstruction", high_mode_obstruction},
        {"hidden trace boundedness", hidden_trace},
        {"parameter gate", parameter_gate},
    };
    int failures = 0, index = 0;
    for (const auto& [name, run] : criteria) {
        ++index;
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
