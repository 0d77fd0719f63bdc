#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "config.hpp"
#include "report.hpp"

#include "degenlab/carleman_lab.hpp"
#include "degenlab/hardy_lab.hpp"
#include "degenlab/observability.hpp"
#include "degenlab/params.hpp"
#include "degenlab/radial_spectrum.hpp"
#include "degenlab/wave_simulator.hpp"

namespace degenlab::cli {

namespace detail {

inline int positive_int(const json& p, const std::string& key) {
    const long long v = p.at(key).get<long long>();
    if (v < 1) throw ConfigError(key, "must be a positive integer");
    return static_cast<int>(v);
}

inline std::vector<double> numbers(const json& p, const std::string& key) { return p.at(key).get<std::vector<double>>(); }

inline CriticalBoundary parse_bc(const std::string& s) {
    if (s == "mixed") return CriticalBoundary::Mixed;
    if (s == "dirichlet") return CriticalBoundary::Dirichlet;
    throw ConfigError("bc", "expected 'mixed' or 'dirichlet', got '" + s + "'");
}

inline CriticalMethod parse_method(const std::string& s) {
    if (s == "direct") return CriticalMethod::Direct;
    if (s == "log") return CriticalMethod::LogTransform;
    throw ConfigError("method", "expected 'direct' or 'log', got '" + s + "'");
}

inline json hardy_json(const HardyReport& r) {
    return {{"alpha", r.alpha},       {"critical", r.critical},   {"delta", r.delta},
            {"C_num", r.numerical_best_constant}, {"C_lumped", r.lumped_constant},
            {"C_exact", r.reference}, {"ratio", r.ratio},         {"rel_error", r.relative_error},
            {"n", r.cells},           {"grading", r.grading},     {"bc", r.bc},
            {"method", r.method}};
}

}  // namespace detail

inline Artifacts run_spectrum(const RunConfig& rc) {
    const auto& p = rc.params;
    const int n = detail::positive_int(p, "n"), k_max = detail::positive_int(p, "k_max");
    const auto basis = build_radial_basis(p.at("alpha").get<double>(), k_max, n, p.at("grading").get<double>());
    Artifacts a;
    const int mesh_n = basis.mesh().cells();
    const double grading = basis.mesh().grading, alpha = p.at("alpha").get<double>();
    CsvTable t{"spectrum", {"k", "rho", "flux_at_1", "weighted_energy", "mesh_N", "grading", "alpha"}, {}};
    json rows = json::array();
    for (const auto& e : basis.pairs) {
        t.add(e.index, e.rho, e.flux_at_1, e.weighted_energy, mesh_n, grading, alpha);
        rows.push_back({{"k", e.index}, {"rho", e.rho}, {"flux_at_1", e.flux_at_1}, {"weighted_energy", e.weighted_energy}});
    }
    a.summary = {{"eigenpairs", rows}, {"grading", basis.mesh().grading}};
    a.tables.push_back(std::move(t));
    return a;
}

inline Artifacts run_simulate(const RunConfig& rc) {
    const auto& p = rc.params;
    const double alpha = p.at("alpha").get<double>(), T = p.at("T").get<double>();
    const int n_max = detail::positive_int(p, "n_max"), k_max = detail::positive_int(p, "k_max");
    const int samples = detail::positive_int(p, "samples");
    if (!(T > 0.0)) throw ConfigError("T", "must be positive");
    auto basis = std::make_shared<const RadialBasis>(build_radial_basis(alpha, k_max, detail::positive_int(p, "n")));
    ModalCoefficients data;
    const std::string datum = p.at("datum").get<std::string>();
    if (datum == "mode") {
        const int mn = detail::positive_int(p, "mode_n"), mk = detail::positive_int(p, "mode_k");
        if (mn > n_max) throw ConfigError("mode_n", "exceeds n_max");
        if (mk > k_max) throw ConfigError("mode_k", "exceeds k_max");
        data = make_modal_state(basis, n_max, k_max);
        data.a[data.index(mn, mk)] = 1.0;
    } else if (datum == "random") {
        data = random_modal_data(basis, n_max, k_max, rc.seed, 0);
    } else {
        throw ConfigError("datum", "expected 'mode' or 'random', got '" + datum + "'");
    }
    const auto domain = DomainSpec::make(p.at("delta0").get<double>());
    const auto series = energy_series(data, T, samples);
    Artifacts a;
    CsvTable t{"simulate", {"t", "E", "kinetic", "potential", "full_trace", "restricted_trace"}, {}};
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        const double ti = series.times[i];
        const double full = boundary_trace_norm(data, ti, false, domain.delta0).value;
        const double part = boundary_trace_norm(data, ti, true, domain.delta0).value;
        t.add(ti, series.E[i], series.kinetic[i], series.potential[i], full, part);
    }
    const auto tr = trace_report(data, domain, T);
    a.summary = {{"energy0", energy(data)},
                 {"max_relative_drift", series.max_relative_drift()},
                 {"full_trace", tr.full_trace_norm_sq},
                 {"restricted_trace", tr.restricted_trace_norm_sq},
                 {"interior", tr.interior_norm_sq}};
    a.tables.push_back(std::move(t));
    return a;
}

inline Artifacts run_hardy(const RunConfig& rc) {
    const auto& p = rc.params;
    Artifacts a;
    if (p.at("critical").get<bool>()) {
        const auto bc = detail::parse_bc(p.at("bc").get<std::string>());
        const auto method = detail::parse_method(p.at("method").get<std::string>());
        const int n = detail::positive_int(p, "n");
        const auto rep = critical_truncated_constant(p.at("delta").get<double>(), bc, method, n);
        const auto [fit, scan] = blowup_rate_scan(detail::numbers(p, "deltas"), bc, method, n);
        CsvTable t{"hardy_critical_scan", {"delta", "C_numerical", "C_exact", "relative_error", "bc", "N"}, {}};
        for (const auto& r : scan)
            t.add(r.delta, r.numerical_best_constant, r.reference, r.relative_error, r.bc, r.cells);
        a.summary = detail::hardy_json(rep);
        a.summary["blowup_fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
        a.tables.push_back(std::move(t));
        return a;
    }
    const double alpha = p.at("alpha").get<double>();
    CsvTable t{"hardy_subcritical", {"N", "C_numerical", "C_lumped", "bound", "ratio"}, {}};
    json reports = json::array();
    for (const auto& nv : p.at("n_list")) {
        const long long n = nv.get<long long>();
        if (n < 2) throw ConfigError("n_list", "mesh sizes must be at least 2");
        const auto mesh = build_graded_mesh(static_cast<int>(n), default_grading(alpha));
        const auto rep = best_subcritical_constant(alpha, mesh);
        t.add(static_cast<int>(n), rep.numerical_best_constant, rep.lumped_constant, rep.reference, rep.ratio);
        reports.push_back(detail::hardy_json(rep));
    }
    a.summary = {{"alpha", alpha}, {"bound", subcritical_hardy_bound(alpha)}, {"refinement", reports}};
    a.tables.push_back(std::move(t));
    return a;
}

inline ModalSolution solution_from(const json& p) {
    const auto m = detail::numbers(p, "modes");
    if (m.size() % 4 != 0) throw ConfigError("modes", "expected quadruples n, k, a, b");
    ModalSolution phi(p.at("alpha").get<double>());
    for (std::size_t i = 0; i < m.size(); i += 4) {
        const int n = static_cast<int>(m[i]), k = static_cast<int>(m[i + 1]);
        if (n != m[i] || k != m[i + 1] || n < 1 || k < 1 || k > 12)
            throw ConfigError("modes", "n must be a positive integer and k an integer in 1..12");
        phi.add(n, k, m[i + 2], m[i + 3]);
    }
    return phi;
}

inline Artifacts run_carleman_check(const RunConfig& rc) {
    const auto& p = rc.params;
    const auto params = validate_carleman_params(p.at("alpha").get<double>(), p.at("delta0").get<double>(),
                                                 p.at("beta").get<double>(), p.at("T").get<double>(),
                                                 p.at("lambda").get<double>(), p.at("s").get<double>());
    const auto phi = solution_from(p);
    const ResidualGrid grid{detail::positive_int(p, "theta_cells"), detail::positive_int(p, "r_cells"),
                            detail::positive_int(p, "time_cells"), p.at("r_floor").get<double>()};
    const auto study = conjugation_convergence(phi, params.domain().zeta(), params.k_cutoff(), params.weight(),
                                               params.T, grid, detail::positive_int(p, "levels"));
    const auto c = carleman_component_integrals(phi, params);
    const auto scan = carleman_s_scan(phi, params, detail::numbers(p, "s_values"));

    Artifacts a;
    CsvTable levels{"carleman_residual", {"h_theta", "h_r", "h_t", "residual", "reference", "relative"}, {}};
    for (const auto& l : study.levels)
        levels.add(l.h_theta, l.h_r, l.h_t, l.residual_norm, l.reference_norm, l.relative);
    CsvTable s_table{"carleman_s_scan", {"s", "lambda", "c_hat", "log_c_hat"}, {}};
    for (const auto& r : scan.rows) s_table.add(r.s, r.lambda, r.c_hat, r.log_c_hat);
    auto scaled = [](const ScaledIntegral& x) { return json{{"value", x.value}, {"log_scale", x.log_scale}, {"log10", x.log10()}}; };
    a.summary = {{"epsilon", params.epsilon},
                 {"orders", study.orders},
                 {"finest_relative_residual", study.levels.back().relative},
                 {"components",
                  {{"lhs_gradient", scaled(c.lhs_gradient)},
                   {"lhs_zero", scaled(c.lhs_zero)},
                   {"trace", scaled(c.trace)},
                   {"interior", scaled(c.interior)},
                   {"commutator", scaled(c.commutator)},
                   {"c_hat", c.c_hat},
                   {"log_c_hat", c.log_c_hat}}},
                 {"s_scan_bounded", scan.bounded}};
    a.tables.push_back(std::move(levels));
    a.tables.push_back(std::move(s_table));
    return a;
}

inline Artifacts run_observability(const RunConfig& rc) {
    const auto& p = rc.params;
    const double alpha = p.at("alpha").get<double>(), beta = p.at("beta").get<double>();
    const auto domain = DomainSpec::make(p.at("delta0").get<double>());
    double T = p.at("T").get<double>();
    if (T == 0.0) T = default_observation_time(domain.delta0, beta);
    std::vector<int> ns;
    for (const auto& v : p.at("n_values")) ns.push_back(static_cast<int>(v.get<long long>()));
    const auto scan = high_mode_obstruction_scan(ns, domain, beta, T, alpha);
    const auto ens = hidden_trace_ratio_ensemble(rc.seed, detail::positive_int(p, "members"),
                                                 detail::positive_int(p, "n_max"), detail::positive_int(p, "k_max"), T, alpha);
    Artifacts a;
    CsvTable st{"observability_scan", {"n", "energy0", "full_trace", "pure_trace_ratio", "trace_restricted", "interior", "ratio"}, {}};
    for (const auto& r : scan.rows)
        st.add(r.n, r.energy0, r.full_trace, r.pure_trace_ratio, r.with_interior.trace_restricted, r.with_interior.interior,
               r.with_interior.ratio);
    CsvTable et{"observability_ensemble", {"member", "ratio_base", "ratio_doubled"}, {}};
    for (std::size_t m = 0; m < ens.base.ratios.size(); ++m)
        et.add(static_cast<int>(m), ens.base.ratios[m], ens.doubled.ratios[m]);
    auto stats = [](const TraceRatioStats& s) {
        return json{{"n_max", s.n_max}, {"k_max", s.k_max}, {"max", s.max}, {"mean", s.mean}, {"min", s.min}, {"degenerate", s.degenerate}};
    };
    a.summary = {{"T", T},
                 {"threshold", observation_time_threshold(domain.delta0, beta)},
                 {"obstruction_slope", scan.slope},
                 {"remedy_spread", scan.remedy_spread},
                 {"ensemble_base", stats(ens.base)},
                 {"ensemble_doubled", stats(ens.doubled)},
                 {"max_increase", ens.max_increase}};
    a.tables.push_back(std::move(st));
    a.tables.push_back(std::move(et));
    return a;
}

inline Artifacts run_validate_params(const RunConfig& rc) {
    const auto& p = rc.params;
    const auto c = validate_carleman_params(p.at("alpha").get<double>(), p.at("delta0").get<double>(),
                                            p.at("beta").get<double>(), p.at("T").get<double>(),
                                            p.at("lambda").get<double>(), p.at("s").get<double>());
    Artifacts a;
    a.summary = {{"alpha", c.alpha},         {"delta0", c.delta0}, {"beta", c.beta},   {"T", c.T},
                 {"t0", c.t0},               {"lambda", c.lambda}, {"s", c.s},         {"threshold", c.threshold},
                 {"gamma", c.gamma},         {"gamma_hat", c.gamma_hat}, {"epsilon", c.epsilon},
                 {"A0", c.A0},               {"A1", c.A1}};
    return a;
}

inline Artifacts run(const RunConfig& rc) {
    if (rc.subcommand == "spectrum") return run_spectrum(rc);
    if (rc.subcommand == "simulate") return run_simulate(rc);
    if (rc.subcommand == "hardy") return run_hardy(rc);
    if (rc.subcommand == "carleman-check") return run_carleman_check(rc);
    if (rc.subcommand == "observability") return run_observability(rc);
    if (rc.subcommand == "validate-params") return run_validate_params(rc);
    throw ConfigError("subcommand", "unknown subcommand '" + rc.subcommand + "'");
}

}  // namespace degenlab::cli
