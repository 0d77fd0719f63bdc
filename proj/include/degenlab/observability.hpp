#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <memory>
#include <random>
#include <thread>
#include <vector>

#include "degenlab/errors.hpp"
#include "degenlab/params.hpp"
#include "degenlab/radial_spectrum.hpp"
#include "degenlab/wave_simulator.hpp"

namespace degenlab {

/// Horizon used when none is given: ten percent past the observation threshold.
inline double default_observation_time(double delta0, double beta) {
    return 1.1 * observation_time_threshold(delta0, beta);
}

struct ObservabilityRecord {
    double energy0 = 0.0;
    double trace_restricted = 0.0;
    double interior = 0.0;
    double ratio = 0.0;  // energy0 / (trace_restricted + interior); 0 when degenerate
    bool degenerate = false;
};

/// E(0) against the restricted top trace plus the omega term, both over (0, T).
inline ObservabilityRecord observability_ratio(const ModalCoefficients& data, const DomainSpec& domain, double beta,
                                               double T) {
    const double threshold = observation_time_threshold(domain.delta0, beta);
    if (!(T > threshold))
        fail(ErrorCode::TimeTooShort,
             "T = " + std::to_string(T) + " does not exceed threshold " + std::to_string(threshold));
    ObservabilityRecord rec;
    rec.energy0 = energy(data);
    rec.trace_restricted = boundary_trace_norm(data, T, true, domain.delta0).value;
    rec.interior = interior_observation_norm(data, domain, T);
    const double den = rec.trace_restricted + rec.interior;
    rec.degenerate = !(den > 0.0) || !(rec.energy0 > 0.0);
    rec.ratio = rec.degenerate ? 0.0 : rec.energy0 / den;
    return rec;
}

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LogLogFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) fail(ErrorCode::InsufficientData, "fit needs matching samples");
    double mx = 0.0, my = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) fail(ErrorCode::NonPositiveInput, "log-log fit needs positive samples");
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y[i]) - my);
    }
    return {sxy / sxx, my - sxy / sxx * mx};
}

struct ObstructionRow {
    int n = 0;
    double omega = 0.0;
    double energy0 = 0.0;
    double full_trace = 0.0;
    double full_trace_closed_form = 0.0;
    double pure_trace_ratio = 0.0;  // energy0 / full_trace
    ObservabilityRecord with_interior;
};

struct ObstructionScan {
    std::vector<ObstructionRow> rows;
    double slope = 0.0;           // of ln(energy0 / full_trace) against ln n
    double remedy_spread = 0.0;   // max / min of the ratio with the omega term
    double T = 0.0;
};

/// Single modes R_1(r) sin(n pi theta) cos(w_n t): their energy grows like n^2 while the full
/// top trace stays bounded.
inline ObstructionScan high_mode_obstruction_scan(const std::vector<int>& n_values, const DomainSpec& domain,
                                                  double beta, double T, double alpha = 0.5, int cells = 2048) {
    if (n_values.size() < 4) fail(ErrorCode::InsufficientData, "obstruction scan needs at least four values of n");
    const auto [lo, hi] = std::minmax_element(n_values.begin(), n_values.end());
    if (*lo < 1 || *hi < 8 * *lo) fail(ErrorCode::InsufficientData, "n values must be positive and span a factor 8");
    auto basis = std::make_shared<const RadialBasis>(build_radial_basis(alpha, 1, cells));
    ObstructionScan out;
    out.T = T;
    std::vector<double> ns, ratios;
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (int n : n_values) {
        auto data = make_modal_state(basis, n, 1);
        data.a[data.index(n, 1)] = 1.0;
        ObstructionRow row;
        row.n = n;
        row.omega = data.omega[data.index(n, 1)];
        row.energy0 = energy(data);
        row.full_trace = boundary_trace_norm(data, T, false, domain.delta0).value;
        const double f = data.flux(1), w = row.omega;
        row.full_trace_closed_form = f * f * 0.5 * (T / 2.0 + std::sin(2.0 * w * T) / (4.0 * w));
        row.pure_trace_ratio = row.energy0 / row.full_trace;
        row.with_interior = observability_ratio(data, domain, beta, T);
        rmin = std::min(rmin, row.with_interior.ratio);
        rmax = std::max(rmax, row.with_interior.ratio);
        ns.push_back(n);
        ratios.push_back(row.pure_trace_ratio);
        out.rows.push_back(row);
    }
    out.slope = fit_log_log(ns, ratios).slope;
    out.remedy_spread = rmax / rmin;
    return out;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// one stream per (member, n, k), so a larger truncation extends the smaller one
inline std::uint64_t coefficient_seed(std::uint64_t seed, int member, int n, int k) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(member));
    h = splitmix64(h ^ static_cast<std::uint64_t>(n));
    return splitmix64(h ^ static_cast<std::uint64_t>(k));
}

}  // namespace detail

/// Damped random datum: a_{nk}, b_{nk} ~ N(0,1) / (n^2 + k^2).
inline ModalCoefficients random_modal_data(std::shared_ptr<const RadialBasis> basis, int n_max, int k_max,
                                           std::uint64_t seed, int member) {
    auto s = make_modal_state(std::move(basis), n_max, k_max);
    for (int n = 1; n <= n_max; ++n)
        for (int k = 1; k <= k_max; ++k) {
            std::mt19937_64 gen(detail::coefficient_seed(seed, member, n, k));
            std::normal_distribution<double> normal;
            const double damp = 1.0 / (n * n + k * k);
            s.a[s.index(n, k)] = normal(gen) * damp;
            s.b[s.index(n, k)] = normal(gen) * damp;
        }
    return s;
}

struct TraceRatioStats {
    int n_max = 0;
    int k_max = 0;
    std::vector<double> ratios;  // full top trace / data norm, per member
    double max = 0.0;
    double mean = 0.0;
    double min = 0.0;
    int degenerate = 0;
};

struct HiddenTraceEnsemble {
    TraceRatioStats base;
    TraceRatioStats doubled;
    double max_increase = 0.0;  // doubled.max / base.max - 1
    std::uint64_t seed = 0;
    double T = 0.0;
};

inline TraceRatioStats trace_ratio_stats(double alpha, int n_max, int k_max, std::uint64_t seed, int members, double T,
                                         int cells = 2048) {
    if (members < 1) fail(ErrorCode::InsufficientData, "ensemble needs at least one member");
    if (!(T > 0.0)) fail(ErrorCode::NonPositiveInput, "T must be positive");
    auto basis = std::make_shared<const RadialBasis>(build_radial_basis(alpha, k_max, cells));
    TraceRatioStats st;
    st.n_max = n_max;
    st.k_max = k_max;
    st.ratios.assign(members, 0.0);
    std::vector<char> bad(members, 0);
    const int workers = std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));
    std::vector<std::future<void>> jobs;
    for (int w = 0; w < workers; ++w)
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (int m = w; m < members; m += workers) {
                const auto data = random_modal_data(basis, n_max, k_max, seed, m);
                const double norm = data_norm_sq(data);
                if (!(norm > 0.0)) {
                    bad[m] = 1;
                    continue;
                }
                st.ratios[m] = boundary_trace_norm(data, T, false, 0.0).value / norm;
            }
        }));
    for (auto& j : jobs) j.get();
    st.min = std::numeric_limits<double>::infinity();
    int good = 0;
    for (int m = 0; m < members; ++m) {
        if (bad[m]) {
            ++st.degenerate;
            continue;
        }
        ++good;
        st.max = std::max(st.max, st.ratios[m]);
        st.min = std::min(st.min, st.ratios[m]);
        st.mean += st.ratios[m];
    }
    if (good == 0) fail(ErrorCode::InsufficientData, "every ensemble member is degenerate");
    st.mean /= good;
    return st;
}

/// Ensemble of damped random data at truncation (n_max, k_max) and at twice that.
inline HiddenTraceEnsemble hidden_trace_ratio_ensemble(std::uint64_t seed, int members, int n_max, int k_max, double T,
                                                       double alpha = 0.5, int cells = 2048) {
    HiddenTraceEnsemble e;
    e.seed = seed;
    e.T = T;
    e.base = trace_ratio_stats(alpha, n_max, k_max, seed, members, T, cells);
    e.doubled = trace_ratio_stats(alpha, 2 * n_max, 2 * k_max, seed, members, T, cells);
    e.max_increase = e.doubled.max / e.base.max - 1.0;
    return e;
}

}  // namespace degenlab
