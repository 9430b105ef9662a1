#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rumordyn/errors.hpp"
#include "rumordyn/search_series.hpp"

namespace rumordyn {

// Rumor-driven search volume model: y_t = e^{a t + b} + c, where a < 0 is the
// attenuation coefficient, e^b the outbreak-day rumor volume, and c the
// rumor-unrelated background. (a, b) come from log-linear least squares at a
// given bias; the bias comes from the mean residual of the fitted curve. The
// fit alternates the two until they agree.

enum class FitStatus { ok, no_decay };

inline const char* fit_status_name(FitStatus s) {
    return s == FitStatus::ok ? "ok" : "no_decay";
}

struct FitResult {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    int iterations = 0;
    double rmse = 0.0;     // log-space RMS residual over the points used
    int window_days = 0;   // days in the fitted window (after any day-0 shift)
    FitStatus status = FitStatus::ok;
    int day0_shift = 0;    // days dropped so the window starts at its peak
    bool stabilized = false; // bias loop oscillated; bisection safeguard engaged
};

struct FitConfig {
    int max_iterations = 100;
    double c_rel_tol = 1e-12; // bracket width tolerance, relative to c scale
    std::size_t min_points = 3;
    bool shift_to_peak = true;
};

// Closed-form OLS of ln(y_t - c) against day index t. Exact minimizer of the
// log-space squared error for fixed bias.
inline std::pair<double, double> ls_step(const SearchSeries& window, double c) {
    if (window.size() < 2)
        raise(Errc::window_out_of_range, "ls_step needs at least 2 points");
    for (double y : window.frequencies)
        if (y <= c)
            raise(Errc::non_positive_residual,
                  "frequency " + std::to_string(y) + " <= bias " + std::to_string(c));
    double st = 0.0, sz = 0.0;
    const std::size_t n = window.size();
    std::vector<double> z(n);
    for (std::size_t t = 0; t < n; ++t) {
        z[t] = std::log(window.frequencies[t] - c);
        st += double(t);
        sz += z[t];
    }
    const double tm = st / double(n), zm = sz / double(n);
    double stt = 0.0, stz = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double dt = double(t) - tm;
        stt += dt * dt;
        stz += dt * (z[t] - zm);
    }
    const double a = stz / stt;
    return {a, zm - a * tm};
}

// Geometric sum of the fitted rumor-driven volume over days 0..n.
inline double total_intensity(double a, double b, long n) {
    if (a == 0.0) raise(Errc::invalid_params, "total_intensity requires a != 0");
    return std::exp(b) * (1.0 - std::exp(a * double(n + 1))) / (1.0 - std::exp(a));
}

// Infinite-horizon intensity bounds from the empirical attenuation range
// [-1.45, -0.26]: total volume is ~1.31 to ~4.37 times the peak-day volume.
inline std::pair<double, double> intensity_bounds(double y0_tilde) {
    if (!(y0_tilde > 0.0)) raise(Errc::invalid_params, "peak-day volume must be > 0");
    return {y0_tilde / (1.0 - std::exp(-1.45)), y0_tilde / (1.0 - std::exp(-0.26))};
}

// Mean residual between observations and the fitted curve, floored at zero.
// The fitted-curve sum uses the closed geometric form.
inline double update_bias(const SearchSeries& window, double a, double b) {
    if (window.empty()) raise(Errc::empty_window, "update_bias on empty window");
    const long n = long(window.size()) - 1;
    double sum_y = 0.0;
    for (double y : window.frequencies) sum_y += y;
    const double fitted_sum =
        (a == 0.0) ? std::exp(b) * double(n + 1) : total_intensity(a, b, n);
    return std::max(0.0, (sum_y - fitted_sum) / double(n + 1));
}

namespace detail {

// OLS over the points still above the bias; keeps original day indices.
// Returns false when fewer than min_points survive.
inline bool ls_masked(const std::vector<double>& ys, double c, std::size_t min_points,
                      double& a, double& b) {
    double st = 0.0, sz = 0.0;
    std::size_t m = 0;
    for (std::size_t t = 0; t < ys.size(); ++t) {
        if (ys[t] <= c) continue;
        st += double(t);
        sz += std::log(ys[t] - c);
        ++m;
    }
    if (m < min_points || m < 2) return false;
    const double tm = st / double(m), zm = sz / double(m);
    double stt = 0.0, stz = 0.0;
    for (std::size_t t = 0; t < ys.size(); ++t) {
        if (ys[t] <= c) continue;
        const double dt = double(t) - tm;
        stt += dt * dt;
        stz += dt * (std::log(ys[t] - c) - zm);
    }
    if (stt == 0.0) return false;
    a = stz / stt;
    b = zm - a * tm;
    return true;
}

inline double eq9_target(const std::vector<double>& ys, double a, double b) {
    double sum_y = 0.0;
    for (double y : ys) sum_y += y;
    const long n = long(ys.size()) - 1;
    const double fitted_sum = (a == 0.0)
                                  ? std::exp(b) * double(n + 1)
                                  : std::exp(b) * (1.0 - std::exp(a * double(n + 1))) /
                                        (1.0 - std::exp(a));
    return std::max(0.0, (sum_y - fitted_sum) / double(n + 1));
}

} // namespace detail

// Iterate the log-linear step and the bias update until they agree on c.
//
// The plain alternation is only locally convergent: for steep decay riding on
// a large background the bias fixed point repels it. The loop therefore
// tracks the consistency gap G(c) = bias_update(ls_step(c)) - c, which
// brackets the fixed point inside [0, min(y)), and falls back to bisection
// whenever the plain update leaves the bracket or stalls.
inline FitResult fit_exponential(const SearchSeries& window, const FitConfig& cfg = {}) {
    if (window.size() < cfg.min_points)
        raise(Errc::window_out_of_range, "fit needs at least " +
                                             std::to_string(cfg.min_points) + " points, got " +
                                             std::to_string(window.size()));

    // Rumors peak on day 0 by assumption; re-anchor there when they do not.
    // A shift that would leave too few points (a still-growing window) is
    // skipped so the fit can come back flagged as no_decay instead of failing.
    std::size_t shift = 0;
    if (cfg.shift_to_peak) {
        const std::size_t argmax =
            std::size_t(std::max_element(window.frequencies.begin(),
                                         window.frequencies.end()) -
                        window.frequencies.begin());
        if (window.size() - argmax >= cfg.min_points) shift = argmax;
    }
    std::vector<double> ys(window.frequencies.begin() + long(shift),
                           window.frequencies.end());

    const double ymax = *std::max_element(ys.begin(), ys.end());
    const double ymin = *std::min_element(ys.begin(), ys.end());
    if (ymax == ymin) raise(Errc::degenerate_series, "constant window");
    if (std::size_t(std::count_if(ys.begin(), ys.end(), [](double y) { return y > 0.0; })) <
        cfg.min_points)
        raise(Errc::zero_traffic, "fewer than " + std::to_string(cfg.min_points) +
                                      " non-zero frequencies in window");

    FitResult res;
    res.day0_shift = int(shift);
    res.window_days = int(ys.size());

    double a = 0.0, b = 0.0;
    int iters = 0;
    auto gap = [&](double c) -> double {
        ++iters;
        if (!detail::ls_masked(ys, c, cfg.min_points, a, b))
            raise(Errc::non_positive_residual,
                  "fewer than " + std::to_string(cfg.min_points) + " points above bias");
        return detail::eq9_target(ys, a, b) - c;
    };

    double c = 0.0;
    double lo = 0.0;
    double glo = gap(lo);
    if (glo <= 0.0) {
        c = 0.0; // bias update pinned at the floor: background is zero
    } else {
        double hi = ymin * (1.0 - 1e-9);
        double ghi = gap(hi);
        if (ghi >= 0.0) {
            // No bracket: the window does not look like decay on a background.
            // Run the damped plain alternation and keep whatever it settles on.
            res.stabilized = true;
            c = 0.9 * ymin;
            while (iters < cfg.max_iterations) {
                const double g = gap(c);
                const double cn = std::clamp(c + g, 0.0, hi);
                if (std::abs(cn - c) < 1e-9 * std::max(1.0, c)) {
                    c = cn;
                    break;
                }
                c = cn;
            }
        } else {
            // Illinois false position on G over [lo, hi].
            int side = 0;
            while (iters < cfg.max_iterations &&
                   (hi - lo) > cfg.c_rel_tol * std::max(1.0, hi)) {
                double cn = (ghi != glo) ? (lo * ghi - hi * glo) / (ghi - glo)
                                         : 0.5 * (lo + hi);
                if (!(cn > lo && cn < hi)) {
                    cn = 0.5 * (lo + hi);
                    res.stabilized = true;
                }
                const double g = gap(cn);
                if (g == 0.0) {
                    lo = hi = cn;
                    break;
                }
                if (g > 0.0) {
                    if (side == 1) ghi *= 0.5;
                    lo = cn;
                    glo = g;
                    side = 1;
                } else {
                    if (side == -1) glo *= 0.5;
                    hi = cn;
                    ghi = g;
                    side = -1;
                }
            }
            c = (ghi != glo) ? (lo * ghi - hi * glo) / (ghi - glo) : 0.5 * (lo + hi);
            c = std::clamp(c, lo, hi);
        }
    }

    if (!detail::ls_masked(ys, c, cfg.min_points, a, b))
        raise(Errc::non_positive_residual, "fewer than 3 points above converged bias");

    double sse = 0.0;
    std::size_t used = 0;
    for (std::size_t t = 0; t < ys.size(); ++t) {
        if (ys[t] <= c) continue;
        const double r = std::log(ys[t] - c) - (a * double(t) + b);
        sse += r * r;
        ++used;
    }

    res.a = a;
    res.b = b;
    res.c = c;
    res.iterations = std::max(iters, 1);
    res.rmse = std::sqrt(sse / double(used));
    res.status = (a < 0.0) ? FitStatus::ok : FitStatus::no_decay;
    return res;
}

inline nlohmann::json fit_result_json(const FitResult& r) {
    return nlohmann::json{
        {"a", r.a},
        {"b", r.b},
        {"c", r.c},
        {"iterations", r.iterations},
        {"rmse", r.rmse},
        {"window_days", r.window_days},
        {"status", fit_status_name(r.status)},
        {"day0_shift", r.day0_shift},
    };
}

} // namespace rumordyn
