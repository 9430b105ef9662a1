#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "rumordyn/errors.hpp"

namespace rumordyn {

// Four-state rumor propagation model. Node states: susceptible (ignorant),
// infected (spreading the rumor), removed (indifferent), refuted (spreading
// corrections). All quantities are population densities, so s+i+r1+r2 == 1.

struct StateVector {
    double s = 1.0;
    double i = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;

    double sum() const { return s + i + r1 + r2; }

    void validate() const {
        for (double v : {s, i, r1, r2})
            if (!(v >= 0.0 && v <= 1.0))
                raise(Errc::invalid_params, "state density out of [0,1]");
        if (std::abs(sum() - 1.0) > 1e-9)
            raise(Errc::invalid_params, "state densities must sum to 1");
    }
};

struct Derivatives {
    double ds = 0.0;
    double di = 0.0;
    double dr1 = 0.0;
    double dr2 = 0.0;
};

struct ModelParams {
    double alpha = 0.6;   // susceptible -> removed on contact
    double beta = 0.3;    // susceptible -> infected on contact with a spreader
    double delta = 0.1;   // infected -> removed on contact with a refuter
    double epsilon = 0.2; // forgetting rate for spreaders of either kind
    double theta = 0.3;   // infected -> refuted on contact with a refuter
    double k_avg = 1.0;   // average network degree
    double i0 = 0.01;     // initial infected density
    long n_population = 10000; // reporting label only; the dynamics are density-based

    // Strict validation: out-of-range combinations are modeling errors, not
    // values to clamp. Messages name the violated constraint for the CLI.
    void validate() const {
        auto prob = [](double v, const char* name) {
            if (!(v >= 0.0 && v <= 1.0))
                raise(Errc::invalid_params, std::string(name) + " must be in [0,1]");
        };
        prob(alpha, "alpha");
        prob(beta, "beta");
        prob(delta, "delta");
        prob(epsilon, "epsilon");
        prob(theta, "theta");
        if (alpha + beta > 1.0) raise(Errc::invalid_params, "alpha + beta <= 1 violated");
        if (delta + theta > 1.0) raise(Errc::invalid_params, "delta + theta <= 1 violated");
        if (!(k_avg > 0.0)) raise(Errc::invalid_params, "k must be > 0");
        if (!(i0 >= 0.0 && i0 < 1.0)) raise(Errc::invalid_params, "i0 must be in [0,1)");
    }

    StateVector initial_state() const { return StateVector{1.0 - i0, i0, 0.0, 0.0}; }
};

// Mean-field equations of the four state densities. The susceptible outflow
// collapses to -k(I+R2)S because the three contact branches partition the
// contact probability.
inline Derivatives derivatives(const StateVector& x, const ModelParams& p) {
    const double k = p.k_avg;
    const double contact = k * (x.i + x.r2) * x.s;
    Derivatives d;
    d.ds = -contact;
    d.di = (p.beta * k * x.s - (p.delta + p.theta) * k * x.r2 - p.epsilon) * x.i;
    d.dr1 = p.alpha * contact + p.delta * k * x.i * x.r2 + p.epsilon * (x.i + x.r2);
    d.dr2 = k * x.s * ((1.0 - p.alpha - p.beta) * x.i + (1.0 - p.alpha) * x.r2) +
            p.theta * k * x.i * x.r2 - p.epsilon * x.r2;
    return d;
}

struct Trajectory {
    double dt = 0.01;
    std::vector<StateVector> states;
    std::vector<Derivatives> derivs;

    const StateVector& final_state() const { return states.back(); }
    // Ever-informed fraction; the terminal density reported for a run.
    double informed_fraction() const { return 1.0 - states.back().s; }
};

struct SimulateConfig {
    double dt = 0.01;
    double horizon = 100.0;
    bool early_stop = true;        // stop once spreaders have effectively died out
    double early_stop_eps = 1e-8;  // threshold on I + R2
};

namespace detail {

inline StateVector axpy(const StateVector& x, const Derivatives& d, double h) {
    return StateVector{x.s + h * d.ds, x.i + h * d.di, x.r1 + h * d.dr1, x.r2 + h * d.dr2};
}

inline void check_sane(const StateVector& x, double t) {
    const double lo = -1e-9, hi = 1.0 + 1e-9;
    bool bad = false;
    for (double v : {x.s, x.i, x.r1, x.r2})
        if (!std::isfinite(v) || v < lo || v > hi) bad = true;
    if (std::abs(x.sum() - 1.0) > 1e-9) bad = true;
    if (bad)
        raise(Errc::non_finite_state,
              "state left the simplex at t=" + std::to_string(t) + " (unstable dt?)");
}

} // namespace detail

// Classical fixed-step RK4 over the mean-field equations. States are checked
// against the simplex at every step, never renormalized.
inline Trajectory simulate(const ModelParams& params, const SimulateConfig& cfg = {}) {
    params.validate();
    if (!(cfg.dt > 0.0)) raise(Errc::invalid_params, "dt must be > 0");
    if (!(cfg.horizon >= cfg.dt)) raise(Errc::invalid_params, "horizon must be >= dt");

    const long n_steps = std::lround(cfg.horizon / cfg.dt);
    Trajectory traj;
    traj.dt = cfg.dt;
    traj.states.reserve(n_steps + 1);
    traj.derivs.reserve(n_steps + 1);

    StateVector x = params.initial_state();
    traj.states.push_back(x);
    traj.derivs.push_back(derivatives(x, params));

    for (long step = 0; step < n_steps; ++step) {
        const Derivatives k1 = traj.derivs.back();
        const Derivatives k2 = derivatives(detail::axpy(x, k1, cfg.dt / 2.0), params);
        const Derivatives k3 = derivatives(detail::axpy(x, k2, cfg.dt / 2.0), params);
        const Derivatives k4 = derivatives(detail::axpy(x, k3, cfg.dt), params);

        const double w = cfg.dt / 6.0;
        x = StateVector{x.s + w * (k1.ds + 2.0 * k2.ds + 2.0 * k3.ds + k4.ds),
                        x.i + w * (k1.di + 2.0 * k2.di + 2.0 * k3.di + k4.di),
                        x.r1 + w * (k1.dr1 + 2.0 * k2.dr1 + 2.0 * k3.dr1 + k4.dr1),
                        x.r2 + w * (k1.dr2 + 2.0 * k2.dr2 + 2.0 * k3.dr2 + k4.dr2)};
        detail::check_sane(x, (step + 1) * cfg.dt);
        traj.states.push_back(x);
        traj.derivs.push_back(derivatives(x, params));
        if (cfg.early_stop && x.i + x.r2 < cfg.early_stop_eps) break;
    }
    return traj;
}

// Rate of people newly reached by the rumor: k(I+R2)S == -S'(t), sampled per step.
inline std::vector<double> new_insider_rate(const Trajectory& traj) {
    std::vector<double> rate;
    rate.reserve(traj.derivs.size());
    for (const auto& d : traj.derivs) rate.push_back(-d.ds);
    return rate;
}

// Plot-ready export: one row per step, states and derivatives side by side.
inline std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t,s,i,r1,r2,ds,di,dr1,dr2\n";
    char buf[256];
    for (std::size_t idx = 0; idx < traj.states.size(); ++idx) {
        const auto& x = traj.states[idx];
        const auto& d = traj.derivs[idx];
        std::snprintf(buf, sizeof(buf),
                      "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                      idx * traj.dt, x.s, x.i, x.r1, x.r2, d.ds, d.di, d.dr1, d.dr2);
        out += buf;
    }
    return out;
}

} // namespace rumordyn
