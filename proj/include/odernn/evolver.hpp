#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "odernn/dynamics.hpp"
#include "odernn/tape.hpp"

namespace odernn {

enum class EvolverMode { kFixedDt, kAdaptiveFixed, kAdaptiveGeometric };

inline const char* to_string(EvolverMode m) {
    switch (m) {
        case EvolverMode::kFixedDt: return "fixed-dt";
        case EvolverMode::kAdaptiveFixed: return "adaptive-fixed";
        case EvolverMode::kAdaptiveGeometric: return "adaptive-geometric";
    }
    return "?";
}

/// Mode selector plus the parameters of the selected mode. Only the fields of
/// the active mode are read; validate() checks exactly those.
struct EvolverConfig {
    EvolverMode mode = EvolverMode::kFixedDt;
    double step_size = 0.1;     // fixed-dt
    int num_steps = 5;          // adaptive-fixed
    double initial_step = 0.001;  // adaptive-geometric
    double growth = 1.5;          // adaptive-geometric, strictly > 1

    void validate() const {
        switch (mode) {
            case EvolverMode::kFixedDt:
                if (!(step_size > 0.0)) {
                    throw ConfigError("fixed-dt: step size must be > 0, got " +
                                      std::to_string(step_size));
                }
                break;
            case EvolverMode::kAdaptiveFixed:
                if (num_steps < 1) {
                    throw ConfigError("adaptive-fixed: num_steps must be >= 1, got " +
                                      std::to_string(num_steps));
                }
                break;
            case EvolverMode::kAdaptiveGeometric:
                if (!(initial_step > 0.0)) {
                    throw ConfigError("adaptive-geometric: initial step must be > 0, got " +
                                      std::to_string(initial_step));
                }
                if (!(growth > 1.0)) {
                    throw ConfigError("adaptive-geometric: growth factor must be > 1, got " +
                                      std::to_string(growth));
                }
                break;
        }
    }
};

/// Per-call instrumentation: dynamics evaluations, loop length, and for every
/// row the total evolved time and the number of steps with nonzero effect.
struct EvolveStats {
    long long f_evals = 0;
    long long loop_steps = 0;
    std::vector<double> applied_time;
    std::vector<long long> effective_updates;

    /// Called at the start of every evolve; one EvolveStats describes one call.
    void reset(std::size_t b) {
        f_evals = 0;
        loop_steps = 0;
        applied_time.assign(b, 0.0);
        effective_updates.assign(b, 0);
    }
};

namespace detail {

inline void check_deltas(std::span<const double> dt, std::size_t batch) {
    if (dt.size() != batch) {
        throw DimensionError("evolver: " + std::to_string(dt.size()) + " time deltas for batch of " +
                             std::to_string(batch) + " rows");
    }
    for (double d : dt) {
        if (!(d >= 0.0)) {
            throw DataError("evolver: negative time delta " + std::to_string(d));
        }
    }
}

// Number of forward-Euler steps of size s needed to cover span dt; the small
// slack absorbs quotients like 3.0000000000000004 that arise from rounded
// time grids.
inline long long step_count_for(double dt, double s) {
    if (dt <= 0.0) return 0;
    long long n = static_cast<long long>(std::ceil(dt / s - 1e-9));
    return std::max<long long>(n, 1);
}

// One masked Euler update h + coeff o f(h); coeff carries both the per-row
// step size and the 0/1 done-mask folded together.
inline Var masked_euler_step(Tape& t, Var h, const DynamicsFn& f,
                             const std::vector<double>& coeff, EvolveStats* stats) {
    Var fv = f(t, h);
    Var c = t.leaf(Matrix::column_vector(coeff));
    if (stats != nullptr) {
        ++stats->f_evals;
        ++stats->loop_steps;
        for (std::size_t i = 0; i < coeff.size(); ++i) {
            stats->applied_time[i] += coeff[i];
            if (coeff[i] != 0.0) ++stats->effective_updates[i];
        }
    }
    return t.add(h, t.scale_rows(fv, c));
}

}  // namespace detail

/// Fixed-dt mode: a constant scalar step size; the number of steps varies
/// across the mini-batch. Rows that have reached their target time are masked
/// out of further updates, and each row's final step is clamped so the total
/// evolved time equals its delta exactly.
inline Var evolve_fixed_dt(Tape& t, Var h, std::span<const double> dt, const DynamicsFn& f,
                           double step_size, EvolveStats* stats = nullptr) {
    if (!(step_size > 0.0)) {
        throw ConfigError("fixed-dt: step size must be > 0, got " + std::to_string(step_size));
    }
    const std::size_t batch = t.value(h).rows;
    detail::check_deltas(dt, batch);
    if (stats != nullptr) stats->reset(batch);

    std::vector<long long> steps(batch);
    long long max_steps = 0;
    for (std::size_t i = 0; i < batch; ++i) {
        steps[i] = detail::step_count_for(dt[i], step_size);
        max_steps = std::max(max_steps, steps[i]);
    }
    std::vector<double> coeff(batch);
    for (long long j = 0; j < max_steps; ++j) {
        for (std::size_t i = 0; i < batch; ++i) {
            if (j >= steps[i]) {
                coeff[i] = 0.0;
            } else if (j == steps[i] - 1) {
                coeff[i] = dt[i] - static_cast<double>(steps[i] - 1) * step_size;
            } else {
                coeff[i] = step_size;
            }
        }
        h = detail::masked_euler_step(t, h, f, coeff, stats);
    }
    return h;
}

/// Adaptive-fixed mode: exactly num_steps Euler steps; the step size varies
/// across the mini-batch as dt_i / num_steps. The loop length is independent
/// of the time values.
inline Var evolve_adaptive_fixed(Tape& t, Var h, std::span<const double> dt, const DynamicsFn& f,
                                 int num_steps, EvolveStats* stats = nullptr) {
    if (num_steps < 1) {
        throw ConfigError("adaptive-fixed: num_steps must be >= 1, got " +
                          std::to_string(num_steps));
    }
    const std::size_t batch = t.value(h).rows;
    detail::check_deltas(dt, batch);
    if (stats != nullptr) stats->reset(batch);

    std::vector<double> coeff(batch);
    for (std::size_t i = 0; i < batch; ++i) coeff[i] = dt[i] / static_cast<double>(num_steps);
    for (int j = 0; j < num_steps; ++j) {
        h = detail::masked_euler_step(t, h, f, coeff, stats);
    }
    return h;
}

/// Smallest N such that a geometric series of steps s0, s0*r, ... covers
/// dt_max:  s0 * (r^N - 1) / (r - 1) >= dt_max.
///
/// With the defaults s0 = 0.001, r = 1.5 this gives 5 steps to reach 0.01,
/// 16 to reach 1, and 39 to reach 10000 — logarithmic in the time span.
inline int geometric_step_count(double dt_max, double s0, double r) {
    if (!(dt_max > 0.0) || !(s0 > 0.0)) {
        throw ConfigError("geometric_step_count: times and steps must be positive");
    }
    if (!(r > 1.0)) {
        throw ConfigError("geometric_step_count: growth factor must be > 1, got " +
                          std::to_string(r));
    }
    if (dt_max <= s0) return 1;
    auto series = [&](long long n) {
        return s0 * (std::pow(r, static_cast<double>(n)) - 1.0) / (r - 1.0);
    };
    auto n = static_cast<long long>(std::ceil(std::log1p(dt_max * (r - 1.0) / s0) / std::log(r)));
    n = std::max<long long>(n, 1);
    while (n > 1 && series(n - 1) >= dt_max) --n;
    while (series(n) < dt_max) ++n;
    return static_cast<int>(n);
}

/// Adaptive-geometric mode: steps start at s0 and grow by factor r each
/// iteration; a step that would overshoot a row's target is clamped to land on
/// it exactly, and finished rows are masked. The loop length is set by the
/// largest delta in the batch.
inline Var evolve_adaptive_geometric(Tape& t, Var h, std::span<const double> dt,
                                     const DynamicsFn& f, double s0, double r,
                                     EvolveStats* stats = nullptr) {
    if (!(s0 > 0.0)) {
        throw ConfigError("adaptive-geometric: initial step must be > 0, got " +
                          std::to_string(s0));
    }
    if (!(r > 1.0)) {
        throw ConfigError("adaptive-geometric: growth factor must be > 1, got " +
                          std::to_string(r));
    }
    const std::size_t batch = t.value(h).rows;
    detail::check_deltas(dt, batch);
    if (stats != nullptr) stats->reset(batch);

    const double dt_max = dt.empty() ? 0.0 : *std::max_element(dt.begin(), dt.end());
    if (dt_max <= 0.0) return h;

    const int total = geometric_step_count(dt_max, s0, r);
    std::vector<double> coeff(batch);
    double t_cur = 0.0;
    double step = s0;
    for (int j = 0; j < total; ++j) {
        for (std::size_t i = 0; i < batch; ++i) {
            coeff[i] = std::max(0.0, std::min(step, dt[i] - t_cur));
        }
        h = detail::masked_euler_step(t, h, f, coeff, stats);
        t_cur += step;
        step *= r;
    }
    return h;
}

/// Dispatch on the configured mode.
inline Var evolve(Tape& t, Var h, std::span<const double> dt, const DynamicsFn& f,
                  const EvolverConfig& cfg, EvolveStats* stats = nullptr) {
    cfg.validate();
    switch (cfg.mode) {
        case EvolverMode::kFixedDt:
            return evolve_fixed_dt(t, h, dt, f, cfg.step_size, stats);
        case EvolverMode::kAdaptiveFixed:
            return evolve_adaptive_fixed(t, h, dt, f, cfg.num_steps, stats);
        case EvolverMode::kAdaptiveGeometric:
            return evolve_adaptive_geometric(t, h, dt, f, cfg.initial_step, cfg.growth, stats);
    }
    throw ConfigError("unknown evolver mode");
}

}  // namespace odernn
