#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "odernn/data.hpp"
#include "odernn/dynamics.hpp"
#include "odernn/evolver.hpp"
#include "odernn/gru.hpp"
#include "odernn/tape.hpp"

namespace odernn {

/// A padded mini-batch of irregular sequences prepared for the forecasting
/// task: the last point of every sequence is held out as the target, the
/// first N = length-1 points are the observations.
///
/// dt has N+1 columns per row: the jump from time 0 to the first observation,
/// the N-1 inter-observation gaps, and the final jump to the prediction time.
/// t carries the absolute times (observations plus prediction time); it equals
/// the per-row prefix sums of dt up to floating-point rounding.
///
/// keys are exact integer time identities used for cross-row uniqueness: grid
/// multiples when the data lives on a rounding grid, dense ranks of the exact
/// double times otherwise. Equal keys always mean bitwise-equal entries of t.
struct TimeSeriesBatch {
    std::size_t batch = 0;   // B
    std::size_t steps = 0;   // N, observations per row
    std::size_t d_x = 0;
    std::size_t d_y = 0;
    double grid = 0.0;       // 0 when times are not grid-aligned
    std::vector<Matrix> x;   // N matrices, B x d_x
    Matrix dt;               // B x (N+1)
    Matrix t;                // B x (N+1)
    std::vector<std::vector<long long>> keys;  // B x (N+1)
    Matrix y;                // B x d_y

    std::vector<double> dt_column(std::size_t j) const {
        std::vector<double> col(batch);
        for (std::size_t i = 0; i < batch; ++i) col[i] = dt(i, j);
        return col;
    }
};

/// Builds a batch from the selected series. All selected series must share
/// the same length (>= 2) and feature width. When `grid` > 0 every time must
/// be an exact multiple of it.
inline TimeSeriesBatch make_batch(const std::vector<IrregularSeries>& data,
                                  std::span<const int> idx, double grid) {
    if (idx.empty()) {
        throw DataError("make_batch: empty index list");
    }
    const IrregularSeries& first = data.at(static_cast<std::size_t>(idx.front()));
    const std::size_t len = first.length();
    const std::size_t d_x = first.feature_width();
    if (len < 2) {
        throw DataError("make_batch: sequences need at least 2 points (last one is the target)");
    }

    TimeSeriesBatch b;
    b.batch = idx.size();
    b.steps = len - 1;
    b.d_x = d_x;
    b.d_y = d_x;
    b.grid = grid;
    b.x.assign(b.steps, Matrix(b.batch, d_x));
    b.dt = Matrix(b.batch, len);
    b.t = Matrix(b.batch, len);
    b.keys.assign(b.batch, std::vector<long long>(len));
    b.y = Matrix(b.batch, d_x);

    for (std::size_t r = 0; r < b.batch; ++r) {
        const IrregularSeries& s = data.at(static_cast<std::size_t>(idx[r]));
        if (s.length() != len || s.feature_width() != d_x) {
            throw DataError("make_batch: sequences in one batch must share length and width (got " +
                            std::to_string(s.length()) + "x" + std::to_string(s.feature_width()) +
                            ", expected " + std::to_string(len) + "x" + std::to_string(d_x) + ")");
        }
        double prev = 0.0;
        for (std::size_t j = 0; j < len; ++j) {
            const double tj = s.times[j];
            if (!(tj >= 0.0)) {
                throw DataError("make_batch: times must be non-negative");
            }
            if (j > 0 && !(tj > prev)) {
                throw DataError("make_batch: times must be strictly increasing");
            }
            b.t(r, j) = tj;
            b.dt(r, j) = tj - prev;
            prev = tj;
            if (grid > 0.0) {
                const long long k = std::llround(tj / grid);
                if (static_cast<double>(k) * grid != tj) {
                    throw DataError("make_batch: time " + std::to_string(tj) +
                                    " is not a multiple of grid " + std::to_string(grid));
                }
                b.keys[r][j] = k;
            }
        }
        for (std::size_t j = 0; j + 1 < len; ++j) {
            for (std::size_t c = 0; c < d_x; ++c) b.x[j](r, c) = s.values[j][c];
        }
        for (std::size_t c = 0; c < d_x; ++c) b.y(r, c) = s.values[len - 1][c];
    }

    if (grid <= 0.0) {
        // Dense-rank the exact double times so uniqueness stays exact arithmetic.
        std::vector<double> all;
        all.reserve(b.batch * len);
        for (std::size_t r = 0; r < b.batch; ++r) {
            for (std::size_t j = 0; j < len; ++j) all.push_back(b.t(r, j));
        }
        std::sort(all.begin(), all.end());
        all.erase(std::unique(all.begin(), all.end()), all.end());
        for (std::size_t r = 0; r < b.batch; ++r) {
            for (std::size_t j = 0; j < len; ++j) {
                b.keys[r][j] = std::lower_bound(all.begin(), all.end(), b.t(r, j)) - all.begin();
            }
        }
    }
    return b;
}

/// Loop/instrumentation counters for one forward pass.
struct ForwardStats {
    int evolver_calls = 0;
    int outer_iterations = 0;
    long long euler_steps = 0;
    long long f_evals = 0;

    void absorb(const EvolveStats& ev) {
        euler_steps += ev.loop_steps;
        f_evals += ev.f_evals;
    }
};

struct ForwardOut {
    Var prediction;
    Var h_final;
};

/// Batch-efficient ODE-RNN: per input step, evolve every row over its own
/// time delta, then apply the cell to the whole batch; one final evolve over
/// the last jump before the prediction head. Exactly N+1 evolver calls.
inline ForwardOut odernn_forward(Tape& t, const GruCell& cell, const DynamicsNet& dynamics,
                                 const OutputNet& head, const TimeSeriesBatch& batch,
                                 const EvolverConfig& cfg, ForwardStats* stats = nullptr) {
    cfg.validate();
    DynamicsFn f = dynamics.fn();
    Var h = t.leaf(Matrix::zeros(batch.batch, static_cast<std::size_t>(cell.hidden_size)));
    EvolveStats ev;
    EvolveStats* evp = stats != nullptr ? &ev : nullptr;
    for (std::size_t j = 0; j < batch.steps; ++j) {
        h = evolve(t, h, batch.dt_column(j), f, cfg, evp);
        if (stats != nullptr) {
            ++stats->evolver_calls;
            ++stats->outer_iterations;
            stats->absorb(ev);
        }
        h = cell.step(t, h, t.leaf(batch.x[j]));
    }
    h = evolve(t, h, batch.dt_column(batch.steps), f, cfg, evp);
    if (stats != nullptr) {
        ++stats->evolver_calls;
        stats->absorb(ev);
    }
    return {head.apply(t, h), h};
}

/// Combined-unique-times baseline: iterates over the sorted union of every
/// row's times (observations and prediction times). Per unique time, rows not
/// yet past their own end are ODE-evolved across the segment with fixed-step
/// Euler (step clamped to the segment end), and the cell is applied through a
/// 0/1 row mask to exactly the rows observing at that time.
inline ForwardOut combined_time_forward(Tape& t, const GruCell& cell, const DynamicsNet& dynamics,
                                        const OutputNet& head, const TimeSeriesBatch& batch,
                                        double step_size, ForwardStats* stats = nullptr) {
    if (!(step_size > 0.0)) {
        throw ConfigError("combined-time: step size must be > 0, got " +
                          std::to_string(step_size));
    }
    const std::size_t B = batch.batch;
    const std::size_t N = batch.steps;
    DynamicsFn f = dynamics.fn();

    // Sorted union of (key, time) across the whole batch.
    std::vector<std::pair<long long, double>> ct;
    ct.reserve(B * (N + 1));
    for (std::size_t r = 0; r < B; ++r) {
        for (std::size_t j = 0; j <= N; ++j) ct.emplace_back(batch.keys[r][j], batch.t(r, j));
    }
    std::sort(ct.begin(), ct.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    ct.erase(std::unique(ct.begin(), ct.end(),
                         [](const auto& a, const auto& b) { return a.first == b.first; }),
             ct.end());

    Var h = t.leaf(Matrix::zeros(B, static_cast<std::size_t>(cell.hidden_size)));
    std::vector<std::size_t> cursor(B, 0);  // next unmatched observation per row
    std::vector<double> coeff(B);
    Matrix mask(B, 1);
    Matrix inv_mask(B, 1);
    double prev_time = 0.0;

    for (const auto& [key, time] : ct) {
        const double span = time - prev_time;
        if (span > 0.0) {
            const long long n = detail::step_count_for(span, step_size);
            for (long long j = 0; j < n; ++j) {
                const double step = (j == n - 1)
                                        ? span - static_cast<double>(n - 1) * step_size
                                        : step_size;
                for (std::size_t r = 0; r < B; ++r) {
                    // Evolve only rows whose own end time has not been passed.
                    coeff[r] = (batch.keys[r][N] >= key) ? step : 0.0;
                }
                Var fv = f(t, h);
                h = t.add(h, t.scale_rows(fv, t.leaf(Matrix::column_vector(coeff))));
                if (stats != nullptr) {
                    ++stats->euler_steps;
                    ++stats->f_evals;
                }
            }
        }

        // Cell update where an observation exists at this time.
        bool any = false;
        Matrix x_cur(B, batch.d_x);
        for (std::size_t r = 0; r < B; ++r) {
            if (cursor[r] < N && batch.keys[r][cursor[r]] == key) {
                mask(r, 0) = 1.0;
                inv_mask(r, 0) = 0.0;
                for (std::size_t c = 0; c < batch.d_x; ++c) {
                    x_cur(r, c) = batch.x[cursor[r]](r, c);
                }
                ++cursor[r];
                any = true;
            } else {
                mask(r, 0) = 0.0;
                inv_mask(r, 0) = 1.0;
                for (std::size_t c = 0; c < batch.d_x; ++c) x_cur(r, c) = 0.0;
            }
        }
        if (any) {
            Var updated = cell.step(t, h, t.leaf(x_cur));
            h = t.add(t.scale_rows(updated, t.leaf(mask)), t.scale_rows(h, t.leaf(inv_mask)));
        }
        if (stats != nullptr) ++stats->outer_iterations;
        prev_time = time;
    }
    return {head.apply(t, h), h};
}

/// Plain GRU baseline with the time delta appended to each input: one cell
/// step per observation on [x_j, dt_j]. The hidden state is never advanced to
/// the prediction time; the head reads it straight after the last observation.
inline ForwardOut simple_rnn_forward(Tape& t, const GruCell& cell, const OutputNet& head,
                                     const TimeSeriesBatch& batch, ForwardStats* stats = nullptr) {
    if (cell.input_size != static_cast<int>(batch.d_x) + 1) {
        throw DimensionError("simple-rnn: cell expects input width " +
                             std::to_string(cell.input_size) + ", batch provides " +
                             std::to_string(batch.d_x + 1));
    }
    const std::size_t B = batch.batch;
    Var h = t.leaf(Matrix::zeros(B, static_cast<std::size_t>(cell.hidden_size)));
    for (std::size_t j = 0; j < batch.steps; ++j) {
        Matrix xin(B, batch.d_x + 1);
        for (std::size_t r = 0; r < B; ++r) {
            for (std::size_t c = 0; c < batch.d_x; ++c) xin(r, c) = batch.x[j](r, c);
            xin(r, batch.d_x) = batch.dt(r, j);
        }
        h = cell.step(t, h, t.leaf(xin));
        if (stats != nullptr) ++stats->outer_iterations;
    }
    return {head.apply(t, h), h};
}

enum class ModelKind { kSimpleRnn, kOdeRnn, kCombinedTime };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::kSimpleRnn: return "simple-rnn";
        case ModelKind::kOdeRnn: return "odernn";
        case ModelKind::kCombinedTime: return "combined-time";
    }
    return "?";
}

/// One trainable model: kind, components and their parameter registry.
struct Model {
    ModelKind kind = ModelKind::kOdeRnn;
    int d_x = 1;
    int d_y = 1;
    int hidden = 10;
    EvolverConfig evolver;       // ODE-RNN only
    double combined_step = 0.1;  // combined-time only
    ParameterSet params;
    GruCell cell;
    DynamicsNet dynamics;
    OutputNet head;

    ForwardOut forward(Tape& t, const TimeSeriesBatch& batch, ForwardStats* stats = nullptr) const {
        switch (kind) {
            case ModelKind::kSimpleRnn:
                return simple_rnn_forward(t, cell, head, batch, stats);
            case ModelKind::kOdeRnn:
                return odernn_forward(t, cell, dynamics, head, batch, evolver, stats);
            case ModelKind::kCombinedTime:
                return combined_time_forward(t, cell, dynamics, head, batch, combined_step, stats);
        }
        throw ConfigError("unknown model kind");
    }
};

inline Model make_model(ModelKind kind, int d_x, int d_y, int hidden, const EvolverConfig& evolver,
                        double combined_step, std::uint64_t seed) {
    Model m;
    m.kind = kind;
    m.d_x = d_x;
    m.d_y = d_y;
    m.hidden = hidden;
    m.evolver = evolver;
    m.combined_step = combined_step;
    Rng rng(Rng::derive(seed, 0x30DE1ULL));
    const int cell_input = kind == ModelKind::kSimpleRnn ? d_x + 1 : d_x;
    m.cell = GruCell::create(m.params, "gru", cell_input, hidden, rng);
    if (kind != ModelKind::kSimpleRnn) {
        m.dynamics = DynamicsNet::create(m.params, "dynamics", hidden, rng);
    }
    m.head = OutputNet::create(m.params, "head", hidden, d_y, rng);
    return m;
}

}  // namespace odernn
