#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "odernn/data.hpp"
#include "odernn/models.hpp"
#include "odernn/tape.hpp"

namespace odernn {

/// Mean over all B*d entries of the squared prediction error.
inline Var mse_loss(Tape& t, Var pred, Var target) {
    {
        const Matrix& pv = t.value(pred);
        const Matrix& tv = t.value(target);
        if (!pv.same_shape(tv)) {
            throw DimensionError("mse: shape mismatch (" + pv.shape_str() + " vs " +
                                 tv.shape_str() + ")");
        }
    }
    const double n = static_cast<double>(t.value(pred).size());
    Var diff = t.sub(pred, target);
    return t.scale(t.sum(t.mul(diff, diff)), 1.0 / n);
}

inline Var mse_loss(Tape& t, Var pred, const Matrix& target) {
    return mse_loss(t, pred, t.leaf(target));
}

/// Adam with bias correction (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
class Adam {
public:
    explicit Adam(const ParameterSet& params) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const auto& p : params.items()) {
            m_.emplace_back(p->value.rows, p->value.cols);
            v_.emplace_back(p->value.rows, p->value.cols);
        }
    }

    void step(ParameterSet& params, double lr) {
        if (params.size() != m_.size()) {
            throw ConfigError("adam: parameter set changed size");
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            Parameter& p = params[k];
            if (!p.grad.all_finite()) {
                throw NumericError("adam: non-finite gradient for parameter '" + p.name + "'");
            }
            Matrix& m = m_[k];
            Matrix& v = v_[k];
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                const double g = p.grad.data[i];
                m.data[i] = beta1_ * m.data[i] + (1.0 - beta1_) * g;
                v.data[i] = beta2_ * v.data[i] + (1.0 - beta2_) * g * g;
                const double mhat = m.data[i] / bc1;
                const double vhat = v.data[i] / bc2;
                p.value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    long long steps_taken() const { return t_; }

private:
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    long long t_ = 0;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
};

struct TrainConfig {
    double learning_rate = 0.001;
    int batch_size = 50;
    int min_epochs = 50;
    int max_epochs = 1000;
    int patience = 10;
    std::uint64_t seed = 0;

    void validate() const {
        // lr 0 is legal: it freezes the model, which exercises early stopping.
        if (!(learning_rate >= 0.0)) throw ConfigError("train: learning rate must be >= 0");
        if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
        if (min_epochs < 1 || max_epochs < min_epochs) {
            throw ConfigError("train: need 1 <= min_epochs <= max_epochs");
        }
        if (patience < 1) throw ConfigError("train: patience must be >= 1");
    }
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double wall_seconds = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_val = std::numeric_limits<double>::infinity();
    double test_mse = std::numeric_limits<double>::quiet_NaN();
    bool diverged = false;
};

/// MSE of the model over the given index set, batched, forward only.
inline double evaluate_mse(const Model& model, const std::vector<IrregularSeries>& data,
                           std::span<const int> idx, int batch_size, double grid) {
    if (idx.empty()) {
        throw ConfigError("evaluate: empty index set");
    }
    double sse = 0.0;
    std::size_t count = 0;
    for (std::size_t off = 0; off < idx.size(); off += static_cast<std::size_t>(batch_size)) {
        const std::size_t len = std::min(static_cast<std::size_t>(batch_size), idx.size() - off);
        TimeSeriesBatch batch = make_batch(data, idx.subspan(off, len), grid);
        Tape tape;
        ForwardOut out = model.forward(tape, batch);
        const Matrix& pred = tape.value(out.prediction);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred.data[i] - batch.y.data[i];
            sse += d * d;
        }
        count += pred.size();
    }
    return sse / static_cast<double>(count);
}

/// Full training loop: shuffled mini-batches, Adam, per-epoch validation with
/// early stopping, best-parameter restoration, and per-epoch wall time over
/// the training pass only (validation excluded).
///
/// Stopping: after at least min_epochs, when `patience` epochs have passed
/// with no new validation best (counted from the later of the best epoch and
/// min_epochs), or at max_epochs. A non-finite loss aborts with the records
/// collected so far and the result flagged as diverged.
inline TrainResult train_model(Model& model, const std::vector<IrregularSeries>& data,
                               const DatasetSplit& split, const TrainConfig& cfg, double grid) {
    cfg.validate();
    if (split.train.empty() || split.val.empty() || split.test.empty()) {
        throw ConfigError("train: all of train/val/test must be non-empty");
    }

    Adam opt(model.params);
    Rng shuffle_rng(Rng::derive(cfg.seed, 0x5FF1EULL));
    TrainResult res;
    std::vector<Matrix> best_params;
    std::vector<int> order(split.train.begin(), split.train.end());

    const auto snapshot = [&] {
        best_params.clear();
        for (const auto& p : model.params.items()) best_params.push_back(p->value);
    };
    const auto restore = [&] {
        for (std::size_t i = 0; i < best_params.size(); ++i) {
            model.params[i].value = best_params[i];
        }
    };

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto tic = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);
        double sse = 0.0;
        std::size_t seen = 0;
        bool finite = true;
        for (std::size_t off = 0; off < order.size();
             off += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t len =
                std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - off);
            TimeSeriesBatch batch = make_batch(data, std::span<const int>(order).subspan(off, len),
                                               grid);
            Tape tape;
            ForwardOut out = model.forward(tape, batch);
            Var loss = mse_loss(tape, out.prediction, batch.y);
            const double lval = tape.scalar(loss);
            if (!std::isfinite(lval)) {
                finite = false;
                break;
            }
            sse += lval * static_cast<double>(len * batch.d_y);
            seen += len * batch.d_y;
            model.params.zero_grad();
            tape.backward(loss);
            try {
                opt.step(model.params, cfg.learning_rate);
            } catch (const NumericError&) {
                // Gradients overflowed even though the loss was still finite.
                finite = false;
                break;
            }
        }
        const auto toc = std::chrono::steady_clock::now();
        if (!finite) {
            res.diverged = true;
            break;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = sse / static_cast<double>(seen);
        rec.wall_seconds = std::chrono::duration<double>(toc - tic).count();
        rec.val_loss = evaluate_mse(model, data, split.val, cfg.batch_size, grid);
        if (!std::isfinite(rec.val_loss)) {
            res.diverged = true;
            break;
        }
        res.epochs.push_back(rec);

        if (rec.val_loss < res.best_val) {
            res.best_val = rec.val_loss;
            res.best_epoch = epoch;
            snapshot();
        }
        if (epoch >= cfg.min_epochs &&
            epoch - std::max(res.best_epoch, cfg.min_epochs) >= cfg.patience) {
            break;
        }
    }

    if (!best_params.empty()) restore();
    if (res.best_epoch > 0) {
        res.test_mse = evaluate_mse(model, data, split.test, cfg.batch_size, grid);
    }
    return res;
}

}  // namespace odernn
