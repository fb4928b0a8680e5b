#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "odernn/data.hpp"
#include "odernn/models.hpp"
#include "odernn/training.hpp"

namespace odernn {

inline constexpr const char* kVersion = "odernn 0.1.0";

inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "simple-rnn") return ModelKind::kSimpleRnn;
    if (s == "odernn") return ModelKind::kOdeRnn;
    if (s == "combined-time") return ModelKind::kCombinedTime;
    throw ConfigError("unknown model '" + s + "' (expected simple-rnn, odernn or combined-time)");
}

inline EvolverMode parse_evolver_mode(const std::string& s) {
    if (s == "fixed-dt") return EvolverMode::kFixedDt;
    if (s == "adaptive-fixed") return EvolverMode::kAdaptiveFixed;
    if (s == "adaptive-geometric") return EvolverMode::kAdaptiveGeometric;
    throw ConfigError("unknown evolver mode '" + s +
                      "' (expected fixed-dt, adaptive-fixed or adaptive-geometric)");
}

/// Complete description of one benchmark run. Everything needed to reproduce
/// the reported numbers is recorded here and echoed into the report.
struct ExperimentConfig {
    std::string dataset = "sine";  // "sine" or "file:PATH"
    double rounding = 0.1;
    int num_sequences = 10000;
    int points = 50;
    std::string model = "odernn";
    std::string mode = "fixed-dt";
    double step_size = 0.1;
    int num_steps = 5;
    double s0 = 0.001;
    double growth = 1.5;
    int hidden = 10;
    std::optional<double> lr;  // default: 0.01 for combined-time, 0.001 otherwise
    int batch_size = 50;
    int min_epochs = 50;
    int max_epochs = 1000;
    int patience = 10;
    std::uint64_t seed = 0;
    std::string out;

    ModelKind model_kind() const { return parse_model_kind(model); }

    double resolved_lr() const {
        if (lr.has_value()) return *lr;
        return model_kind() == ModelKind::kCombinedTime ? 0.01 : 0.001;
    }

    EvolverConfig evolver_config() const {
        EvolverConfig e;
        e.mode = parse_evolver_mode(mode);
        e.step_size = step_size;
        e.num_steps = num_steps;
        e.initial_step = s0;
        e.growth = growth;
        return e;
    }

    bool from_file() const { return dataset.rfind("file:", 0) == 0; }
    std::string file_path() const { return dataset.substr(5); }

    void validate() const {
        ModelKind kind = model_kind();
        if (kind == ModelKind::kOdeRnn) evolver_config().validate();
        if (kind == ModelKind::kCombinedTime && !(step_size > 0.0)) {
            throw ConfigError("combined-time: step size must be > 0");
        }
        if (!from_file() && dataset != "sine") {
            throw ConfigError("dataset must be 'sine' or 'file:PATH', got '" + dataset + "'");
        }
        if (hidden < 1) throw ConfigError("hidden size must be >= 1");
    }
};

struct RunReport {
    ExperimentConfig config;
    std::string version = kVersion;
    bool diverged = false;
    double test_mse = std::numeric_limits<double>::quiet_NaN();
    int total_epochs = 0;
    int best_epoch = 0;
    double best_val = std::numeric_limits<double>::quiet_NaN();
    double wall_mean = 0.0;  // seconds per epoch, first epoch excluded
    double wall_sd = 0.0;    // sample standard deviation over the same epochs
    std::vector<EpochRecord> epochs;
};

/// Mean and sample standard deviation of wall time per epoch, excluding the
/// first epoch. With fewer than two usable epochs both are zero.
inline void wall_time_aggregates(const std::vector<EpochRecord>& epochs, double& mean,
                                 double& sd) {
    mean = 0.0;
    sd = 0.0;
    if (epochs.size() < 2) return;
    const std::size_t n = epochs.size() - 1;
    double sum = 0.0;
    for (std::size_t i = 1; i < epochs.size(); ++i) sum += epochs[i].wall_seconds;
    mean = sum / static_cast<double>(n);
    if (n < 2) return;
    double acc = 0.0;
    for (std::size_t i = 1; i < epochs.size(); ++i) {
        const double d = epochs[i].wall_seconds - mean;
        acc += d * d;
    }
    sd = std::sqrt(acc / static_cast<double>(n - 1));
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = nlohmann::json{{"dataset", c.dataset},
                       {"rounding", c.rounding},
                       {"num_sequences", c.num_sequences},
                       {"points", c.points},
                       {"model", c.model},
                       {"mode", c.mode},
                       {"step_size", c.step_size},
                       {"num_steps", c.num_steps},
                       {"s0", c.s0},
                       {"growth", c.growth},
                       {"hidden", c.hidden},
                       {"lr", c.resolved_lr()},
                       {"batch_size", c.batch_size},
                       {"min_epochs", c.min_epochs},
                       {"max_epochs", c.max_epochs},
                       {"patience", c.patience},
                       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    j.at("dataset").get_to(c.dataset);
    j.at("rounding").get_to(c.rounding);
    j.at("num_sequences").get_to(c.num_sequences);
    j.at("points").get_to(c.points);
    j.at("model").get_to(c.model);
    j.at("mode").get_to(c.mode);
    j.at("step_size").get_to(c.step_size);
    j.at("num_steps").get_to(c.num_steps);
    j.at("s0").get_to(c.s0);
    j.at("growth").get_to(c.growth);
    j.at("hidden").get_to(c.hidden);
    c.lr = j.at("lr").get<double>();
    j.at("batch_size").get_to(c.batch_size);
    j.at("min_epochs").get_to(c.min_epochs);
    j.at("max_epochs").get_to(c.max_epochs);
    j.at("patience").get_to(c.patience);
    j.at("seed").get_to(c.seed);
}

/// Serializes a report as line-delimited JSON: one run record followed by one
/// record per epoch. Pass include_timing=false to obtain the run's
/// deterministic content only (wall-clock fields stripped).
inline std::string report_to_jsonl(const RunReport& r, bool include_timing = true) {
    std::ostringstream out;
    nlohmann::json head{{"type", "run"},
                        {"version", r.version},
                        {"config", r.config},
                        {"diverged", r.diverged},
                        {"test_mse", r.test_mse},
                        {"total_epochs", r.total_epochs},
                        {"best_epoch", r.best_epoch},
                        {"best_val", r.best_val}};
    if (include_timing) {
        head["wall_mean"] = r.wall_mean;
        head["wall_sd"] = r.wall_sd;
    }
    out << head.dump() << '\n';
    for (const EpochRecord& e : r.epochs) {
        nlohmann::json rec{{"type", "epoch"},
                           {"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"val_loss", e.val_loss}};
        if (include_timing) rec["wall_seconds"] = e.wall_seconds;
        out << rec.dump() << '\n';
    }
    return out.str();
}

inline void write_report(const RunReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open report path '" + path + "' for writing");
    }
    out << report_to_jsonl(r);
    if (!out) {
        throw DataError("write failed for report '" + path + "'");
    }
}

inline RunReport read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open report file '" + path + "'");
    }
    RunReport r;
    std::string line;
    std::size_t line_no = 0;
    bool have_head = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        // NaN round-trips as JSON null (e.g. the test MSE of a diverged run).
        auto as_double = [](const nlohmann::json& v) {
            return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
        };
        const std::string type = j.value("type", "");
        try {
            if (type == "run") {
                r.version = j.at("version").get<std::string>();
                r.config = j.at("config").get<ExperimentConfig>();
                r.diverged = j.at("diverged").get<bool>();
                r.test_mse = as_double(j.at("test_mse"));
                r.total_epochs = j.at("total_epochs").get<int>();
                r.best_epoch = j.at("best_epoch").get<int>();
                r.best_val = as_double(j.at("best_val"));
                r.wall_mean = j.value("wall_mean", 0.0);
                r.wall_sd = j.value("wall_sd", 0.0);
                have_head = true;
            } else if (type == "epoch") {
                EpochRecord e;
                e.epoch = j.at("epoch").get<int>();
                e.train_loss = as_double(j.at("train_loss"));
                e.val_loss = as_double(j.at("val_loss"));
                e.wall_seconds = j.value("wall_seconds", 0.0);
                r.epochs.push_back(e);
            } else {
                throw ParseError(path + ":" + std::to_string(line_no) + ": unknown record type '" +
                                 type + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_head) {
        throw ParseError(path + ": missing run record");
    }
    return r;
}

/// Runs one full experiment: build or load the dataset, split, train, collect
/// wall-time aggregates, and (when configured) write the report file.
inline RunReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    std::vector<IrregularSeries> data;
    double grid = 0.0;
    if (cfg.from_file()) {
        data = read_dataset(cfg.file_path());
    } else {
        SineDatasetConfig ds;
        ds.num_sequences = cfg.num_sequences;
        ds.points_per_sequence = cfg.points;
        ds.rounding_grid = cfg.rounding;
        ds.seed = cfg.seed;
        data = generate_sine_dataset(ds);
        grid = cfg.rounding;
    }
    if (data.empty()) {
        throw DataError("dataset is empty");
    }
    const int d_x = static_cast<int>(data.front().feature_width());

    DatasetSplit split = split_dataset(static_cast<int>(data.size()), Rng::derive(cfg.seed, 1));
    Model model = make_model(cfg.model_kind(), d_x, d_x, cfg.hidden, cfg.evolver_config(),
                             cfg.step_size, Rng::derive(cfg.seed, 2));

    TrainConfig tc;
    tc.learning_rate = cfg.resolved_lr();
    tc.batch_size = cfg.batch_size;
    tc.min_epochs = cfg.min_epochs;
    tc.max_epochs = cfg.max_epochs;
    tc.patience = cfg.patience;
    tc.seed = Rng::derive(cfg.seed, 3);

    TrainResult tr = train_model(model, data, split, tc, grid);

    RunReport report;
    report.config = cfg;
    report.diverged = tr.diverged;
    report.test_mse = tr.test_mse;
    report.total_epochs = static_cast<int>(tr.epochs.size());
    report.best_epoch = tr.best_epoch;
    report.best_val = tr.best_val;
    report.epochs = tr.epochs;
    wall_time_aggregates(report.epochs, report.wall_mean, report.wall_sd);

    if (!cfg.out.empty()) write_report(report, cfg.out);
    return report;
}

/// One line of the comparison summary.
struct CompareRow {
    std::string source;
    std::string model;
    std::string mode;
    double test_mse = 0.0;
    double wall_mean = 0.0;
    double wall_sd = 0.0;
    double speedup = 0.0;  // baseline wall_mean / this wall_mean
    int epochs = 0;
};

/// The first report is the baseline for the speedup column.
inline std::vector<CompareRow> compare_reports(const std::vector<RunReport>& reports,
                                               const std::vector<std::string>& labels) {
    if (reports.size() < 2) {
        throw ConfigError("compare: need at least 2 reports");
    }
    const double base = reports.front().wall_mean;
    std::vector<CompareRow> rows;
    rows.reserve(reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const RunReport& r = reports[i];
        CompareRow row;
        row.source = i < labels.size() ? labels[i] : ("report " + std::to_string(i));
        row.model = r.config.model;
        row.mode = r.config.model == "odernn" ? r.config.mode : "-";
        row.test_mse = r.test_mse;
        row.wall_mean = r.wall_mean;
        row.wall_sd = r.wall_sd;
        row.speedup = r.wall_mean > 0.0 ? base / r.wall_mean : 0.0;
        row.epochs = r.total_epochs;
        rows.push_back(row);
    }
    return rows;
}

namespace detail {
inline std::string fmt(double v, const char* spec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}
}  // namespace detail

/// Both renderers format numbers through the same helpers, so the console
/// table and the CSV carry identical values.
inline std::string render_compare_csv(const std::vector<CompareRow>& rows) {
    std::ostringstream out;
    out << "source,model,mode,test_mse,wall_mean_s,wall_sd_s,speedup_vs_baseline,epochs\n";
    for (const CompareRow& r : rows) {
        out << r.source << ',' << r.model << ',' << r.mode << ','
            << detail::fmt(r.test_mse, "%.8g") << ',' << detail::fmt(r.wall_mean, "%.6f") << ','
            << detail::fmt(r.wall_sd, "%.6f") << ',' << detail::fmt(r.speedup, "%.2f") << ','
            << r.epochs << '\n';
    }
    return out.str();
}

inline std::string render_compare_table(const std::vector<CompareRow>& rows) {
    std::ostringstream out;
    out << "model            mode               test_mse      wall/epoch (s)    speedup  epochs\n";
    for (const CompareRow& r : rows) {
        char line[256];
        std::snprintf(line, sizeof(line), "%-16s %-18s %-13s %s+/-%s  %7s  %6d\n", r.model.c_str(),
                      r.mode.c_str(), detail::fmt(r.test_mse, "%.8g").c_str(),
                      detail::fmt(r.wall_mean, "%.6f").c_str(),
                      detail::fmt(r.wall_sd, "%.6f").c_str(),
                      detail::fmt(r.speedup, "%.2f").c_str(), r.epochs);
        out << line;
    }
    return out.str();
}

}  // namespace odernn
