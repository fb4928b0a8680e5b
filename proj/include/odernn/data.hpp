#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "odernn/errors.hpp"
#include "odernn/random.hpp"

namespace odernn {

/// Synthetic sine dataset: per sequence, `points_per_sequence` time points
/// sampled uniformly in [t_min, t_max] and rounded to the nearest multiple of
/// `rounding_grid` (duplicates resampled until the points are distinct).
/// Values are amplitude * sin(2*pi*f*(t - t0)) with f ~ U[freq_min, freq_max]
/// and t0 ~ N(offset_mean, offset_sd), evaluated at the un-rounded sample
/// time; the stored timestamp is the rounded one. Coarser grids therefore
/// carry more timestamp-quantization noise, which is what makes the rounding
/// setting control both the irregularity structure and the attainable error.
struct SineDatasetConfig {
    int num_sequences = 10000;
    int points_per_sequence = 50;
    double t_min = 0.0;
    double t_max = 5.0;
    double rounding_grid = 0.1;
    double amplitude = 1.0;
    double freq_min = 0.5;
    double freq_max = 1.0;
    double offset_mean = 1.0;
    double offset_sd = 0.1;
    std::uint64_t seed = 0;

    long long grid_slots() const {
        return static_cast<long long>(std::llround((t_max - t_min) / rounding_grid)) + 1;
    }

    void validate() const {
        if (!(rounding_grid > 0.0)) {
            throw ConfigError("sine dataset: rounding grid must be > 0");
        }
        if (!(t_min < t_max)) {
            throw ConfigError("sine dataset: time interval bounds must be ordered");
        }
        if (points_per_sequence < 2) {
            throw ConfigError("sine dataset: need at least 2 points per sequence");
        }
        if (num_sequences < 1) {
            throw ConfigError("sine dataset: need at least 1 sequence");
        }
        if (grid_slots() < points_per_sequence) {
            throw ConfigError("sine dataset: grid of " + std::to_string(grid_slots()) +
                              " slots cannot host " + std::to_string(points_per_sequence) +
                              " distinct points");
        }
    }
};

/// One irregular sequence: strictly increasing times and a feature vector per
/// time. `target` is an optional explicit label carried through file I/O.
struct IrregularSeries {
    std::vector<double> times;
    std::vector<std::vector<double>> values;
    std::vector<double> target;  // empty when absent

    std::size_t length() const { return times.size(); }
    std::size_t feature_width() const { return values.empty() ? 0 : values.front().size(); }
};

inline std::vector<IrregularSeries> generate_sine_dataset(const SineDatasetConfig& cfg) {
    cfg.validate();
    std::vector<IrregularSeries> out;
    out.reserve(static_cast<std::size_t>(cfg.num_sequences));
    const double two_pi = 2.0 * M_PI;
    for (int s = 0; s < cfg.num_sequences; ++s) {
        // Independent per-sequence stream, so generation order (or a parallel
        // generator) cannot change the result.
        Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(s)));
        const double freq = rng.uniform(cfg.freq_min, cfg.freq_max);
        const double offset = rng.normal(cfg.offset_mean, cfg.offset_sd);
        std::map<long long, double> points;  // rounded tick -> value at the true time
        while (points.size() < static_cast<std::size_t>(cfg.points_per_sequence)) {
            const double u = rng.uniform(cfg.t_min, cfg.t_max);
            const long long k = std::llround((u - cfg.t_min) / cfg.rounding_grid);
            points.emplace(k, cfg.amplitude * std::sin(two_pi * freq * (u - offset)));
        }

        IrregularSeries series;
        series.times.reserve(points.size());
        series.values.reserve(points.size());
        for (const auto& [k, value] : points) {
            series.times.push_back(cfg.t_min + static_cast<double>(k) * cfg.rounding_grid);
            series.values.push_back({value});
        }
        out.push_back(std::move(series));
    }
    return out;
}

/// Disjoint, exhaustive 80:10:10 index partition (sizes floored, remainder to
/// train), deterministic under the seed.
struct DatasetSplit {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;
};

inline DatasetSplit split_dataset(int n, std::uint64_t seed) {
    if (n < 10) {
        throw ConfigError("split: need at least 10 sequences, got " + std::to_string(n));
    }
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    Rng rng(Rng::derive(seed, 0x5711ULL));
    rng.shuffle(idx);
    const int n_val = n / 10;
    const int n_test = n / 10;
    const int n_train = n - n_val - n_test;
    DatasetSplit split;
    split.train.assign(idx.begin(), idx.begin() + n_train);
    split.val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
    split.test.assign(idx.begin() + n_train + n_val, idx.end());
    return split;
}

/// Writes one JSON record per line: {"t": [...], "x": [[...], ...], "y": [...]}.
inline void write_dataset(const std::vector<IrregularSeries>& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open '" + path + "' for writing");
    }
    for (const IrregularSeries& s : data) {
        nlohmann::json j;
        j["t"] = s.times;
        j["x"] = s.values;
        if (!s.target.empty()) j["y"] = s.target;
        out << j.dump() << '\n';
    }
    if (!out) {
        throw DataError("write failed for '" + path + "'");
    }
}

inline std::vector<IrregularSeries> read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open dataset file '" + path + "'");
    }
    std::vector<IrregularSeries> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("t") || !j.contains("x")) {
            throw ParseError(where + ": record must be an object with 't' and 'x' fields");
        }
        IrregularSeries s;
        try {
            s.times = j.at("t").get<std::vector<double>>();
            s.values = j.at("x").get<std::vector<std::vector<double>>>();
            if (j.contains("y")) s.target = j.at("y").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (s.values.size() != s.times.size()) {
            throw DataError(where + ": " + std::to_string(s.times.size()) + " times but " +
                            std::to_string(s.values.size()) + " feature rows");
        }
        for (std::size_t i = 0; i + 1 < s.times.size(); ++i) {
            if (!(s.times[i] < s.times[i + 1])) {
                throw DataError(where + ": non-increasing times");
            }
        }
        const std::size_t width = s.feature_width();
        for (const auto& row : s.values) {
            if (row.size() != width) {
                throw DataError(where + ": ragged feature rows");
            }
            for (double v : row) {
                if (!std::isfinite(v)) throw DataError(where + ": non-finite feature value");
            }
        }
        for (double t : s.times) {
            if (!std::isfinite(t)) throw DataError(where + ": non-finite time");
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace odernn
