#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "odernn/data.hpp"

using namespace odernn;

namespace {

SineDatasetConfig small_cfg(double grid, int n = 40, std::uint64_t seed = 0) {
    SineDatasetConfig cfg;
    cfg.num_sequences = n;
    cfg.rounding_grid = grid;
    cfg.seed = seed;
    return cfg;
}

std::string temp_path(const std::string& name) {
    return std::string("/tmp/odernn_test_") + name;
}

}  // namespace

TEST_CASE("sine generation basics") {
    auto data = generate_sine_dataset(small_cfg(0.1));
    REQUIRE(data.size() == 40);
    for (const auto& s : data) {
        REQUIRE(s.times.size() == 50);
        REQUIRE(s.values.size() == 50);
        for (std::size_t j = 0; j < s.times.size(); ++j) {
            // amplitude bound
            REQUIRE(std::abs(s.values[j][0]) <= 1.0);
            // times lie on the grid exactly: integer-multiple storage
            const long long k = std::llround(s.times[j] / 0.1);
            REQUIRE(static_cast<double>(k) * 0.1 == s.times[j]);
            if (j > 0) REQUIRE(s.times[j - 1] < s.times[j]);
        }
        REQUIRE(s.times.front() >= 0.0);
        REQUIRE(s.times.back() <= 5.0 + 1e-12);
    }
}

TEST_CASE("same seed gives identical datasets") {
    auto a = generate_sine_dataset(small_cfg(0.001, 20, 7));
    auto b = generate_sine_dataset(small_cfg(0.001, 20, 7));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].times == b[i].times);
        REQUIRE(a[i].values == b[i].values);
    }
    auto c = generate_sine_dataset(small_cfg(0.001, 20, 8));
    REQUIRE(a.front().times != c.front().times);
}

TEST_CASE("coarse rounding collapses the unique-time union") {
    auto coarse = generate_sine_dataset(small_cfg(0.1, 50, 3));
    auto fine = generate_sine_dataset(small_cfg(0.001, 50, 3));
    auto union_size = [](const std::vector<IrregularSeries>& data, double grid) {
        std::set<long long> keys;
        for (const auto& s : data) {
            for (double t : s.times) keys.insert(std::llround(t / grid));
        }
        return keys.size();
    };
    const std::size_t coarse_union = union_size(coarse, 0.1);
    const std::size_t fine_union = union_size(fine, 0.001);
    INFO("union sizes: " << coarse_union << " (0.1) vs " << fine_union << " (0.001)");
    REQUIRE(coarse_union <= 51);
    REQUIRE(fine_union > 10 * coarse_union);
}

TEST_CASE("grid too coarse for the requested points is a config error") {
    SineDatasetConfig cfg = small_cfg(0.1);
    cfg.points_per_sequence = 52;  // 0.1 grid on [0,5] has 51 slots
    REQUIRE_THROWS_AS(generate_sine_dataset(cfg), ConfigError);
    cfg.points_per_sequence = 51;  // tight but legal
    cfg.num_sequences = 2;
    auto data = generate_sine_dataset(cfg);
    REQUIRE(data.front().times.size() == 51);
}

TEST_CASE("dataset split") {
    SECTION("n=10 gives 8/1/1") {
        DatasetSplit s = split_dataset(10, 0);
        REQUIRE(s.train.size() == 8);
        REQUIRE(s.val.size() == 1);
        REQUIRE(s.test.size() == 1);
    }
    SECTION("n=10000 gives 8000/1000/1000") {
        DatasetSplit s = split_dataset(10000, 0);
        REQUIRE(s.train.size() == 8000);
        REQUIRE(s.val.size() == 1000);
        REQUIRE(s.test.size() == 1000);
    }
    SECTION("partitions are disjoint and exhaustive") {
        for (int n : {10, 37, 101, 2000}) {
            DatasetSplit s = split_dataset(n, 42);
            std::set<int> seen;
            for (int i : s.train) seen.insert(i);
            for (int i : s.val) seen.insert(i);
            for (int i : s.test) seen.insert(i);
            REQUIRE(seen.size() == static_cast<std::size_t>(n));
            REQUIRE(*seen.begin() == 0);
            REQUIRE(*seen.rbegin() == n - 1);
            REQUIRE(s.train.size() + s.val.size() + s.test.size() ==
                    static_cast<std::size_t>(n));
        }
    }
    SECTION("deterministic under the seed") {
        DatasetSplit a = split_dataset(100, 9);
        DatasetSplit b = split_dataset(100, 9);
        REQUIRE(a.train == b.train);
        REQUIRE(a.val == b.val);
        REQUIRE(a.test == b.test);
    }
    SECTION("fewer than 10 sequences is a config error") {
        REQUIRE_THROWS_AS(split_dataset(9, 0), ConfigError);
    }
}

TEST_CASE("dataset file round-trip is the identity") {
    auto data = generate_sine_dataset(small_cfg(0.001, 15, 5));
    data[3].target = {0.25, -0.5};  // optional label survives the trip
    const std::string path = temp_path("roundtrip.jsonl");
    write_dataset(data, path);
    auto back = read_dataset(path);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        REQUIRE(back[i].times == data[i].times);
        REQUIRE(back[i].values == data[i].values);
        REQUIRE(back[i].target == data[i].target);
    }
    std::remove(path.c_str());
}

TEST_CASE("empty dataset file reads as empty") {
    const std::string path = temp_path("empty.jsonl");
    { std::ofstream out(path); }
    REQUIRE(read_dataset(path).empty());
    std::remove(path.c_str());
}

TEST_CASE("malformed records are rejected with the line number") {
    const std::string path = temp_path("bad.jsonl");
    SECTION("non-increasing times") {
        {
            std::ofstream out(path);
            out << R"({"t":[0.1,0.2],"x":[[1.0],[2.0]]})" << "\n";
            out << R"({"t":[0.2,0.1],"x":[[1.0],[2.0]]})" << "\n";
        }
        REQUIRE_THROWS_MATCHES(read_dataset(path), DataError,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("non-increasing times") &&
                                   Catch::Matchers::ContainsSubstring(":2")));
    }
    SECTION("broken json") {
        {
            std::ofstream out(path);
            out << R"({"t":[0.1],"x":[[1.0]]})" << "\n";
            out << "{not json\n";
        }
        REQUIRE_THROWS_MATCHES(
            read_dataset(path), ParseError,
            Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(":2")));
    }
    SECTION("missing field") {
        {
            std::ofstream out(path);
            out << R"({"t":[0.1]})" << "\n";
        }
        REQUIRE_THROWS_AS(read_dataset(path), ParseError);
    }
    SECTION("mismatched lengths") {
        {
            std::ofstream out(path);
            out << R"({"t":[0.1,0.2],"x":[[1.0]]})" << "\n";
        }
        REQUIRE_THROWS_AS(read_dataset(path), DataError);
    }
    std::remove(path.c_str());
}
