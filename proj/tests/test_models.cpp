#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "odernn/models.hpp"
#include "support/gradcheck.hpp"
#include "support/testutil.hpp"

using namespace odernn;

namespace {

EvolverConfig fixed_dt_cfg(double s) {
    EvolverConfig c;
    c.mode = EvolverMode::kFixedDt;
    c.step_size = s;
    return c;
}

void zero_dynamics_params(Model& m) {
    for (Parameter* p : {m.dynamics.w1, m.dynamics.b1, m.dynamics.w2, m.dynamics.b2}) {
        p->value.fill(0.0);
    }
}

Matrix predict(const Model& m, const TimeSeriesBatch& batch, ForwardStats* stats = nullptr) {
    Tape t;
    return t.value(m.forward(t, batch, stats).prediction);
}

}  // namespace

TEST_CASE("gru cell") {
    Rng rng(1);
    SECTION("all-zero weights and zero input halve the state") {
        ParameterSet params;
        GruCell cell = GruCell::create(params, "g", 2, 3, rng);
        for (const auto& p : params.items()) p->value.fill(0.0);
        Matrix h0(2, 3, {0.4, -1.0, 2.5, 0.0, 1.2, -0.6});
        Tape t;
        Var h = cell.step(t, t.leaf(h0), t.leaf(Matrix(2, 2)));
        const Matrix& out = t.value(h);
        for (std::size_t i = 0; i < h0.size(); ++i) {
            REQUIRE_THAT(out.data[i], Catch::Matchers::WithinAbs(0.5 * h0.data[i], 1e-15));
        }
    }
    SECTION("output shape is B x H") {
        ParameterSet params;
        GruCell cell = GruCell::create(params, "g", 4, 7, rng);
        Tape t;
        Var h = cell.step(t, t.leaf(Matrix(5, 7)), t.leaf(Matrix(5, 4)));
        REQUIRE(t.value(h).rows == 5);
        REQUIRE(t.value(h).cols == 7);
    }
    SECTION("shape mismatch is rejected") {
        ParameterSet params;
        GruCell cell = GruCell::create(params, "g", 4, 7, rng);
        Tape t;
        REQUIRE_THROWS_AS(cell.step(t, t.leaf(Matrix(5, 7)), t.leaf(Matrix(5, 3))),
                          DimensionError);
    }
    SECTION("cell weight gradients match finite differences") {
        ParameterSet params;
        GruCell cell = GruCell::create(params, "g", 2, 3, rng);
        Matrix h0(2, 3);
        Matrix x(2, 2);
        for (double& v : h0.data) v = rng.uniform(-1.0, 1.0);
        for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
        auto build = [&](Tape& t) {
            Var h = cell.step(t, t.leaf(h0), t.leaf(x));
            return t.scale(t.sum(t.mul(h, h)), 0.25);
        };
        params.zero_grad();
        {
            Tape t;
            t.backward(build(t));
        }
        auto res = testsupport::finite_diff_check(params, [&] {
            Tape t;
            return t.scalar(build(t));
        });
        REQUIRE(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("batch assembly") {
    Rng rng(2);
    SECTION("holds out the last point as the target") {
        auto batch = testsupport::random_batch(rng, 3, 5, 2, 0.01);
        REQUIRE(batch.steps == 4);
        REQUIRE(batch.x.size() == 4);
        REQUIRE(batch.dt.cols == 5);
        REQUIRE(batch.y.rows == 3);
        REQUIRE(batch.y.cols == 2);
        // dt telescopes back to the absolute times
        for (std::size_t r = 0; r < batch.batch; ++r) {
            double acc = 0.0;
            for (std::size_t j = 0; j < 5; ++j) {
                REQUIRE(batch.dt(r, j) >= 0.0);
                acc += batch.dt(r, j);
                REQUIRE_THAT(acc, Catch::Matchers::WithinAbs(batch.t(r, j), 1e-12));
            }
        }
    }
    SECTION("mixed lengths are rejected") {
        std::vector<IrregularSeries> data;
        data.push_back(testsupport::random_series(rng, 4, 1, 0.1, 40));
        data.push_back(testsupport::random_series(rng, 5, 1, 0.1, 40));
        std::vector<int> idx{0, 1};
        REQUIRE_THROWS_AS(make_batch(data, idx, 0.1), DataError);
    }
    SECTION("off-grid times are rejected when a grid is declared") {
        std::vector<IrregularSeries> data(1);
        data[0].times = {0.05, 0.1};
        data[0].values = {{1.0}, {2.0}};
        std::vector<int> idx{0};
        REQUIRE_THROWS_AS(make_batch(data, idx, 0.1), DataError);
        REQUIRE_NOTHROW(make_batch(data, idx, 0.0));  // raw-times mode
    }
    SECTION("sequences shorter than 2 points are rejected") {
        std::vector<IrregularSeries> data(1);
        data[0].times = {0.1};
        data[0].values = {{1.0}};
        std::vector<int> idx{0};
        REQUIRE_THROWS_AS(make_batch(data, idx, 0.1), DataError);
    }
}

TEST_CASE("batch-efficient forward") {
    SECTION("evolution disabled reduces to one cell step") {
        Model m = make_model(ModelKind::kOdeRnn, 1, 1, 4, fixed_dt_cfg(0.1), 0.1, 5);
        zero_dynamics_params(m);
        TimeSeriesBatch batch;
        batch.batch = 2;
        batch.steps = 1;
        batch.d_x = 1;
        batch.d_y = 1;
        batch.x = {Matrix(2, 1, {0.7, -0.3})};
        batch.dt = Matrix(2, 2);  // all zero jumps
        batch.t = Matrix(2, 2);
        batch.keys = {{0, 0}, {0, 0}};
        batch.y = Matrix(2, 1);

        Matrix pred = predict(m, batch);

        Tape t;
        Var h = m.cell.step(t, t.leaf(Matrix::zeros(2, 4)), t.leaf(batch.x[0]));
        const Matrix expected = t.value(m.head.apply(t, h));
        REQUIRE(pred.data == expected.data);
    }
    SECTION("exactly N+1 evolver calls regardless of time values") {
        Rng rng(3);
        Model m = make_model(ModelKind::kOdeRnn, 1, 1, 4, fixed_dt_cfg(0.1), 0.1, 5);
        auto batch = testsupport::random_batch(rng, 4, 5, 1, 0.01);  // N = 4
        ForwardStats stats;
        predict(m, batch, &stats);
        REQUIRE(stats.evolver_calls == 5);
    }
}

TEST_CASE("combined-time forward") {
    SECTION("outer iterations cover the union of the rows' times") {
        // rows with cumulative times {0, 1, 2} and {0, 1.5, 2} (grid 0.5)
        std::vector<IrregularSeries> data(2);
        data[0].times = {0.0, 1.0, 2.0};
        data[0].values = {{0.1}, {0.2}, {0.3}};
        data[1].times = {0.0, 1.5, 2.0};
        data[1].values = {{-0.1}, {-0.2}, {-0.3}};
        std::vector<int> idx{0, 1};
        TimeSeriesBatch batch = make_batch(data, idx, 0.5);

        Model m = make_model(ModelKind::kCombinedTime, 1, 1, 4, fixed_dt_cfg(0.1), 0.5, 7);
        ForwardStats stats;
        predict(m, batch, &stats);
        REQUIRE(stats.outer_iterations == 4);  // union {0, 1, 1.5, 2}
    }
    SECTION("identical grids across rows match the batch-efficient model") {
        Rng rng(4);
        Model ode = make_model(ModelKind::kOdeRnn, 1, 1, 6, fixed_dt_cfg(0.1), 0.1, 11);
        auto batch = testsupport::regular_grid_batch(rng, 5, 6, 1, 0.1, 2, 3);  // spacing 0.3

        ForwardStats ode_stats;
        Tape t1;
        ForwardOut a = odernn_forward(t1, ode.cell, ode.dynamics, ode.head, batch, ode.evolver,
                                      &ode_stats);
        ForwardStats ct_stats;
        Tape t2;
        ForwardOut b = combined_time_forward(t2, ode.cell, ode.dynamics, ode.head, batch, 0.1,
                                             &ct_stats);

        REQUIRE(ct_stats.outer_iterations == static_cast<int>(batch.steps) + 1);
        const Matrix& pa = t1.value(a.prediction);
        const Matrix& pb = t2.value(b.prediction);
        for (std::size_t i = 0; i < pa.size(); ++i) {
            REQUIRE_THAT(pa.data[i], Catch::Matchers::WithinAbs(pb.data[i], 1e-9));
        }
        const Matrix& ha = t1.value(a.h_final);
        const Matrix& hb = t2.value(b.h_final);
        for (std::size_t i = 0; i < ha.size(); ++i) {
            REQUIRE_THAT(ha.data[i], Catch::Matchers::WithinAbs(hb.data[i], 1e-9));
        }
    }
    SECTION("single-row batches match the batch-efficient model") {
        Rng rng(5);
        Model ode = make_model(ModelKind::kOdeRnn, 1, 1, 6, fixed_dt_cfg(0.1), 0.1, 13);
        for (int trial = 0; trial < 10; ++trial) {
            auto batch = testsupport::random_batch(rng, 1, 6, 1, 0.01);
            Tape t1;
            ForwardOut a =
                odernn_forward(t1, ode.cell, ode.dynamics, ode.head, batch, ode.evolver);
            Tape t2;
            ForwardOut b = combined_time_forward(t2, ode.cell, ode.dynamics, ode.head, batch, 0.1);
            const Matrix& pa = t1.value(a.prediction);
            const Matrix& pb = t2.value(b.prediction);
            for (std::size_t i = 0; i < pa.size(); ++i) {
                REQUIRE_THAT(pa.data[i], Catch::Matchers::WithinAbs(pb.data[i], 1e-9));
            }
        }
    }
}

TEST_CASE("simple rnn forward") {
    Rng rng(6);
    SECTION("output shape is B x d_y") {
        Model m = make_model(ModelKind::kSimpleRnn, 2, 2, 5, fixed_dt_cfg(0.1), 0.1, 17);
        auto batch = testsupport::random_batch(rng, 3, 4, 2, 0.01);
        Matrix pred = predict(m, batch);
        REQUIRE(pred.rows == 3);
        REQUIRE(pred.cols == 2);
    }
    SECTION("equals a plain GRU over inputs with the delta appended") {
        Model m = make_model(ModelKind::kSimpleRnn, 1, 1, 5, fixed_dt_cfg(0.1), 0.1, 19);
        auto batch = testsupport::regular_grid_batch(rng, 3, 5, 1, 0.1, 3, 2);
        Matrix pred = predict(m, batch);

        Tape t;
        Var h = t.leaf(Matrix::zeros(3, 5));
        for (std::size_t j = 0; j < batch.steps; ++j) {
            Matrix xin(3, 2);
            for (std::size_t r = 0; r < 3; ++r) {
                xin(r, 0) = batch.x[j](r, 0);
                xin(r, 1) = batch.dt(r, j);
            }
            h = m.cell.step(t, h, t.leaf(xin));
        }
        const Matrix expected = t.value(m.head.apply(t, h));
        REQUIRE(pred.data == expected.data);
    }
}

TEST_CASE("loss gradients of every model match finite differences") {
    Rng rng(7);
    for (ModelKind kind :
         {ModelKind::kSimpleRnn, ModelKind::kOdeRnn, ModelKind::kCombinedTime}) {
        Model m = make_model(kind, 1, 1, 4, fixed_dt_cfg(0.12), 0.12, 23);
        auto batch = testsupport::random_batch(rng, 3, 4, 1, 0.01);
        auto build = [&](Tape& t) {
            ForwardOut out = m.forward(t, batch);
            Var diff = t.sub(out.prediction, t.leaf(batch.y));
            return t.scale(t.sum(t.mul(diff, diff)), 1.0 / static_cast<double>(batch.y.size()));
        };
        m.params.zero_grad();
        {
            Tape t;
            t.backward(build(t));
        }
        auto res = testsupport::finite_diff_check(m.params, [&] {
            Tape t;
            return t.scalar(build(t));
        });
        INFO(to_string(kind) << ": max rel err " << res.max_rel_err);
        REQUIRE(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("batch-row permutation equivariance for all three models") {
    Rng rng(8);
    std::vector<IrregularSeries> data;
    for (int i = 0; i < 4; ++i) data.push_back(testsupport::random_series(rng, 5, 1, 0.01, 300));
    const std::vector<int> idx{0, 1, 2, 3};
    const std::vector<int> perm{2, 0, 3, 1};
    TimeSeriesBatch batch = make_batch(data, idx, 0.01);
    TimeSeriesBatch permuted = make_batch(data, perm, 0.01);

    for (ModelKind kind :
         {ModelKind::kSimpleRnn, ModelKind::kOdeRnn, ModelKind::kCombinedTime}) {
        Model m = make_model(kind, 1, 1, 5, fixed_dt_cfg(0.1), 0.1, 29);
        Matrix a = predict(m, batch);
        Matrix b = predict(m, permuted);
        for (std::size_t i = 0; i < perm.size(); ++i) {
            REQUIRE(b(i, 0) == a(static_cast<std::size_t>(perm[i]), 0));
        }
    }
}

TEST_CASE("fixed seed and config give bit-identical predictions") {
    Rng rng(9);
    auto batch = testsupport::random_batch(rng, 4, 5, 1, 0.01);
    for (ModelKind kind :
         {ModelKind::kSimpleRnn, ModelKind::kOdeRnn, ModelKind::kCombinedTime}) {
        Model m1 = make_model(kind, 1, 1, 5, fixed_dt_cfg(0.1), 0.1, 31);
        Model m2 = make_model(kind, 1, 1, 5, fixed_dt_cfg(0.1), 0.1, 31);
        REQUIRE(predict(m1, batch).data == predict(m2, batch).data);
    }
}
