#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "tabmoe/data.hpp"
#include "tabmoe/errors.hpp"
#include "tabmoe/eval.hpp"
#include "tabmoe/kernels.hpp"
#include "tabmoe/pipeline.hpp"
#include "tabmoe/train.hpp"

using namespace tabmoe;
using tabmoe::testing::random_tensor;

namespace {

ModelConfig small_mlp(std::size_t m, TaskSpec task = {TaskKind::regression, 0}) {
    ModelConfig cfg;
    cfg.family = Family::mlp;
    cfg.n_blocks = 1;
    cfg.d_block = 16;
    cfg.task = task;
    cfg.input_dim = m;
    return cfg;
}

} // namespace

TEST_CASE("loss_mse hand values and shift invariance") {
    CHECK(loss_mse(Tensor::vector({1, 2, 3}), Tensor::vector({1, 2, 3})) == 0.0);
    CHECK(loss_mse(Tensor::vector({0, 0}), Tensor::vector({1, 3})) == doctest::Approx(5.0));
    const double base = loss_mse(Tensor::vector({0.5, 1.5}), Tensor::vector({1.0, 2.5}));
    const double shifted = loss_mse(Tensor::vector({10.5, 11.5}), Tensor::vector({11.0, 12.5}));
    CHECK(base == doctest::Approx(shifted).epsilon(1e-12));
    CHECK_THROWS_AS(loss_mse(Tensor{}, Tensor{}), DomainError);
    CHECK_THROWS_AS(loss_mse(Tensor({1}), Tensor({2})), DimensionError);
}

TEST_CASE("loss_ce hand values and range checks") {
    const Tensor uniform = Tensor::matrix(2, 4, {0.25, 0.25, 0.25, 0.25,
                                                 0.25, 0.25, 0.25, 0.25});
    CHECK(loss_ce(uniform, {0, 3}) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    const Tensor sure = Tensor::matrix(1, 3, {0, 1, 0});
    CHECK(loss_ce(sure, {1}) == doctest::Approx(0.0));
    const Tensor hand = Tensor::matrix(1, 3, {0.5, 0.25, 0.25});
    CHECK(loss_ce(hand, {1}) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK_THROWS_AS(loss_ce(hand, {3}), DomainError);
    CHECK_THROWS_AS(loss_ce(hand, {}), DimensionError);
}

TEST_CASE("clip_global: identity below, exact scaling above the threshold") {
    std::vector<Tensor> grads;
    grads.push_back(Tensor::vector({0.3, 0.4})); // norm 0.5
    const double norm = clip_global(grads, 1.0);
    CHECK(norm == doctest::Approx(0.5));
    CHECK(grads[0][0] == doctest::Approx(0.3));

    grads.clear();
    grads.push_back(Tensor::vector({1.2, 1.6})); // norm 2.0
    clip_global(grads, 1.0);
    CHECK(grads[0][0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(grads[0][1] == doctest::Approx(0.8).epsilon(1e-12));

    Rng rng(80);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Tensor> gs;
        for (int t = 0; t < 3; ++t) gs.push_back(random_tensor(rng, {5}, -4.0, 4.0));
        clip_global(gs, 1.0);
        double total = 0.0;
        for (const Tensor& g : gs) total += sum_squares(g);
        CHECK(std::sqrt(total) <= 1.0 + 1e-12);
    }
    CHECK_THROWS_AS(clip_global(grads, 0.0), DomainError);
}

TEST_CASE("adamw: zero gradients leave parameters alone without decay") {
    ModelConfig cfg = small_mlp(3);
    Rng rng(81);
    ModelParams params = init_params(cfg, FeatureLayout::passthrough(3), rng);
    const auto before = tabmoe::testing::snapshot_params(params);
    OptimizerState opt = OptimizerState::for_params(params);
    TrainConfig tc;
    tc.learning_rate = 0.1;
    tc.weight_decay = 0.0;
    std::vector<Tensor> grads;
    for (const Tensor* t : params.tensors()) grads.push_back(Tensor::zeros(t->shape()));
    adamw_step(params, grads, opt, tc);
    const auto after = tabmoe::testing::snapshot_params(params);
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(tabmoe::testing::bits_equal(before[i], after[i]));
    }
}

TEST_CASE("adamw single-scalar step: theta moves by about -lr") {
    // one-step hand trace: m_hat = g, v_hat = g^2, theta -= lr * g/(|g|+eps)
    Tensor theta({1});
    Tensor g = Tensor::vector({1.0});
    Tensor m({1}), v({1});
    kernels::AdamwArgs args{0.1, 0.9, 0.999, 1e-8, 0.0, 1.0 / (1.0 - 0.9),
                            1.0 / (1.0 - 0.999)};
    kernels::active().adamw_update(theta.data(), g.data(), m.data(), v.data(), 1, args);
    CHECK(theta[0] == doctest::Approx(-0.1).epsilon(1e-6));

    // step-1 magnitude bound: |update| <= lr * (1 + tol) for any gradient
    Rng rng(82);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor th({1});
        Tensor gr = Tensor::vector({rng.uniform(-100.0, 100.0)});
        Tensor mm({1}), vv({1});
        kernels::active().adamw_update(th.data(), gr.data(), mm.data(), vv.data(), 1, args);
        CHECK(std::abs(th[0]) <= 0.1 * (1.0 + 1e-6));
    }
}

TEST_CASE("decoupled decay shrinks weights only, biases untouched") {
    ModelConfig cfg = small_mlp(3);
    Rng rng(83);
    ModelParams params = init_params(cfg, FeatureLayout::passthrough(3), rng);
    for (ParamRef ref : params.param_refs()) ref.tensor->fill(0.5);
    OptimizerState opt = OptimizerState::for_params(params);
    TrainConfig tc;
    tc.learning_rate = 0.1;
    tc.weight_decay = 0.2; // factor 0.98 per step
    std::vector<Tensor> grads;
    for (const Tensor* t : params.tensors()) grads.push_back(Tensor::zeros(t->shape()));
    adamw_step(params, grads, opt, tc);
    adamw_step(params, grads, opt, tc);
    auto refs = params.param_refs();
    for (const ParamRef& ref : refs) {
        const double expected = ref.decay ? 0.5 * 0.98 * 0.98 : 0.5;
        for (double w : ref.tensor->span()) CHECK(w == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("early stopping: scripted trace stops after exactly 16 stale epochs") {
    EarlyStopper stopper(16);
    std::vector<double> trace{1, 2, 3};
    for (int i = 0; i < 16; ++i) trace.push_back(3);
    bool stopped = false;
    std::size_t stop_epoch = 0;
    for (std::size_t e = 0; e < trace.size(); ++e) {
        if (stopper.observe(trace[e])) {
            stopped = true;
            stop_epoch = e + 1;
            break;
        }
    }
    CHECK(stopped);
    CHECK(stop_epoch == 19);
    CHECK(stopper.best_epoch() == 3);
    CHECK(stopper.best_score() == doctest::Approx(3.0));

    // equal score is not an improvement; strictly greater resets the counter
    EarlyStopper s2(2);
    CHECK(!s2.observe(1.0));
    CHECK(!s2.observe(1.0));
    CHECK(s2.observe(1.0));
    EarlyStopper s3(2);
    CHECK(!s3.observe(1.0));
    CHECK(!s3.observe(1.1));
    CHECK(!s3.observe(1.0));
    CHECK(s3.observe(1.05));
}

namespace {

struct FitFixture {
    DatasetBundle bundle;
    EncodedDataset encoded;
    ModelParams initial;
    TrainConfig cfg;

    explicit FitFixture(std::uint64_t seed = 1, std::size_t rows = 400) {
        SynthSpec spec;
        spec.kind = SynthKind::linear_regression;
        spec.n_rows = rows;
        spec.n_features = 5;
        spec.noise = 0.1;
        spec.seed = seed;
        bundle = make_synthetic(spec);
        encoded = encode_dataset(bundle, std::nullopt);
        ModelConfig mc = small_mlp(5);
        mc.d_block = 24;
        Rng rng(seed, 17);
        initial = init_params(mc, encoded.layout, rng);
        cfg.learning_rate = 5e-3;
        cfg.batch_size = 64;
        cfg.seed = seed;
    }
};

} // namespace

TEST_CASE("fit: max_epochs 1 runs exactly one epoch") {
    FitFixture fx;
    fx.cfg.max_epochs = 1;
    const FitResult result = fit(fx.initial, fx.encoded.layout, fx.encoded.train,
                                 fx.encoded.val, fx.cfg);
    CHECK(result.report.epochs_run == 1);
    CHECK(result.report.train_loss.size() == 1);
    CHECK(result.report.val_scores.size() == 1);
}

TEST_CASE("fit: identical seeds give identical traces") {
    FitFixture fx;
    fx.cfg.max_epochs = 12;
    const FitResult a = fit(fx.initial, fx.encoded.layout, fx.encoded.train,
                            fx.encoded.val, fx.cfg);
    const FitResult b = fit(fx.initial, fx.encoded.layout, fx.encoded.train,
                            fx.encoded.val, fx.cfg);
    CHECK(a.report.train_loss == b.report.train_loss);
    CHECK(a.report.val_scores == b.report.val_scores);
    const auto ta = a.params.tensors();
    const auto tb = b.params.tensors();
    for (std::size_t i = 0; i < ta.size(); ++i) {
        CHECK(tabmoe::testing::bits_equal(*ta[i], *tb[i]));
    }
}

TEST_CASE("fit returns the best-epoch snapshot, never the last") {
    FitFixture fx;
    fx.cfg.max_epochs = 40;
    const FitResult result = fit(fx.initial, fx.encoded.layout, fx.encoded.train,
                                 fx.encoded.val, fx.cfg);
    REQUIRE(result.report.best_epoch >= 1);
    // recompute the validation score of the returned snapshot
    const PredictOutput out =
        predict(result.params, fx.encoded.layout, fx.encoded.val.x, {});
    const double score = score_output(out, fx.encoded.val, fx.encoded.task);
    CHECK(score == doctest::Approx(result.report.best_val_score).epsilon(1e-12));
    CHECK(result.report.best_val_score ==
          doctest::Approx(*std::max_element(result.report.val_scores.begin(),
                                            result.report.val_scores.end()))
              .epsilon(1e-15));
}

TEST_CASE("fit on a linear task reaches RMSE <= 0.12 within 200 epochs") {
    FitFixture fx(2, 3000);
    fx.cfg.max_epochs = 200;
    fx.cfg.patience = 200;
    fx.cfg.learning_rate = 2e-2;
    ModelConfig mc = small_mlp(5);
    mc.d_block = 64;
    Rng rng(2, 17);
    fx.initial = init_params(mc, fx.encoded.layout, rng);
    const FitResult result = fit(fx.initial, fx.encoded.layout, fx.encoded.train,
                                 fx.encoded.val, fx.cfg);
    CHECK(result.report.best_val_score >= -0.12); // negative RMSE
}

TEST_CASE("divergence aborts with a diagnostic and the best snapshot") {
    FitFixture fx;
    // absurd targets overflow the squared loss immediately
    for (std::size_t i = 0; i < fx.encoded.train.y_reg.size(); ++i) {
        fx.encoded.train.y_reg[i] = 1e200;
    }
    const FitResult result = fit(fx.initial, fx.encoded.layout, fx.encoded.train,
                                 fx.encoded.val, fx.cfg);
    CHECK(result.report.status == "diverged");
}

TEST_CASE("training is identical under scalar and SIMD kernel dispatch") {
    const auto variants = kernels::available();
    if (variants.size() < 2) return; // nothing to compare on this machine
    std::vector<std::vector<double>> traces;
    for (kernels::Isa isa : variants) {
        REQUIRE(kernels::select(isa));
        FitFixture fx;
        fx.cfg.max_epochs = 6;
        const FitResult r = fit(fx.initial, fx.encoded.layout, fx.encoded.train,
                                fx.encoded.val, fx.cfg);
        traces.push_back(r.report.train_loss);
    }
    kernels::select(kernels::best_available());
    for (std::size_t i = 1; i < traces.size(); ++i) CHECK(traces[i] == traces[0]);
}

TEST_CASE("ggmoe fit is deterministic and scores validation with MC draws") {
    SynthSpec spec;
    spec.kind = SynthKind::gaussian_blobs;
    spec.n_rows = 300;
    spec.n_features = 4;
    spec.noise = 1.0;
    spec.separation = 4.0;
    spec.seed = 5;
    const DatasetBundle bundle = make_synthetic(spec);
    const EncodedDataset encoded = encode_dataset(bundle, std::nullopt);
    ModelConfig cfg;
    cfg.family = Family::ggmoe;
    cfg.n_blocks = 1;
    cfg.d_block = 16;
    cfg.d_block_per_expert = 8;
    cfg.tau = 1.2;
    cfg.task = bundle.schema.task;
    cfg.input_dim = 4;
    Rng rng(6, 17);
    const ModelParams initial = init_params(cfg, encoded.layout, rng);
    TrainConfig tc;
    tc.learning_rate = 5e-3;
    tc.batch_size = 64;
    tc.max_epochs = 10;
    tc.seed = 6;
    const FitResult a = fit(initial, encoded.layout, encoded.train, encoded.val, tc);
    const FitResult b = fit(initial, encoded.layout, encoded.train, encoded.val, tc);
    CHECK(a.report.val_scores == b.report.val_scores);
    CHECK(a.report.best_val_score > 0.5); // learns something on blobs
}

TEST_CASE("test-split targets never influence training") {
    FitFixture clean;
    FitFixture poisoned;
    for (std::size_t i = 0; i < poisoned.encoded.test.y_reg.size(); ++i) {
        poisoned.encoded.test.y_reg[i] = 1e6; // scoring-only data, must not matter
    }
    clean.cfg.max_epochs = 8;
    poisoned.cfg.max_epochs = 8;
    const FitResult a = fit(clean.initial, clean.encoded.layout, clean.encoded.train,
                            clean.encoded.val, clean.cfg);
    const FitResult b = fit(poisoned.initial, poisoned.encoded.layout,
                            poisoned.encoded.train, poisoned.encoded.val, poisoned.cfg);
    CHECK(a.report.train_loss == b.report.train_loss);
    CHECK(a.report.val_scores == b.report.val_scores);
    const auto ta = a.params.tensors();
    const auto tb = b.params.tensors();
    for (std::size_t i = 0; i < ta.size(); ++i) {
        CHECK(tabmoe::testing::bits_equal(*ta[i], *tb[i]));
    }
}
