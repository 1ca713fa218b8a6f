#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "gammacas/model.hpp"
#include "gammacas/rng.hpp"
#include "gammacas/trainer.hpp"
#include "testutil.hpp"

using namespace gammacas;
using namespace gammacas::model;

namespace {

std::string temp_path(const std::string& name) { return "/tmp/gammacas_test_" + name; }

bool weights_identical(const ModelWeights& a, const ModelWeights& b) {
    auto as = collect_arrays(a);
    auto bs = collect_arrays(b);
    if (as.size() != bs.size()) return false;
    for (std::size_t k = 0; k < as.size(); ++k) {
        if (as[k].name != bs[k].name || as[k].size != bs[k].size) return false;
        for (std::size_t i = 0; i < as[k].size; ++i)
            if (as[k].data[i] != bs[k].data[i]) return false;
    }
    return true;
}

std::string file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("per_bin_params: activation anchors") {
    HeadWeights head;
    head.w_scale.assign(3, 0.0);
    head.w_growth.assign(3, 0.0);
    head.w_decay.assign(3, 0.0);
    head.w_mod.assign(2, 0.0);
    Vec h(3, 0.7);

    auto z = per_bin_params(h, head);
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);
    CHECK(z[2] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    head.b_scale = -3.0;
    CHECK(per_bin_params(h, head)[0] == 0.0);

    head.b_decay = 5.0;
    CHECK(per_bin_params(h, head)[2] == doctest::Approx(std::log1p(std::exp(5.0))).epsilon(1e-12));
}

TEST_CASE("modulate_scale: relu clamp and multiplicative zero") {
    HeadWeights head;
    head.w_mod.assign(2, 0.0);
    head.b_mod = 1.0;
    Vec x(2, 0.3);
    CHECK(modulate_scale(2.0, x, head) == 2.0);
    head.b_mod = -0.5;
    CHECK(modulate_scale(2.0, x, head) == 0.0);
    head.b_mod = 4.0;
    CHECK(modulate_scale(0.0, x, head) == 0.0);
}

TEST_CASE("pool_params: arithmetic mean") {
    CHECK(pool_params({{2.0, 1.0, 0.4}}).scale == 2.0);
    auto p = pool_params({{1.0, 0.5, 0.2}, {3.0, 1.5, 0.6}});
    CHECK(p.scale == doctest::Approx(2.0));
    CHECK(p.growth == doctest::Approx(1.0));
    CHECK(p.decay == doctest::Approx(0.4));
    auto c = pool_params({{5.0, 2.0, 0.3}, {5.0, 2.0, 0.3}, {5.0, 2.0, 0.3}});
    CHECK(c.scale == doctest::Approx(5.0));
    CHECK_THROWS_AS(pool_params({}), std::invalid_argument);
}

TEST_CASE("autoregressive_forecast: midpoint evaluation") {
    // Zero scale kills the forecast.
    auto zero = autoregressive_forecast({{0.0, 1.0, 0.5}, {0.0, 1.0, 0.5}}, 1.0);
    CHECK(zero == Vec{0.0});

    // Rate ~ constant 12/hour over a 5-minute bin is one retweet.
    auto unit = autoregressive_forecast({{12.0, 0.0, 1e-9}, {12.0, 0.0, 1e-9}}, 1.0 / 12.0);
    CHECK(unit[0] == doctest::Approx(1.0).epsilon(1e-6));

    // First forecast evaluates bin 2's midpoint t = 1.5.
    auto mid = autoregressive_forecast({{2.0, 1.0, 0.5}, {9.0, 9.0, 9.0}}, 1.0);
    CHECK(mid[0] == doctest::Approx(3.0 * std::exp(-0.75)).epsilon(1e-12));

    CHECK_THROWS_AS(autoregressive_forecast({{1.0, 1.0, 1.0}}, 1.0), std::invalid_argument);
}

TEST_CASE("loss: anchors and undefined inputs") {
    ForwardOutput out;
    out.horizons = {24.0};
    out.predictions = {75.0};

    CHECK(loss(out, {75.0}, {}, 0.25) == 0.0);
    CHECK(loss(out, {100.0}, {}, 0.0) == doctest::Approx(0.25).epsilon(1e-12));

    // AR term: residuals [2, 0] over M-1 = 2 targets.
    out.predictions = {100.0};
    out.ar_forecasts = {5.0, 1.0};
    CHECK(loss(out, {100.0}, {9, 3, 1}, 0.25) == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(loss(out, {0.0}, {9, 3, 1}, 0.25), std::domain_error);
}

TEST_CASE("loss: MAPE term invariant under common rescaling") {
    ForwardOutput out;
    out.horizons = {12.0, 24.0};
    out.predictions = {80.0, 130.0};
    double j1 = loss(out, {100.0, 120.0}, {}, 0.0);
    out.predictions = {800.0, 1300.0};
    double j2 = loss(out, {1000.0, 1200.0}, {}, 0.0);
    CHECK(std::abs(j1 - j2) < 1e-12);
}

TEST_CASE("forward: forced pooled parameters reproduce the closed form") {
    ModelConfig cfg = train::toy_config(Mode::cascade_only);
    ModelWeights w = make_weight_shell(cfg);
    // Heads ignore the hidden state: A' = relu(1) = 1, growth = relu(0) = 0,
    // decay = softplus(ln(e-1)) = 1.
    w.head.b_scale = 1.0;
    w.head.b_growth = 0.0;
    w.head.b_decay = std::log(std::exp(1.0) - 1.0);

    std::vector<SampleInput> batch = train::make_gradcheck_batch(cfg, 3);
    ForwardOutput out = forward(batch[0], w, cfg, {24.0});
    CHECK(out.pooled.scale == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.pooled.growth == 0.0);
    CHECK(out.pooled.decay == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.predictions[0] == doctest::Approx(1.0 - std::exp(-24.0)).epsilon(1e-6));
}

TEST_CASE("forward: predictions increase with the horizon when scale is positive") {
    for (Mode mode : {Mode::full, Mode::cascade_only, Mode::plain_lstm}) {
        ModelConfig cfg = train::toy_config(mode);
        ModelWeights w = train::init_weights(cfg, 99);
        w.head.b_scale = 0.5;  // keep the scale head alive
        std::vector<SampleInput> batch = train::make_gradcheck_batch(cfg, 5);
        ForwardOutput out = forward(batch[0], w, cfg, {12.0, 24.0, 48.0});
        CHECK(out.pooled.scale > 0.0);
        CHECK(out.predictions[0] < out.predictions[1]);
        CHECK(out.predictions[1] < out.predictions[2]);
        CHECK(out.predictions[0] >= 0.0);
        CHECK(out.per_bin.size() == cfg.bins());
        CHECK(out.ar_forecasts.size() == cfg.bins() - 1);
    }
}

TEST_CASE("ablation invariance: severed signal paths ignore perturbations") {
    ModelConfig cfg = train::toy_config(Mode::cascade_only);
    ModelWeights w = train::init_weights(cfg, 7);
    std::vector<SampleInput> batch = train::make_gradcheck_batch(cfg, 9);
    SampleInput a = batch[0];
    SampleInput b = a;
    // Different text and news entirely.
    for (auto& id : b.tweet.ids) id = 2;
    b.news.clear();

    ForwardOutput oa = forward(a, w, cfg, {12.0, 24.0});
    ForwardOutput ob = forward(b, w, cfg, {12.0, 24.0});
    CHECK(oa.predictions == ob.predictions);
    CHECK(oa.pooled.scale == ob.pooled.scale);
    CHECK(oa.ar_forecasts == ob.ar_forecasts);

    // text_only: news changes must not matter, tweet changes must.
    ModelConfig tcfg = train::toy_config(Mode::text_only);
    ModelWeights tw = train::init_weights(tcfg, 7);
    SampleInput c = batch[0];
    SampleInput d = c;
    d.news.clear();
    ForwardOutput oc = forward(c, tw, tcfg, {12.0});
    ForwardOutput od = forward(d, tw, tcfg, {12.0});
    CHECK(oc.predictions == od.predictions);
}

TEST_CASE("plain_lstm: same output shapes as the modified cell") {
    ModelConfig cfg = train::toy_config(Mode::plain_lstm);
    ModelWeights w = train::init_weights(cfg, 31);
    std::vector<SampleInput> batch = train::make_gradcheck_batch(cfg, 5);
    ForwardOutput out = forward(batch[0], w, cfg, cfg.train_horizons);
    CHECK(out.per_bin.size() == cfg.bins());
    CHECK(out.ar_forecasts.size() == cfg.bins() - 1);
    CHECK(out.predictions.size() == cfg.train_horizons.size());
}

TEST_CASE("weight file: fresh weights round-trip bit-exactly") {
    for (Mode mode : {Mode::full, Mode::cascade_only, Mode::plain_lstm}) {
        ModelConfig cfg = train::toy_config(mode);
        ModelWeights w = train::init_weights(cfg, 123);
        std::string path = temp_path("roundtrip_" + mode_to_string(mode) + ".gcas");
        save_weights(w, path);
        ModelWeights r = load_weights(path, cfg);
        CHECK(weights_identical(w, r));
    }
}

TEST_CASE("weight file: save-load is idempotent for off-grid values") {
    ModelConfig cfg = train::toy_config(Mode::full);
    ModelWeights w = train::init_weights(cfg, 5);
    // Push values off the f32 grid the way training does.
    for (ArrayRef& a : collect_arrays(w))
        for (std::size_t i = 0; i < a.size; ++i) a.data[i] += 1.0 / 3.0 * 1e-3;
    std::string p1 = temp_path("idem1.gcas");
    std::string p2 = temp_path("idem2.gcas");
    save_weights(w, p1);
    ModelWeights r1 = load_weights(p1, cfg);
    save_weights(r1, p2);
    CHECK(file_bytes(p1) == file_bytes(p2));
    ModelWeights r2 = load_weights(p2, cfg);
    CHECK(weights_identical(r1, r2));
}

TEST_CASE("weight file: corrupt inputs are rejected before anything returns") {
    ModelConfig cfg = train::toy_config(Mode::full);
    ModelWeights w = train::init_weights(cfg, 5);
    std::string path = temp_path("corrupt.gcas");
    save_weights(w, path);

    // Truncation.
    std::string bytes = file_bytes(path);
    std::string cut = temp_path("cut.gcas");
    {
        std::ofstream f(cut, std::ios::binary | std::ios::trunc);
        f.write(bytes.data(), static_cast<long>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(load_weights(cut, cfg), DataError);

    // Wrong magic.
    std::string bad = temp_path("magic.gcas");
    {
        std::string mutated = bytes;
        mutated[0] = 'X';
        std::ofstream f(bad, std::ios::binary | std::ios::trunc);
        f.write(mutated.data(), static_cast<long>(mutated.size()));
    }
    CHECK_THROWS_AS(load_weights(bad, cfg), DataError);

    // Shape mismatch against the config.
    ModelConfig other = cfg;
    other.state_size = 6;
    CHECK_THROWS_AS(load_weights(path, other), DataError);

    // Mode mismatch: plain_lstm expects different arrays.
    ModelConfig plain = train::toy_config(Mode::plain_lstm);
    CHECK_THROWS_AS(load_weights(path, plain), DataError);

    CHECK_THROWS_AS(load_weights(temp_path("missing.gcas"), cfg), DataError);
}

TEST_CASE("collect_arrays: stable names, modes expose the right groups") {
    ModelConfig cfg = train::toy_config(Mode::full);
    ModelWeights w = make_weight_shell(cfg);
    auto arrays = collect_arrays(w);
    bool has_cell = false, has_text = false, has_mod = false, has_plain = false;
    for (const auto& a : arrays) {
        if (a.name.rfind("cell.", 0) == 0) has_cell = true;
        if (a.name.rfind("text.", 0) == 0) has_text = true;
        if (a.name == "head.mod_w") has_mod = true;
        if (a.name.rfind("plain.", 0) == 0) has_plain = true;
    }
    CHECK(has_cell);
    CHECK(has_text);
    CHECK(has_mod);
    CHECK(!has_plain);

    ModelConfig co = train::toy_config(Mode::cascade_only);
    ModelWeights wco = make_weight_shell(co);
    for (const auto& a : collect_arrays(wco)) {
        CHECK(a.name.rfind("text.", 0) != 0);
        CHECK(a.name != "head.mod_w");
        CHECK(a.name != "head.mod_b");
    }

    ModelConfig pl = train::toy_config(Mode::plain_lstm);
    ModelWeights wpl = make_weight_shell(pl);
    bool plain_found = false, cell_found = false;
    for (const auto& a : collect_arrays(wpl)) {
        if (a.name.rfind("plain.", 0) == 0) plain_found = true;
        if (a.name.rfind("cell.", 0) == 0) cell_found = true;
    }
    CHECK(plain_found);
    CHECK(!cell_found);
}

TEST_CASE("config validation rejects inconsistent setups") {
    ModelConfig cfg = train::toy_config(Mode::full);
    cfg.bin_minutes = 7.0;  // 2h window is not an integer bin count
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = train::toy_config(Mode::full);
    cfg.train_horizons = {1.0};  // below the window
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = train::toy_config(Mode::full);
    cfg.zeta = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = train::toy_config(Mode::full);
    cfg.embed_dim = 7;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
