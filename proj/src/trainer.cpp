#include "gammacas/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "gammacas/metrics.hpp"
#include "gammacas/rng.hpp"

namespace gammacas::train {

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
        throw std::invalid_argument("adam betas must be in (0, 1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be > 0");
    if (!(clip_norm > 0.0)) throw std::invalid_argument("clip norm must be > 0");
    if (!(dev_fraction > 0.0 && dev_fraction < 0.5))
        throw std::invalid_argument("dev fraction must be in (0, 0.5)");
}

OptimizerState make_optimizer_state(const model::ModelWeights& w) {
    OptimizerState s;
    s.m = model::zeros_like(w);
    s.v = model::zeros_like(w);
    s.step = 0;
    return s;
}

namespace {

double as_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

bool is_bias_name(const std::string& name) {
    return name.ends_with("_b") || name.ends_with("_shift");
}

}  // namespace

model::ModelWeights init_weights(const model::ModelConfig& cfg, std::uint64_t seed) {
    model::ModelWeights w = model::make_weight_shell(cfg);
    Rng rng(seed);
    for (model::ArrayRef& a : model::collect_arrays(w)) {
        if (a.name == "text.embedding") {
            for (std::size_t i = 0; i < a.size; ++i) a.data[i] = as_f32(rng.uniform(-0.05, 0.05));
        } else if (a.name == "norm.retweet_scale" || a.name == "norm.follower_scale") {
            a.data[0] = 1.0;
        } else if (a.name == "head.mod_b") {
            a.data[0] = 1.0;  // initial modulation ~ identity
        } else if (is_bias_name(a.name)) {
            std::fill(a.data, a.data + a.size, 0.0);
        } else {
            // Weight matrix or projection vector: Glorot uniform with
            // fan_out = trailing dim (1 for vectors).
            double fan_in = static_cast<double>(a.dims[0]);
            double fan_out = a.dims.size() > 1 ? static_cast<double>(a.dims[1]) : 1.0;
            double bound = std::sqrt(6.0 / (fan_in + fan_out));
            for (std::size_t i = 0; i < a.size; ++i) a.data[i] = as_f32(rng.uniform(-bound, bound));
        }
    }
    return w;
}

double batch_backward(const std::vector<model::SampleInput>& batch, const model::ModelWeights& w,
                      const model::ModelConfig& cfg, model::ModelWeights& grads) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    for (model::ArrayRef& a : model::collect_arrays(grads)) std::fill(a.data, a.data + a.size, 0.0);
    double total = 0.0;
    for (const model::SampleInput& s : batch) total += model::loss_and_gradient(s, w, cfg, grads);
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (model::ArrayRef& a : model::collect_arrays(grads))
        for (std::size_t i = 0; i < a.size; ++i) a.data[i] *= inv;
    double mean = total * inv;
    if (!std::isfinite(mean)) throw NumericError("non-finite batch loss");
    return mean;
}

double global_norm(const model::ModelWeights& grads) {
    double sq = 0.0;
    for (const model::ArrayRef& a : model::collect_arrays(grads))
        for (std::size_t i = 0; i < a.size; ++i) sq += a.data[i] * a.data[i];
    return std::sqrt(sq);
}

void adam_step(model::ModelWeights& w, model::ModelWeights& grads, OptimizerState& opt,
               const TrainConfig& tc) {
    double norm = global_norm(grads);
    if (norm > tc.clip_norm) {
        double scale = tc.clip_norm / norm;
        for (model::ArrayRef& a : model::collect_arrays(grads))
            for (std::size_t i = 0; i < a.size; ++i) a.data[i] *= scale;
    }
    opt.step += 1;
    const double bc1 = 1.0 - std::pow(tc.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(tc.beta2, static_cast<double>(opt.step));

    auto ws = model::collect_arrays(w);
    auto gs = model::collect_arrays(grads);
    auto ms = model::collect_arrays(opt.m);
    auto vs = model::collect_arrays(opt.v);
    for (std::size_t k = 0; k < ws.size(); ++k) {
        for (std::size_t i = 0; i < ws[k].size; ++i) {
            double g = gs[k].data[i];
            double& m = ms[k].data[i];
            double& v = vs[k].data[i];
            m = tc.beta1 * m + (1.0 - tc.beta1) * g;
            v = tc.beta2 * v + (1.0 - tc.beta2) * g * g;
            double m_hat = m / bc1;
            double v_hat = v / bc2;
            ws[k].data[i] -= tc.learning_rate * m_hat / (std::sqrt(v_hat) + tc.epsilon);
        }
    }
}

namespace {

double batch_loss_only(const std::vector<model::SampleInput>& batch, const model::ModelWeights& w,
                       const model::ModelConfig& cfg) {
    double total = 0.0;
    for (const model::SampleInput& s : batch) {
        model::ForwardOutput out = model::forward(s, w, cfg, cfg.train_horizons);
        total += model::loss(out, s.actual_sizes, s.binned.retweet_counts, cfg.zeta);
    }
    return total / static_cast<double>(batch.size());
}

}  // namespace

std::map<std::string, double> grad_check(const model::ModelWeights& w,
                                         const std::vector<model::SampleInput>& batch,
                                         const model::ModelConfig& cfg, double epsilon,
                                         std::uint64_t seed) {
    model::ModelWeights local = w;
    model::ModelWeights grads = model::zeros_like(w);
    double base_loss = batch_backward(batch, local, cfg, grads);

    // Central differences cancel ~16 digits of the loss; gradients below
    // noise/(2 eps) cannot be resolved by the oracle, so the relative error
    // uses a loss-scaled zero band as its floor.
    const double floor = 1e-6 * std::max(1.0, std::abs(base_loss));

    Rng rng(seed);
    std::map<std::string, double> report;
    auto arrays = model::collect_arrays(local);
    auto grad_arrays = model::collect_arrays(grads);
    for (std::size_t k = 0; k < arrays.size(); ++k) {
        model::ArrayRef& a = arrays[k];
        std::size_t n_check = std::max<std::size_t>(1, a.size / 100);
        std::unordered_set<std::size_t> picked;
        while (picked.size() < n_check) picked.insert(rng.below(a.size));

        double worst = 0.0;
        for (std::size_t idx : picked) {
            double saved = a.data[idx];
            a.data[idx] = saved + epsilon;
            double lp = batch_loss_only(batch, local, cfg);
            a.data[idx] = saved - epsilon;
            double lm = batch_loss_only(batch, local, cfg);
            a.data[idx] = saved;
            double fd = (lp - lm) / (2.0 * epsilon);
            double an = grad_arrays[k].data[idx];
            double denom = std::max({std::abs(an), std::abs(fd), floor});
            worst = std::max(worst, std::abs(an - fd) / denom);
        }
        report[a.name] = worst;
    }
    return report;
}

TrainResult train(std::vector<model::SampleInput> dataset, const model::ModelConfig& cfg,
                  const TrainConfig& tc, const std::function<void(const EpochLog&)>& on_epoch,
                  const model::ModelWeights* initial) {
    cfg.validate();
    tc.validate();
    if (dataset.empty()) throw std::invalid_argument("empty dataset");
    for (const auto& s : dataset)
        if (s.actual_sizes.size() != cfg.train_horizons.size())
            throw std::invalid_argument("sample lacks actual sizes for the train horizons");

    // Horizon used for model selection: 24h, or the closest trained one.
    std::size_t sel = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cfg.train_horizons.size(); ++i) {
        double gap = std::abs(cfg.train_horizons[i] - 24.0);
        if (gap < best_gap) {
            best_gap = gap;
            sel = i;
        }
    }

    Rng rng(tc.seed);
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto shuffle = [&](std::vector<std::size_t>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
    };
    shuffle(order);

    std::size_t dev_count =
        std::max<std::size_t>(1, static_cast<std::size_t>(
                                     std::llround(tc.dev_fraction * static_cast<double>(dataset.size()))));
    if (dev_count >= dataset.size()) dev_count = dataset.size() - 1;
    std::vector<std::size_t> dev_idx(order.begin(), order.begin() + static_cast<long>(dev_count));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<long>(dev_count), order.end());

    model::ModelWeights weights = initial ? *initial : init_weights(cfg, tc.seed);
    OptimizerState opt = make_optimizer_state(weights);
    model::ModelWeights grads = model::zeros_like(weights);

    TrainResult result;
    result.best = weights;
    double best_dev = std::numeric_limits<double>::infinity();
    int consecutive_bad = 0;

    std::vector<double> horizon24{cfg.train_horizons[sel]};
    auto dev_eval = [&](const model::ModelWeights& w, double& mape_out, double& tau_out) {
        std::vector<double> pred, actual;
        pred.reserve(dev_idx.size());
        actual.reserve(dev_idx.size());
        for (std::size_t i : dev_idx) {
            model::ForwardOutput out = model::forward(dataset[i], w, cfg, horizon24);
            pred.push_back(out.predictions[0]);
            actual.push_back(dataset[i].actual_sizes[sel]);
        }
        double m = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            m += std::abs(actual[i] - pred[i]) / actual[i];
        mape_out = 100.0 * m / static_cast<double>(pred.size());
        try {
            tau_out = metrics::kendall_tau(pred, actual);
        } catch (const NumericError&) {
            tau_out = std::numeric_limits<double>::quiet_NaN();
        }
    };

    for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        shuffle(train_idx);
        double loss_sum = 0.0;
        std::size_t loss_n = 0;
        for (std::size_t start = 0; start < train_idx.size(); start += tc.batch_size) {
            std::size_t end = std::min(train_idx.size(), start + tc.batch_size);
            std::vector<model::SampleInput> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(dataset[train_idx[i]]);
            double bl;
            try {
                bl = batch_backward(batch, weights, cfg, grads);
            } catch (const NumericError&) {
                if (++consecutive_bad >= 3)
                    throw NumericError("persistent non-finite loss (3 consecutive batches)");
                continue;
            }
            consecutive_bad = 0;
            loss_sum += bl * static_cast<double>(end - start);
            loss_n += end - start;
            adam_step(weights, grads, opt, tc);
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = loss_n ? loss_sum / static_cast<double>(loss_n)
                                : std::numeric_limits<double>::quiet_NaN();
        dev_eval(weights, log.dev_mape24, log.dev_tau24);
        log.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(log);
        if (on_epoch) on_epoch(log);

        if (log.dev_mape24 < best_dev) {
            best_dev = log.dev_mape24;
            result.best = weights;
            result.best_epoch = epoch;
        }
    }
    return result;
}

model::ModelConfig toy_config(model::Mode mode) {
    model::ModelConfig cfg;
    cfg.mode = mode;
    cfg.bin_minutes = 15.0;
    cfg.window_hours = 2.0;  // 8 bins
    cfg.train_horizons = {12, 24};
    cfg.quad_steps = 64;
    cfg.state_size = 4;
    cfg.embed_dim = 8;
    cfg.max_len_tweet = 6;
    cfg.max_len_news = 6;
    cfg.news_cap = 4;
    cfg.vocab_size = 24;
    cfg.validate();
    return cfg;
}

std::vector<model::SampleInput> make_gradcheck_batch(const model::ModelConfig& cfg,
                                                     std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t bins = cfg.bins();
    std::vector<model::SampleInput> batch;
    for (int k = 0; k < 2; ++k) {
        model::SampleInput s;
        s.id = "toy" + std::to_string(k);
        s.binned.bin_width_hours = cfg.bin_width_hours();
        s.binned.window_hours = cfg.window_hours;
        s.binned.retweet_counts.resize(bins);
        s.binned.follower_sums.resize(bins);
        for (std::size_t m = 0; m < bins; ++m) {
            s.binned.retweet_counts[m] = static_cast<std::int64_t>(rng.below(9));
            s.binned.follower_sums[m] = static_cast<std::int64_t>(rng.below(400));
        }
        s.binned.retweet_counts[0] += 1;  // at least one observed event

        auto random_text = [&](std::size_t max_len, std::size_t len) {
            text::TokenSeq seq;
            seq.ids.assign(max_len, text::kPadId);
            seq.len = len;
            for (std::size_t i = 0; i < len; ++i)
                seq.ids[i] = 2 + static_cast<int>(rng.below(cfg.vocab_size - 2));
            return seq;
        };
        s.tweet = random_text(cfg.max_len_tweet, 4 + rng.below(3));
        s.news.push_back(random_text(cfg.max_len_news, 3 + rng.below(3)));
        s.news.push_back(random_text(cfg.max_len_news, 3 + rng.below(3)));

        for (std::size_t i = 0; i < cfg.train_horizons.size(); ++i)
            s.actual_sizes.push_back(5.0 + rng.uniform(0.0, 40.0));
        batch.push_back(std::move(s));
    }
    return batch;
}

}  // namespace gammacas::train
