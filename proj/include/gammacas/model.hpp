#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gammacas/common.hpp"
#include "gammacas/encoder.hpp"
#include "gammacas/growth.hpp"
#include "gammacas/text.hpp"

namespace gammacas::model {

enum class Mode { full, text_only, cascade_only, plain_lstm };

Mode mode_from_string(const std::string& s);
std::string mode_to_string(Mode m);

/// Per-bin parameter heads (scale/growth/decay from the hidden state) and the
/// text-driven modulation head.
struct HeadWeights {
    Vec w_scale;            // s
    double b_scale = 0.0;
    Vec w_growth;           // s
    double b_growth = 0.0;
    Vec w_decay;            // s
    double b_decay = 0.0;
    Vec w_mod;              // d
    double b_mod = 0.0;
};

struct ModelConfig {
    Mode mode = Mode::full;
    double bin_minutes = 5.0;
    double window_hours = 6.0;
    std::vector<double> train_horizons = {12, 18, 24, 36, 48, 72, 120, 240, 360};
    double zeta = 0.25;
    int quad_steps = 256;
    std::size_t state_size = 16;
    std::size_t embed_dim = 256;
    std::size_t max_len_tweet = 30;
    std::size_t max_len_news = 36;
    std::size_t news_cap = 64;
    std::size_t vocab_size = 2;

    double bin_width_hours() const { return bin_minutes / 60.0; }
    std::size_t bins() const;
    std::size_t positional_rows() const { return std::max(max_len_tweet, max_len_news); }
    void validate() const;
};

/// Every trainable array of the model, addressable by stable names via
/// collect_arrays. Which groups are active depends on the mode.
struct ModelWeights {
    Mode mode = Mode::full;
    seq::CellWeights cell;        // modified cell (all modes but plain_lstm)
    seq::PlainCellWeights plain;  // plain_lstm only
    seq::CountNorm norm_retweet;
    seq::CountNorm norm_follower;
    text::TextEncoderWeights text;  // all modes but cascade_only
    HeadWeights head;
};

struct ArrayRef {
    std::string name;
    std::vector<std::size_t> dims;
    double* data = nullptr;
    std::size_t size = 0;
};

/// Active arrays for the weights' mode, in a fixed order.
std::vector<ArrayRef> collect_arrays(ModelWeights& w);
std::vector<ArrayRef> collect_arrays(const ModelWeights& w);  // treat data as read-only

/// Allocates all active arrays (zero-filled) for the config, including the
/// fixed positional table.
ModelWeights make_weight_shell(const ModelConfig& cfg);
ModelWeights zeros_like(const ModelWeights& w);

/// One model input: binned observation plus tokenized texts, with optional
/// training targets (actual sizes aligned with ModelConfig::train_horizons).
struct SampleInput {
    std::string id;
    seq::BinnedObservation binned;
    text::TokenSeq tweet;
    std::vector<text::TokenSeq> news;
    std::vector<double> actual_sizes;
};

struct ForwardOutput {
    growth::GrowthParams pooled;
    std::vector<std::array<double, 3>> per_bin;  // modulated (A_m, gamma_m, lambda_m)
    std::vector<double> horizons;
    std::vector<double> predictions;  // aligned with horizons
    Vec ar_forecasts;                 // length M-1: predicted retweets in bins 2..M
    Vec tweet_alpha;
    Vec news_beta;
    double modulation = 1.0;
};

struct ForwardCache {
    seq::NormalizedBins norm;
    seq::SequenceTrace cell_trace;
    seq::PlainSequenceTrace plain_trace;
    text::TextCache tweet_cache;
    std::vector<text::TextCache> news_caches;
    std::vector<Vec> news_vecs;
    Vec x_tweet;
    Vec x_mod;
    text::FusionCache fusion;
    double mu_pre = 0.0;
    Vec z_scale, z_growth, z_decay;  // per-bin head pre-activations
    Vec a_prime;                     // relu(z_scale), before modulation
};

/// Per-bin parameter heads (relu, relu, softplus on the hidden state).
std::array<double, 3> per_bin_params(const Vec& hidden, const HeadWeights& head);

/// Eq.-17 style modulation: a_prime * relu(w_mod . x + b_mod).
double modulate_scale(double a_prime, const Vec& x_mod, const HeadWeights& head);

/// Arithmetic mean of the per-bin triples.
growth::GrowthParams pool_params(const std::vector<std::array<double, 3>>& per_bin);

/// Autoregressive forecast of bin m+1 from bin m's parameters, evaluated at
/// the target bin's midpoint (m + 1/2) * bin_width.
Vec autoregressive_forecast(const std::vector<std::array<double, 3>>& per_bin,
                            double bin_width_hours);

ForwardOutput forward(const SampleInput& input, const ModelWeights& w, const ModelConfig& cfg,
                      const std::vector<double>& horizons, ForwardCache* cache = nullptr);

/// Joint loss: mean-over-horizons MAPE plus zeta * mean squared AR residual
/// over the M-1 forecastable bins. Throws on non-positive actual sizes.
double loss(const ForwardOutput& out, const std::vector<double>& actual_sizes,
            const std::vector<std::int64_t>& retweet_counts, double zeta);

/// Forward + loss + exact reverse-mode gradients accumulated into `grads`
/// (same shapes as the weights). Returns the loss; optionally exposes the
/// forward output.
double loss_and_gradient(const SampleInput& input, const ModelWeights& w, const ModelConfig& cfg,
                         ModelWeights& grads, ForwardOutput* out = nullptr);

/// Binary weight file: magic "GCAS", u32 version 1, u32 array count, then per
/// array u16 name length, name, u8 rank, u32 dims, row-major f32 values.
/// Little-endian throughout.
void save_weights(const ModelWeights& w, const std::string& path);
ModelWeights load_weights(const std::string& path, const ModelConfig& cfg);

}  // namespace gammacas::model
