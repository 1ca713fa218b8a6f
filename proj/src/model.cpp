#include "gammacas/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gammacas::model {

Mode mode_from_string(const std::string& s) {
    if (s == "full") return Mode::full;
    if (s == "text_only") return Mode::text_only;
    if (s == "cascade_only") return Mode::cascade_only;
    if (s == "plain_lstm") return Mode::plain_lstm;
    throw std::invalid_argument("unknown mode: " + s);
}

std::string mode_to_string(Mode m) {
    switch (m) {
        case Mode::full: return "full";
        case Mode::text_only: return "text_only";
        case Mode::cascade_only: return "cascade_only";
        case Mode::plain_lstm: return "plain_lstm";
    }
    return "?";
}

std::size_t ModelConfig::bins() const {
    double m = window_hours * 60.0 / bin_minutes;
    auto rounded = static_cast<std::size_t>(std::llround(m));
    return rounded;
}

void ModelConfig::validate() const {
    if (!(bin_minutes > 0.0)) throw std::invalid_argument("bin width must be > 0");
    if (!(window_hours > 0.0)) throw std::invalid_argument("window must be > 0");
    double m = window_hours * 60.0 / bin_minutes;
    if (std::abs(m - std::llround(m)) > 1e-9 || std::llround(m) < 1)
        throw std::invalid_argument("window must be an integer number of bins");
    for (double h : train_horizons)
        if (!(h > window_hours)) throw std::invalid_argument("horizons must exceed the window");
    if (train_horizons.empty()) throw std::invalid_argument("at least one horizon required");
    if (!(zeta >= 0.0 && zeta < 1.0)) throw std::invalid_argument("zeta must be in [0, 1)");
    if (quad_steps < 1) throw std::invalid_argument("quad steps must be >= 1");
    if (state_size < 1) throw std::invalid_argument("state size must be >= 1");
    if (embed_dim < 2 || embed_dim % 2 != 0) throw std::invalid_argument("embed dim must be even");
    if (max_len_tweet < 1 || max_len_news < 1) throw std::invalid_argument("max text length >= 1");
    if (vocab_size < 2) throw std::invalid_argument("vocab holds at least pad+unk");
}

namespace {

bool uses_text(Mode m) { return m != Mode::cascade_only; }
bool uses_plain_cell(Mode m) { return m == Mode::plain_lstm; }

void push(std::vector<ArrayRef>& out, const std::string& name, Mat& m) {
    out.push_back({name, {m.rows, m.cols}, m.a.data(), m.a.size()});
}
void push(std::vector<ArrayRef>& out, const std::string& name, Vec& v) {
    out.push_back({name, {v.size()}, v.data(), v.size()});
}
void push(std::vector<ArrayRef>& out, const std::string& name, double& x) {
    out.push_back({name, {1}, &x, 1});
}

}  // namespace

std::vector<ArrayRef> collect_arrays(ModelWeights& w) {
    std::vector<ArrayRef> out;
    if (uses_plain_cell(w.mode)) {
        push(out, "plain.input_w", w.plain.w_input);
        push(out, "plain.input_b", w.plain.b_input);
        push(out, "plain.forget_w", w.plain.w_forget);
        push(out, "plain.forget_b", w.plain.b_forget);
        push(out, "plain.output_w", w.plain.w_output);
        push(out, "plain.output_b", w.plain.b_output);
        push(out, "plain.cand_w", w.plain.w_cand);
        push(out, "plain.cand_b", w.plain.b_cand);
    } else {
        push(out, "cell.forget_w", w.cell.w_forget);
        push(out, "cell.forget_b", w.cell.b_forget);
        push(out, "cell.input_w", w.cell.w_input);
        push(out, "cell.input_b", w.cell.b_input);
        push(out, "cell.cand_w", w.cell.w_cand);
        push(out, "cell.cand_b", w.cell.b_cand);
        push(out, "cell.follower_w", w.cell.w_follower);
        push(out, "cell.follower_b", w.cell.b_follower);
        push(out, "cell.out_w", w.cell.w_out);
        push(out, "cell.out_b", w.cell.b_out);
    }
    push(out, "norm.retweet_scale", w.norm_retweet.scale);
    push(out, "norm.retweet_shift", w.norm_retweet.shift);
    push(out, "norm.follower_scale", w.norm_follower.scale);
    push(out, "norm.follower_shift", w.norm_follower.shift);
    if (uses_text(w.mode)) {
        push(out, "text.embedding", w.text.embedding);
        push(out, "text.attn_w", w.text.attn_w);
        push(out, "text.attn_b", w.text.attn_b);
    }
    push(out, "head.scale_w", w.head.w_scale);
    push(out, "head.scale_b", w.head.b_scale);
    push(out, "head.growth_w", w.head.w_growth);
    push(out, "head.growth_b", w.head.b_growth);
    push(out, "head.decay_w", w.head.w_decay);
    push(out, "head.decay_b", w.head.b_decay);
    if (uses_text(w.mode)) {
        push(out, "head.mod_w", w.head.w_mod);
        push(out, "head.mod_b", w.head.b_mod);
    }
    return out;
}

std::vector<ArrayRef> collect_arrays(const ModelWeights& w) {
    return collect_arrays(const_cast<ModelWeights&>(w));
}

ModelWeights make_weight_shell(const ModelConfig& cfg) {
    cfg.validate();
    const std::size_t s = cfg.state_size;
    const std::size_t d = cfg.embed_dim;
    ModelWeights w;
    w.mode = cfg.mode;
    if (uses_plain_cell(cfg.mode)) {
        w.plain.w_input = Mat(2 + s, s);
        w.plain.w_forget = Mat(2 + s, s);
        w.plain.w_output = Mat(2 + s, s);
        w.plain.w_cand = Mat(2 + s, s);
        w.plain.b_input.assign(s, 0.0);
        w.plain.b_forget.assign(s, 0.0);
        w.plain.b_output.assign(s, 0.0);
        w.plain.b_cand.assign(s, 0.0);
    } else {
        w.cell.w_forget = Mat(1 + s, s);
        w.cell.w_input = Mat(1 + s, s);
        w.cell.w_cand = Mat(1 + s, s);
        w.cell.b_forget.assign(s, 0.0);
        w.cell.b_input.assign(s, 0.0);
        w.cell.b_cand.assign(s, 0.0);
        w.cell.w_follower.assign(s, 0.0);
        w.cell.b_follower.assign(s, 0.0);
        w.cell.w_out = Mat(s, s);
        w.cell.b_out.assign(s, 0.0);
    }
    w.norm_retweet = {0.0, 0.0};
    w.norm_follower = {0.0, 0.0};
    if (uses_text(cfg.mode)) {
        w.text.embedding = Mat(cfg.vocab_size, d);
        w.text.attn_w.assign(d, 0.0);
        w.text.attn_b = 0.0;
        w.text.positional =
            text::positional_encoding(cfg.positional_rows(), d,
                                      static_cast<double>(cfg.positional_rows()));
        w.head.w_mod.assign(d, 0.0);
    }
    w.head.w_scale.assign(s, 0.0);
    w.head.w_growth.assign(s, 0.0);
    w.head.w_decay.assign(s, 0.0);
    return w;
}

ModelWeights zeros_like(const ModelWeights& w) {
    ModelWeights z = w;
    for (ArrayRef& a : collect_arrays(z)) std::fill(a.data, a.data + a.size, 0.0);
    return z;
}

std::array<double, 3> per_bin_params(const Vec& hidden, const HeadWeights& head) {
    if (hidden.size() != head.w_scale.size()) throw std::invalid_argument("hidden size mismatch");
    double za = dot(head.w_scale, hidden) + head.b_scale;
    double zg = dot(head.w_growth, hidden) + head.b_growth;
    double zl = dot(head.w_decay, hidden) + head.b_decay;
    return {relu(za), relu(zg), softplus(zl)};
}

double modulate_scale(double a_prime, const Vec& x_mod, const HeadWeights& head) {
    if (x_mod.size() != head.w_mod.size()) throw std::invalid_argument("modulation size mismatch");
    return a_prime * relu(dot(head.w_mod, x_mod) + head.b_mod);
}

growth::GrowthParams pool_params(const std::vector<std::array<double, 3>>& per_bin) {
    if (per_bin.empty()) throw std::invalid_argument("pool over empty bin list");
    growth::GrowthParams p;
    p.scale = p.growth = p.decay = 0.0;
    for (const auto& t : per_bin) {
        p.scale += t[0];
        p.growth += t[1];
        p.decay += t[2];
    }
    double inv = 1.0 / static_cast<double>(per_bin.size());
    p.scale *= inv;
    p.growth *= inv;
    p.decay *= inv;
    return p;
}

Vec autoregressive_forecast(const std::vector<std::array<double, 3>>& per_bin,
                            double bin_width_hours) {
    if (per_bin.size() < 2) throw std::invalid_argument("autoregressive forecast needs >= 2 bins");
    Vec out(per_bin.size() - 1, 0.0);
    for (std::size_t j = 0; j + 1 < per_bin.size(); ++j) {
        double tc = (static_cast<double>(j) + 1.5) * bin_width_hours;  // midpoint of bin j+2
        double a = per_bin[j][0], g = per_bin[j][1], l = per_bin[j][2];
        out[j] = a * std::exp(g * std::log(tc) - l * tc) * bin_width_hours;
    }
    return out;
}

ForwardOutput forward(const SampleInput& input, const ModelWeights& w, const ModelConfig& cfg,
                      const std::vector<double>& horizons, ForwardCache* cache) {
    const std::size_t m_bins = cfg.bins();
    if (input.binned.bins() != m_bins) throw std::invalid_argument("bin count mismatch");
    const Mode mode = cfg.mode;

    ForwardCache local;
    ForwardCache& cc = cache ? *cache : local;
    const bool training = cache != nullptr;

    cc.norm = seq::normalize_counts(input.binned, w.norm_retweet, w.norm_follower);

    const std::vector<Vec>* hidden = nullptr;
    if (mode == Mode::plain_lstm) {
        cc.plain_trace = seq::encode_sequence_plain(cc.norm.r, cc.norm.f, w.plain, training);
        hidden = &cc.plain_trace.hidden;
    } else {
        // h0 all-ones (the multiplicative hidden update makes zero absorbing),
        // c0 zero.
        seq::CellState init{Vec(cfg.state_size, 0.0), Vec(cfg.state_size, 1.0)};
        cc.cell_trace = seq::encode_sequence(cc.norm.r, cc.norm.f, w.cell, init, training);
        hidden = &cc.cell_trace.hidden;
    }

    ForwardOutput out;
    double mu = 1.0;
    if (uses_text(mode)) {
        cc.x_tweet = text::encode_text(input.tweet, w.text, &cc.tweet_cache);
        if (mode == Mode::text_only) {
            cc.x_mod = cc.x_tweet;
        } else {
            cc.news_vecs.clear();
            cc.news_caches.assign(input.news.size(), {});
            for (std::size_t j = 0; j < input.news.size(); ++j)
                cc.news_vecs.push_back(text::encode_text(input.news[j], w.text, &cc.news_caches[j]));
            cc.x_mod = text::news_tweet_attention(cc.x_tweet, cc.news_vecs, &cc.fusion);
            out.news_beta = cc.fusion.beta;
        }
        cc.mu_pre = dot(w.head.w_mod, cc.x_mod) + w.head.b_mod;
        mu = relu(cc.mu_pre);
        out.tweet_alpha = cc.tweet_cache.alpha;
    }
    out.modulation = mu;

    cc.z_scale.assign(m_bins, 0.0);
    cc.z_growth.assign(m_bins, 0.0);
    cc.z_decay.assign(m_bins, 0.0);
    cc.a_prime.assign(m_bins, 0.0);
    out.per_bin.resize(m_bins);
    for (std::size_t m = 0; m < m_bins; ++m) {
        const Vec& h = (*hidden)[m];
        cc.z_scale[m] = dot(w.head.w_scale, h) + w.head.b_scale;
        cc.z_growth[m] = dot(w.head.w_growth, h) + w.head.b_growth;
        cc.z_decay[m] = dot(w.head.w_decay, h) + w.head.b_decay;
        cc.a_prime[m] = relu(cc.z_scale[m]);
        double a = uses_text(mode) ? cc.a_prime[m] * mu : cc.a_prime[m];
        out.per_bin[m] = {a, relu(cc.z_growth[m]), softplus(cc.z_decay[m])};
    }

    out.pooled = pool_params(out.per_bin);
    out.horizons = horizons;
    out.predictions.reserve(horizons.size());
    growth::QuadratureConfig qc{cfg.quad_steps};
    for (double hz : horizons)
        out.predictions.push_back(growth::cascade_size_quadrature(out.pooled, hz, qc));
    if (m_bins >= 2)
        out.ar_forecasts = autoregressive_forecast(out.per_bin, cfg.bin_width_hours());
    return out;
}

double loss(const ForwardOutput& out, const std::vector<double>& actual_sizes,
            const std::vector<std::int64_t>& retweet_counts, double zeta) {
    if (actual_sizes.size() != out.predictions.size())
        throw std::invalid_argument("actual sizes / predictions mismatch");
    double mape = 0.0;
    for (std::size_t i = 0; i < actual_sizes.size(); ++i) {
        if (!(actual_sizes[i] > 0.0))
            throw std::domain_error("actual cascade size must be positive");
        mape += std::abs(actual_sizes[i] - out.predictions[i]) / actual_sizes[i];
    }
    mape /= static_cast<double>(actual_sizes.size());

    double ar = 0.0;
    const std::size_t targets = out.ar_forecasts.size();
    if (targets > 0) {
        if (retweet_counts.size() != targets + 1)
            throw std::invalid_argument("retweet counts / forecasts mismatch");
        for (std::size_t j = 0; j < targets; ++j) {
            double e = static_cast<double>(retweet_counts[j + 1]) - out.ar_forecasts[j];
            ar += e * e;
        }
        ar /= static_cast<double>(targets);
    }
    return mape + zeta * ar;
}

double loss_and_gradient(const SampleInput& input, const ModelWeights& w, const ModelConfig& cfg,
                         ModelWeights& grads, ForwardOutput* out_opt) {
    ForwardCache cc;
    ForwardOutput out = forward(input, w, cfg, cfg.train_horizons, &cc);
    const double j_value = loss(out, input.actual_sizes, input.binned.retweet_counts, cfg.zeta);

    const std::size_t m_bins = cfg.bins();
    const std::size_t s = cfg.state_size;
    const Mode mode = cfg.mode;
    const double mu = out.modulation;

    // MAPE term -> pooled parameters through the quadrature.
    double d_pool_scale = 0.0, d_pool_growth = 0.0, d_pool_decay = 0.0;
    const double inv_h = 1.0 / static_cast<double>(out.horizons.size());
    growth::QuadratureConfig qc{cfg.quad_steps};
    for (std::size_t i = 0; i < out.horizons.size(); ++i) {
        double y = out.predictions[i];
        double act = input.actual_sizes[i];
        double sign = y > act ? 1.0 : (y < act ? -1.0 : 0.0);
        double dy = sign * inv_h / act;
        if (dy == 0.0) continue;
        auto qr = growth::quadrature_with_gradient(out.pooled, out.horizons[i], qc);
        d_pool_scale += dy * qr.d_scale;
        d_pool_growth += dy * qr.d_growth;
        d_pool_decay += dy * qr.d_decay;
    }

    Vec d_a(m_bins, 0.0), d_g(m_bins, 0.0), d_l(m_bins, 0.0);
    const double inv_m = 1.0 / static_cast<double>(m_bins);
    for (std::size_t m = 0; m < m_bins; ++m) {
        d_a[m] = d_pool_scale * inv_m;
        d_g[m] = d_pool_growth * inv_m;
        d_l[m] = d_pool_decay * inv_m;
    }

    // Autoregressive MSE term -> per-bin parameters.
    const std::size_t targets = out.ar_forecasts.size();
    if (targets > 0) {
        const double width = cfg.bin_width_hours();
        for (std::size_t j = 0; j < targets; ++j) {
            double e = out.ar_forecasts[j] - static_cast<double>(input.binned.retweet_counts[j + 1]);
            double d_hat = cfg.zeta * 2.0 * e / static_cast<double>(targets);
            if (d_hat == 0.0) continue;
            double tc = (static_cast<double>(j) + 1.5) * width;
            double a = out.per_bin[j][0], g = out.per_bin[j][1], l = out.per_bin[j][2];
            double base = std::exp(g * std::log(tc) - l * tc) * width;
            d_a[j] += d_hat * base;
            d_g[j] += d_hat * a * base * std::log(tc);
            d_l[j] -= d_hat * a * base * tc;
        }
    }

    // Split the modulated scale gradient.
    double d_mu = 0.0;
    Vec d_a_prime(m_bins, 0.0);
    if (uses_text(mode)) {
        for (std::size_t m = 0; m < m_bins; ++m) {
            d_a_prime[m] = d_a[m] * mu;
            d_mu += d_a[m] * cc.a_prime[m];
        }
    } else {
        d_a_prime = d_a;
    }

    // Heads -> hidden states.
    const std::vector<Vec>& hidden =
        mode == Mode::plain_lstm ? cc.plain_trace.hidden : cc.cell_trace.hidden;
    std::vector<Vec> d_hidden(m_bins, Vec(s, 0.0));
    for (std::size_t m = 0; m < m_bins; ++m) {
        double dza = cc.z_scale[m] > 0.0 ? d_a_prime[m] : 0.0;
        double dzg = cc.z_growth[m] > 0.0 ? d_g[m] : 0.0;
        double dzl = d_l[m] * sigmoid(cc.z_decay[m]);
        const Vec& h = hidden[m];
        for (std::size_t k = 0; k < s; ++k) {
            grads.head.w_scale[k] += dza * h[k];
            grads.head.w_growth[k] += dzg * h[k];
            grads.head.w_decay[k] += dzl * h[k];
            d_hidden[m][k] = dza * w.head.w_scale[k] + dzg * w.head.w_growth[k] +
                             dzl * w.head.w_decay[k];
        }
        grads.head.b_scale += dza;
        grads.head.b_growth += dzg;
        grads.head.b_decay += dzl;
    }

    // Modulation head and text paths.
    if (uses_text(mode)) {
        double d_mu_pre = cc.mu_pre > 0.0 ? d_mu : 0.0;
        const std::size_t d = cfg.embed_dim;
        Vec d_x_mod(d, 0.0);
        for (std::size_t k = 0; k < d; ++k) {
            grads.head.w_mod[k] += d_mu_pre * cc.x_mod[k];
            d_x_mod[k] = d_mu_pre * w.head.w_mod[k];
        }
        grads.head.b_mod += d_mu_pre;

        Vec d_x_tweet(d, 0.0);
        if (mode == Mode::text_only) {
            d_x_tweet = d_x_mod;
        } else {
            std::vector<Vec> d_news(cc.news_vecs.size(), Vec(d, 0.0));
            text::backward_news_tweet_attention(cc.fusion, d_x_mod, cc.x_tweet, cc.news_vecs,
                                                d_x_tweet, d_news);
            for (std::size_t j = 0; j < cc.news_vecs.size(); ++j)
                text::backward_encode_text(cc.news_caches[j], d_news[j], w.text,
                                           grads.text.embedding, grads.text.attn_w,
                                           grads.text.attn_b);
        }
        text::backward_encode_text(cc.tweet_cache, d_x_tweet, w.text, grads.text.embedding,
                                   grads.text.attn_w, grads.text.attn_b);
    }

    // Sequence encoder BPTT, then the count normalizers.
    seq::SequenceBackResult back;
    if (mode == Mode::plain_lstm)
        back = seq::backward_sequence_plain(cc.plain_trace, d_hidden, w.plain, grads.plain);
    else
        back = seq::backward_sequence(cc.cell_trace, d_hidden, w.cell, grads.cell);
    for (std::size_t m = 0; m < m_bins; ++m) {
        grads.norm_retweet.scale +=
            back.d_r[m] * std::log1p(static_cast<double>(input.binned.retweet_counts[m]));
        grads.norm_retweet.shift += back.d_r[m];
        grads.norm_follower.scale +=
            back.d_f[m] * std::log1p(static_cast<double>(input.binned.follower_sums[m]));
        grads.norm_follower.shift += back.d_f[m];
    }

    if (out_opt) *out_opt = std::move(out);
    return j_value;
}

namespace {

void put_bytes(std::ofstream& f, const void* p, std::size_t n) {
    f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
void put_u8(std::ofstream& f, std::uint8_t v) { put_bytes(f, &v, 1); }
void put_u16(std::ofstream& f, std::uint16_t v) {
    std::uint8_t b[2] = {static_cast<std::uint8_t>(v & 0xff), static_cast<std::uint8_t>(v >> 8)};
    put_bytes(f, b, 2);
}
void put_u32(std::ofstream& f, std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xff);
    put_bytes(f, b, 4);
}
void put_f32(std::ofstream& f, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(f, bits);
}

void get_bytes(std::ifstream& f, void* p, std::size_t n) {
    f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (f.gcount() != static_cast<std::streamsize>(n))
        throw DataError("weight file truncated");
}
std::uint8_t get_u8(std::ifstream& f) {
    std::uint8_t v;
    get_bytes(f, &v, 1);
    return v;
}
std::uint16_t get_u16(std::ifstream& f) {
    std::uint8_t b[2];
    get_bytes(f, b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}
std::uint32_t get_u32(std::ifstream& f) {
    std::uint8_t b[4];
    get_bytes(f, b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
float get_f32(std::ifstream& f) {
    std::uint32_t bits = get_u32(f);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void save_weights(const ModelWeights& w, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open weight file for writing: " + path);
    auto arrays = collect_arrays(w);
    put_bytes(f, "GCAS", 4);
    put_u32(f, 1);
    put_u32(f, static_cast<std::uint32_t>(arrays.size()));
    for (const ArrayRef& a : arrays) {
        put_u16(f, static_cast<std::uint16_t>(a.name.size()));
        put_bytes(f, a.name.data(), a.name.size());
        put_u8(f, static_cast<std::uint8_t>(a.dims.size()));
        for (std::size_t dim : a.dims) put_u32(f, static_cast<std::uint32_t>(dim));
        for (std::size_t i = 0; i < a.size; ++i) put_f32(f, static_cast<float>(a.data[i]));
    }
    if (!f) throw DataError("failed writing weight file: " + path);
}

ModelWeights load_weights(const std::string& path, const ModelConfig& cfg) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open weight file: " + path);
    char magic[4];
    get_bytes(f, magic, 4);
    if (std::memcmp(magic, "GCAS", 4) != 0) throw DataError("bad weight file magic");
    std::uint32_t version = get_u32(f);
    if (version != 1) throw DataError("unsupported weight file version");
    std::uint32_t count = get_u32(f);

    struct Loaded {
        std::vector<std::size_t> dims;
        Vec values;
    };
    std::vector<std::pair<std::string, Loaded>> entries;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint16_t name_len = get_u16(f);
        std::string name(name_len, '\0');
        get_bytes(f, name.data(), name_len);
        std::uint8_t rank = get_u8(f);
        Loaded entry;
        std::size_t total = 1;
        for (std::uint8_t r = 0; r < rank; ++r) {
            std::size_t dim = get_u32(f);
            entry.dims.push_back(dim);
            total *= dim;
        }
        entry.values.resize(total);
        for (std::size_t k = 0; k < total; ++k) entry.values[k] = static_cast<double>(get_f32(f));
        entries.emplace_back(std::move(name), std::move(entry));
    }

    ModelWeights w = make_weight_shell(cfg);
    auto arrays = collect_arrays(w);
    if (arrays.size() != entries.size())
        throw DataError("weight file holds " + std::to_string(entries.size()) +
                        " arrays, config expects " + std::to_string(arrays.size()));
    for (ArrayRef& a : arrays) {
        const Loaded* found = nullptr;
        for (const auto& [name, entry] : entries)
            if (name == a.name) {
                found = &entry;
                break;
            }
        if (!found) throw DataError("weight file is missing array " + a.name);
        if (found->dims != a.dims || found->values.size() != a.size)
            throw DataError("shape mismatch for array " + a.name);
        std::copy(found->values.begin(), found->values.end(), a.data);
    }
    return w;
}

}  // namespace gammacas::model
