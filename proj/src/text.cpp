#include "gammacas/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace gammacas::text {

Vocab::Vocab() {
    tokens = {"<pad>", "<unk>"};
    index = {{"<pad>", kPadId}, {"<unk>", kUnkId}};
}

int Vocab::add(const std::string& token) {
    auto it = index.find(token);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(tokens.size());
    tokens.push_back(token);
    index.emplace(token, id);
    return id;
}

int Vocab::lookup(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? kUnkId : it->second;
}

std::vector<std::string> clean_tokens(const std::string& raw) {
    std::vector<std::string> out;
    std::string cur;
    std::size_t i = 0;
    const std::size_t n = raw.size();
    auto flush = [&]() {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    auto starts_with = [&](const char* prefix) {
        std::size_t k = 0;
        while (prefix[k] != '\0') {
            if (i + k >= n || std::tolower(static_cast<unsigned char>(raw[i + k])) != prefix[k])
                return false;
            ++k;
        }
        return true;
    };
    while (i < n) {
        unsigned char ch = static_cast<unsigned char>(raw[i]);
        bool at_boundary = cur.empty();
        if (at_boundary && (starts_with("http://") || starts_with("https://") ||
                            starts_with("www."))) {
            while (i < n && !std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
            continue;
        }
        if (at_boundary && ch == '@') {
            ++i;
            while (i < n && (std::isalnum(static_cast<unsigned char>(raw[i])) || raw[i] == '_')) ++i;
            continue;
        }
        if (std::isalnum(ch)) {
            cur.push_back(static_cast<char>(std::tolower(ch)));
            ++i;
        } else {
            flush();
            ++i;
        }
    }
    flush();
    return out;
}

TokenSeq tokenize(const std::string& raw, const Vocab& vocab, std::size_t max_len) {
    if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    TokenSeq seq;
    seq.ids.assign(max_len, kPadId);
    for (const std::string& tok : clean_tokens(raw)) {
        if (seq.len >= max_len) break;
        seq.ids[seq.len++] = vocab.lookup(tok);
    }
    return seq;
}

Mat positional_encoding(std::size_t max_positions, std::size_t dim, double base) {
    if (dim % 2 != 0) throw std::invalid_argument("positional dim must be even");
    if (!(base > 1.0)) throw std::invalid_argument("positional base must be > 1");
    Mat p(max_positions, dim);
    for (std::size_t i = 0; i < max_positions; ++i) {
        for (std::size_t k = 0; 2 * k < dim; ++k) {
            double omega = std::pow(base, -2.0 * static_cast<double>(k) / static_cast<double>(dim));
            double angle = static_cast<double>(i) * omega;
            p(i, 2 * k) = std::sin(angle);
            p(i, 2 * k + 1) = std::cos(angle);
        }
    }
    return p;
}

Vec encode_text(const TokenSeq& seq, const TextEncoderWeights& w, TextCache* cache) {
    const std::size_t d = w.dim();
    Vec out(d, 0.0);
    if (cache) {
        cache->ids = seq.ids;
        cache->len = seq.len;
        cache->alpha.clear();
    }
    if (seq.len == 0) {
        if (cache) cache->out = out;
        return out;
    }
    if (seq.len > w.positional.rows) throw std::invalid_argument("text longer than positional table");

    // Scores from raw embeddings; softmax over the true length only, so
    // padding receives exactly zero attention mass.
    Vec scores(seq.len);
    double smax = -1e300;
    for (std::size_t i = 0; i < seq.len; ++i) {
        const double* v = &w.embedding.a[static_cast<std::size_t>(seq.ids[i]) * d];
        double s = w.attn_b;
        for (std::size_t j = 0; j < d; ++j) s += w.attn_w[j] * v[j];
        scores[i] = s;
        smax = std::max(smax, s);
    }
    Vec alpha(seq.len);
    double z = 0.0;
    for (std::size_t i = 0; i < seq.len; ++i) {
        alpha[i] = std::exp(scores[i] - smax);
        z += alpha[i];
    }
    for (std::size_t i = 0; i < seq.len; ++i) alpha[i] /= z;

    for (std::size_t i = 0; i < seq.len; ++i) {
        const double* v = &w.embedding.a[static_cast<std::size_t>(seq.ids[i]) * d];
        const double* p = &w.positional.a[i * d];
        for (std::size_t j = 0; j < d; ++j) out[j] += alpha[i] * (v[j] + p[j]);
    }
    if (cache) {
        cache->alpha = std::move(alpha);
        cache->out = out;
    }
    return out;
}

void backward_encode_text(const TextCache& cache, const Vec& d_out, const TextEncoderWeights& w,
                          Mat& d_embedding, Vec& d_attn_w, double& d_attn_b) {
    if (cache.len == 0) return;
    const std::size_t d = w.dim();

    // out = sum_i alpha_i (v_i + P_i); d_alpha_i = d_out . (v_i + P_i).
    Vec d_alpha(cache.len);
    for (std::size_t i = 0; i < cache.len; ++i) {
        const double* v = &w.embedding.a[static_cast<std::size_t>(cache.ids[i]) * d];
        const double* p = &w.positional.a[i * d];
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += d_out[j] * (v[j] + p[j]);
        d_alpha[i] = acc;
        // Value-path gradient into the embedding row.
        double* ge = &d_embedding.a[static_cast<std::size_t>(cache.ids[i]) * d];
        for (std::size_t j = 0; j < d; ++j) ge[j] += cache.alpha[i] * d_out[j];
    }

    // Softmax backward: d_score_i = alpha_i (d_alpha_i - sum_k alpha_k d_alpha_k).
    double mixed = 0.0;
    for (std::size_t i = 0; i < cache.len; ++i) mixed += cache.alpha[i] * d_alpha[i];
    for (std::size_t i = 0; i < cache.len; ++i) {
        double ds = cache.alpha[i] * (d_alpha[i] - mixed);
        const double* v = &w.embedding.a[static_cast<std::size_t>(cache.ids[i]) * d];
        double* ge = &d_embedding.a[static_cast<std::size_t>(cache.ids[i]) * d];
        for (std::size_t j = 0; j < d; ++j) {
            d_attn_w[j] += ds * v[j];
            ge[j] += ds * w.attn_w[j];  // scores read the raw embedding
        }
        d_attn_b += ds;
    }
}

Vec news_tweet_attention(const Vec& tweet, const std::vector<Vec>& news, FusionCache* cache) {
    const std::size_t d = tweet.size();
    Vec out(d, 0.0);
    if (cache) cache->beta.clear();
    if (news.empty()) return out;

    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    Vec q(news.size());
    double qmax = -1e300;
    for (std::size_t j = 0; j < news.size(); ++j) {
        q[j] = dot(tweet, news[j]) * scale;
        qmax = std::max(qmax, q[j]);
    }
    Vec beta(news.size());
    double z = 0.0;
    for (std::size_t j = 0; j < news.size(); ++j) {
        beta[j] = std::exp(q[j] - qmax);
        z += beta[j];
    }
    for (std::size_t j = 0; j < news.size(); ++j) beta[j] /= z;

    for (std::size_t j = 0; j < news.size(); ++j)
        for (std::size_t k = 0; k < d; ++k) out[k] += beta[j] * news[j][k];
    if (cache) cache->beta = std::move(beta);
    return out;
}

void backward_news_tweet_attention(const FusionCache& cache, const Vec& d_out, const Vec& tweet,
                                   const std::vector<Vec>& news, Vec& d_tweet,
                                   std::vector<Vec>& d_news) {
    if (news.empty()) return;
    const std::size_t d = tweet.size();
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    Vec d_beta(news.size());
    for (std::size_t j = 0; j < news.size(); ++j) {
        d_beta[j] = dot(d_out, news[j]);
        for (std::size_t k = 0; k < d; ++k) d_news[j][k] += cache.beta[j] * d_out[k];
    }
    double mixed = 0.0;
    for (std::size_t j = 0; j < news.size(); ++j) mixed += cache.beta[j] * d_beta[j];
    for (std::size_t j = 0; j < news.size(); ++j) {
        double dq = cache.beta[j] * (d_beta[j] - mixed) * scale;
        for (std::size_t k = 0; k < d; ++k) {
            d_tweet[k] += dq * news[j][k];
            d_news[j][k] += dq * tweet[k];
        }
    }
}

}  // namespace gammacas::text
