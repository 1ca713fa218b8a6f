#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "gammacas/common.hpp"

namespace gammacas::text {

constexpr int kPadId = 0;
constexpr int kUnkId = 1;

/// Token table. Index 0 is padding, 1 is unknown; real tokens start at 2.
struct Vocab {
    std::vector<std::string> tokens;  // tokens[0] = "<pad>", tokens[1] = "<unk>"
    std::unordered_map<std::string, int> index;

    Vocab();
    int add(const std::string& token);          // idempotent
    int lookup(const std::string& token) const; // kUnkId when absent
    std::size_t size() const { return tokens.size(); }
};

/// A news article headline with its publication time.
struct NewsRecord {
    double time = 0.0;  // epoch seconds
    std::string headline;
    std::string source;
};

/// Lowercases, strips URLs and @-mentions, splits on non-alphanumeric
/// boundaries.
std::vector<std::string> clean_tokens(const std::string& raw);

struct TokenSeq {
    std::vector<int> ids;   // padded to max_len
    std::size_t len = 0;    // true length (<= max_len)
};

TokenSeq tokenize(const std::string& raw, const Vocab& vocab, std::size_t max_len);

/// Sinusoidal table: entry (i, 2k) = sin(i * base^(-2k/d)),
/// (i, 2k+1) = cos(i * base^(-2k/d)). d must be even, base > 1.
Mat positional_encoding(std::size_t max_positions, std::size_t dim, double base);

struct TextEncoderWeights {
    Mat embedding;    // |V| x d, trainable
    Vec attn_w;       // d
    double attn_b = 0.0;
    Mat positional;   // fixed, not trainable, not serialized

    std::size_t dim() const { return attn_w.size(); }
};

/// Cache of one encode_text call for the backward pass.
struct TextCache {
    std::vector<int> ids;
    std::size_t len = 0;
    Vec alpha;  // attention over the first len positions
    Vec out;
};

/// Attention-pooled representation: scores come from the raw embeddings
/// (s_i = attn_w . v_i + attn_b), the pooled value uses position-added
/// vectors v_i + P_i. Zero-length input yields the zero vector.
Vec encode_text(const TokenSeq& seq, const TextEncoderWeights& w, TextCache* cache = nullptr);

/// Accumulates gradients of `d_out . encode_text(...)` into the embedding
/// rows and attention projection.
void backward_encode_text(const TextCache& cache, const Vec& d_out, const TextEncoderWeights& w,
                          Mat& d_embedding, Vec& d_attn_w, double& d_attn_b);

/// Scaled dot-product attention of the tweet vector over news vectors:
/// beta_j = softmax_j(tweet . news_j / sqrt(d)), output sum_j beta_j news_j.
/// No news items yields the zero vector.
struct FusionCache {
    Vec beta;
};
Vec news_tweet_attention(const Vec& tweet, const std::vector<Vec>& news, FusionCache* cache = nullptr);

/// Backward of news_tweet_attention; accumulates into d_tweet and d_news.
void backward_news_tweet_attention(const FusionCache& cache, const Vec& d_out, const Vec& tweet,
                                   const std::vector<Vec>& news, Vec& d_tweet,
                                   std::vector<Vec>& d_news);

}  // namespace gammacas::text
