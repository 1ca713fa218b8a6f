#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gammacas/rng.hpp"
#include "gammacas/text.hpp"
#include "testutil.hpp"

using namespace gammacas;
using namespace gammacas::text;

namespace {

Vocab tiny_vocab() {
    Vocab v;
    v.add("hello");  // id 2
    v.add("world");  // id 3
    v.add("topic");  // id 4
    return v;
}

TextEncoderWeights random_weights(std::size_t vocab, std::size_t d, Rng& rng,
                                  bool zero_positional = false) {
    TextEncoderWeights w;
    w.embedding = Mat(vocab, d);
    for (double& x : w.embedding.a) x = rng.uniform(-0.5, 0.5);
    w.attn_w.resize(d);
    for (double& x : w.attn_w) x = rng.uniform(-0.5, 0.5);
    w.attn_b = rng.uniform(-0.2, 0.2);
    w.positional = zero_positional ? Mat(16, d, 0.0) : positional_encoding(16, d, 16.0);
    return w;
}

}  // namespace

TEST_CASE("tokenize: lowercase, vocab mapping, padding, stripping") {
    Vocab v = tiny_vocab();
    auto seq = tokenize("Hello, WORLD", v, 4);
    CHECK(seq.ids == std::vector<int>{2, 3, 0, 0});
    CHECK(seq.len == 2);

    auto empty = tokenize("", v, 4);
    CHECK(empty.ids == std::vector<int>{0, 0, 0, 0});
    CHECK(empty.len == 0);

    auto oov = tokenize("xyzzy", v, 4);
    CHECK(oov.ids == std::vector<int>{1, 0, 0, 0});
    CHECK(oov.len == 1);

    auto stripped = tokenize("hello @user123 https://x.test/abc?q=1 world", v, 6);
    CHECK(stripped.ids == std::vector<int>{2, 3, 0, 0, 0, 0});
    CHECK(stripped.len == 2);

    auto truncated = tokenize("hello world hello world hello", v, 3);
    CHECK(truncated.len == 3);
    CHECK(truncated.ids == std::vector<int>{2, 3, 2});
}

TEST_CASE("positional encoding: first row, worked value, range") {
    Mat p = positional_encoding(8, 6, 8.0);
    for (std::size_t k = 0; 2 * k < 6; ++k) {
        CHECK(p(0, 2 * k) == 0.0);
        CHECK(p(0, 2 * k + 1) == 1.0);
    }
    Mat q = positional_encoding(4, 2, 4.0);
    CHECK(q(1, 0) == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
    CHECK(q(1, 1) == doctest::Approx(std::cos(1.0)).epsilon(1e-12));
    for (double x : p.a) CHECK(std::abs(x) <= 1.0);

    CHECK_THROWS_AS(positional_encoding(4, 3, 4.0), std::invalid_argument);
    CHECK_THROWS_AS(positional_encoding(4, 2, 1.0), std::invalid_argument);
}

TEST_CASE("encode_text: softmax anchors") {
    const std::size_t d = 2;
    TextEncoderWeights w;
    w.embedding = Mat(4, d, 0.0);
    w.attn_w = {1.0, 0.0};
    w.attn_b = 0.0;
    w.positional = Mat(4, d, 0.0);
    // token 2 scores ln 3, token 3 scores 0.
    w.embedding(2, 0) = std::log(3.0);
    w.embedding(2, 1) = 5.0;
    w.embedding(3, 0) = 0.0;
    w.embedding(3, 1) = -1.0;

    TokenSeq one{{2, 0}, 1};
    TextCache cache;
    Vec out = encode_text(one, w, &cache);
    CHECK(cache.alpha == Vec{1.0});
    CHECK(out[0] == doctest::Approx(std::log(3.0)));
    CHECK(out[1] == doctest::Approx(5.0));

    TokenSeq two{{2, 3}, 2};
    encode_text(two, w, &cache);
    CHECK(cache.alpha[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(cache.alpha[1] == doctest::Approx(0.25).epsilon(1e-12));

    TokenSeq same{{3, 3}, 2};
    encode_text(same, w, &cache);
    CHECK(cache.alpha[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(cache.alpha[1] == doctest::Approx(0.5).epsilon(1e-12));

    TokenSeq none{{0, 0}, 0};
    Vec zero = encode_text(none, w, &cache);
    CHECK(zero == Vec(d, 0.0));
}

TEST_CASE("encode_text: attention sums to one over real positions only") {
    Rng rng(21);
    TextEncoderWeights w = random_weights(12, 6, rng);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t len = 1 + rng.below(6);
        TokenSeq seq;
        seq.ids.assign(8, kPadId);
        seq.len = len;
        for (std::size_t i = 0; i < len; ++i) seq.ids[i] = 2 + static_cast<int>(rng.below(10));
        TextCache cache;
        encode_text(seq, w, &cache);
        CHECK(cache.alpha.size() == len);  // padding gets exactly zero mass
        double sum = 0.0;
        for (double a : cache.alpha) sum += a;
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("encode_text: with zero positional table the output is permutation-invariant") {
    Rng rng(22);
    TextEncoderWeights w = random_weights(12, 6, rng, /*zero_positional=*/true);
    for (int trial = 0; trial < 10; ++trial) {
        TokenSeq seq;
        seq.ids.assign(5, kPadId);
        seq.len = 5;
        for (auto& id : seq.ids) id = 2 + static_cast<int>(rng.below(10));
        Vec base = encode_text(seq, w);
        TokenSeq shuffled = seq;
        for (std::size_t i = 5; i > 1; --i)
            std::swap(shuffled.ids[i - 1], shuffled.ids[rng.below(i)]);
        Vec perm = encode_text(shuffled, w);
        for (std::size_t k = 0; k < base.size(); ++k)
            CHECK(base[k] == doctest::Approx(perm[k]).epsilon(1e-12));
    }
}

TEST_CASE("news_tweet_attention: anchors") {
    Vec tweet{2, 0, 0, 0};
    std::vector<Vec> one{{1, 0, 0, 0}};
    FusionCache cache;
    Vec out = news_tweet_attention(tweet, one, &cache);
    CHECK(cache.beta == Vec{1.0});
    CHECK(out == one[0]);

    std::vector<Vec> twins{{0.3, 0.1, 0, 0}, {0.3, 0.1, 0, 0}};
    out = news_tweet_attention(tweet, twins, &cache);
    CHECK(cache.beta[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out[0] == doctest::Approx(0.3).epsilon(1e-12));

    // d = 4: scores 2/sqrt(4) = 1 and 0.
    std::vector<Vec> pair{{1, 0, 0, 0}, {0, 1, 0, 0}};
    out = news_tweet_attention(tweet, pair, &cache);
    double b1 = std::exp(1.0) / (std::exp(1.0) + 1.0);
    CHECK(cache.beta[0] == doctest::Approx(b1).epsilon(1e-10));
    CHECK(out[0] == doctest::Approx(b1).epsilon(1e-10));
    CHECK(out[1] == doctest::Approx(1.0 - b1).epsilon(1e-10));

    Vec none = news_tweet_attention(tweet, {}, &cache);
    CHECK(none == Vec(4, 0.0));
    CHECK(cache.beta.empty());
}

TEST_CASE("gradients: text encoder and fusion match central differences") {
    Rng rng(23);
    const std::size_t d = 6, vocab = 12;
    TextEncoderWeights w = random_weights(vocab, d, rng);

    TokenSeq tweet;
    tweet.ids.assign(8, kPadId);
    tweet.len = 4;
    for (std::size_t i = 0; i < tweet.len; ++i) tweet.ids[i] = 2 + static_cast<int>(rng.below(10));
    std::vector<TokenSeq> news(2);
    for (auto& n : news) {
        n.ids.assign(8, kPadId);
        n.len = 3;
        for (std::size_t i = 0; i < n.len; ++i) n.ids[i] = 2 + static_cast<int>(rng.below(10));
    }
    Vec direction(d);
    for (double& x : direction) x = rng.uniform(-1.0, 1.0);

    // Objective: direction . fuse(encode(tweet), {encode(news_j)}).
    auto objective = [&](const TextEncoderWeights& ww) {
        Vec xt = encode_text(tweet, ww);
        std::vector<Vec> nv;
        for (const auto& n : news) nv.push_back(encode_text(n, ww));
        return dot(direction, news_tweet_attention(xt, nv));
    };

    // Analytic pass.
    TextCache tweet_cache;
    Vec xt = encode_text(tweet, w, &tweet_cache);
    std::vector<TextCache> news_caches(news.size());
    std::vector<Vec> nv;
    for (std::size_t j = 0; j < news.size(); ++j) nv.push_back(encode_text(news[j], w, &news_caches[j]));
    FusionCache fusion;
    news_tweet_attention(xt, nv, &fusion);

    Mat d_embedding(vocab, d, 0.0);
    Vec d_attn_w(d, 0.0);
    double d_attn_b = 0.0;
    Vec d_tweet(d, 0.0);
    std::vector<Vec> d_news(news.size(), Vec(d, 0.0));
    backward_news_tweet_attention(fusion, direction, xt, nv, d_tweet, d_news);
    for (std::size_t j = 0; j < news.size(); ++j)
        backward_encode_text(news_caches[j], d_news[j], w, d_embedding, d_attn_w, d_attn_b);
    backward_encode_text(tweet_cache, d_tweet, w, d_embedding, d_attn_w, d_attn_b);

    const double eps = 1e-6;
    auto fd_check = [&](double& slot, double analytic) {
        double saved = slot;
        slot = saved + eps;
        double lp = objective(w);
        slot = saved - eps;
        double lm = objective(w);
        slot = saved;
        double fd = (lp - lm) / (2.0 * eps);
        CHECK(std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-6}) < 1e-4);
    };
    for (std::size_t i = 0; i < w.embedding.a.size(); ++i) fd_check(w.embedding.a[i], d_embedding.a[i]);
    for (std::size_t i = 0; i < d; ++i) fd_check(w.attn_w[i], d_attn_w[i]);
    fd_check(w.attn_b, d_attn_b);
}
