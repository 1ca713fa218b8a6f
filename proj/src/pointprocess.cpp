#include "gammacas/pointprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gammacas/rng.hpp"

namespace gammacas::pp {

void SynthConfig::validate() const {
    if (n_cascades < 1) throw std::invalid_argument("n_cascades must be >= 1");
    if (!(scale_lo > 0.0 && scale_hi >= scale_lo)) throw std::invalid_argument("bad scale range");
    if (!(growth_lo >= 0.0 && growth_hi >= growth_lo)) throw std::invalid_argument("bad growth range");
    if (!(decay_lo > 0.0 && decay_hi >= decay_lo)) throw std::invalid_argument("bad decay range");
    if (!(follower_exponent > 1.0)) throw std::invalid_argument("follower exponent must be > 1");
    if (follower_min < 1) throw std::invalid_argument("follower min must be >= 1");
    if (topics.empty()) throw std::invalid_argument("at least one topic required");
    if (!(horizon_hours > 0.0)) throw std::invalid_argument("horizon must be > 0");
    if (!(news_topic_fraction >= 0.0 && news_topic_fraction <= 1.0))
        throw std::invalid_argument("news topic fraction in [0,1]");
    if (!(gamma_follower_coupling >= 0.0 && gamma_follower_coupling <= 1.0))
        throw std::invalid_argument("coupling in [0,1]");
}

std::vector<double> simulate_gamma_cascade(const growth::GrowthParams& params,
                                           double horizon_hours, std::uint64_t seed) {
    if (!params.valid()) throw std::domain_error("invalid growth parameters");
    if (!(horizon_hours > 0.0)) throw std::domain_error("horizon must be > 0");
    std::vector<double> events;
    if (params.scale == 0.0) return events;

    // Rate peaks at t* = growth/decay (t = 0 when growth = 0).
    double t_star = std::min(params.growth / params.decay, horizon_hours);
    double envelope = growth::rate(params, t_star);
    if (!(envelope > 0.0)) return events;

    Rng rng(seed);
    double t = 0.0;
    while (true) {
        t += rng.exponential(envelope);
        if (t >= horizon_hours) break;
        double accept = growth::rate(params, t) / envelope;
        if (rng.uniform01() < accept) events.push_back(t);
    }
    return events;
}

std::int64_t pareto_count(double exponent, std::int64_t min_followers, double u01) {
    // Continuous Pareto with pdf ~ x^(-exponent) (CCDF slope 1-exponent),
    // floored to an integer >= min.
    double tail = 1.0 - u01;  // in (0, 1]
    double x = static_cast<double>(min_followers) * std::pow(tail, -1.0 / (exponent - 1.0));
    if (x > 9.0e18) x = 9.0e18;
    return static_cast<std::int64_t>(std::floor(x));
}

std::vector<seq::Event> attach_followers(const std::vector<double>& times_hours, double exponent,
                                         std::int64_t min_followers, std::uint64_t seed) {
    if (!(exponent > 1.0)) throw std::invalid_argument("follower exponent must be > 1");
    Rng rng(seed);
    std::vector<seq::Event> out;
    out.reserve(times_hours.size());
    for (double t : times_hours)
        out.push_back({t * 3600.0, pareto_count(exponent, min_followers, rng.uniform01())});
    return out;
}

namespace {

const char* kFiller[] = {"just",  "really", "what",  "today",  "new",    "big",   "this",
                         "look",  "wild",   "house", "story",  "found",  "crazy", "night",
                         "think", "city",   "again", "people", "update", "live",  "news",
                         "best",  "watch",  "crowd", "report", "street", "small", "share"};
constexpr std::size_t kFillerCount = sizeof(kFiller) / sizeof(kFiller[0]);

std::string make_text(Rng& rng, const std::string& topic_token, std::size_t filler_words) {
    std::vector<std::string> words;
    words.push_back(topic_token);
    for (std::size_t i = 0; i < filler_words; ++i) words.push_back(kFiller[rng.below(kFillerCount)]);
    // Topic token lands at a random position.
    std::size_t pos = rng.below(words.size());
    std::swap(words[0], words[pos]);
    std::string text;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) text += ' ';
        text += words[i];
    }
    return text;
}

std::string pad_id(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "c%06zu", i);
    return buf;
}

}  // namespace

SynthCorpus synth_corpus(const SynthConfig& cfg) {
    cfg.validate();
    SynthCorpus corpus;
    corpus.truth_horizons = {12, 18, 24, 36, 48, 72, 120, 240, 360};

    const double t0 = 1.6e9;  // fixed base epoch
    const double span_seconds = cfg.span_days * 86400.0;

    // News stream covers every cascade's +-window query with slack.
    Rng news_rng(derive_seed(cfg.seed, 0x6e657773ULL));
    double news_lo = t0 - 24.0 * 3600.0;
    double news_hi = t0 + span_seconds + 24.0 * 3600.0;
    double t = news_lo;
    std::size_t news_idx = 0;
    while (true) {
        t += news_rng.exponential(cfg.news_rate_per_hour / 3600.0);
        if (t >= news_hi) break;
        text::NewsRecord n;
        n.time = t;
        if (news_rng.uniform01() < cfg.news_topic_fraction) {
            const TopicSpec& topic = cfg.topics[news_rng.below(cfg.topics.size())];
            n.headline = make_text(news_rng, topic.token, 4 + news_rng.below(3));
        } else {
            n.headline = make_text(news_rng, kFiller[news_rng.below(kFillerCount)],
                                   4 + news_rng.below(3));
        }
        n.source = "wire" + std::to_string(news_idx % 7);
        corpus.news.push_back(std::move(n));
        ++news_idx;
    }

    const double ln_f_lo = std::log(static_cast<double>(cfg.follower_min));
    const double ln_f_span = std::log(1000.0);  // ~3 decades of follower range

    for (std::size_t i = 1; i <= cfg.n_cascades; ++i) {
        Rng rng(derive_seed(cfg.seed, i));
        seq::CascadeRecord rec;
        rec.id = pad_id(i);
        rec.root_time = t0 + rng.uniform01() * span_seconds;
        rec.root_followers = pareto_count(cfg.follower_exponent, cfg.follower_min, rng.uniform01());

        const TopicSpec& topic = cfg.topics[rng.below(cfg.topics.size())];
        double base =
            std::exp(rng.uniform(std::log(cfg.scale_lo), std::log(cfg.scale_hi)));

        growth::GrowthParams p;
        p.scale = base * topic.scale_multiplier;
        double fq = (std::log(static_cast<double>(rec.root_followers)) - ln_f_lo) / ln_f_span;
        fq = std::clamp(fq, 0.0, 1.0);
        double mix = cfg.gamma_follower_coupling * fq +
                     (1.0 - cfg.gamma_follower_coupling) * rng.uniform01();
        p.growth = cfg.growth_lo + (cfg.growth_hi - cfg.growth_lo) * mix;
        p.decay = rng.uniform(cfg.decay_lo, cfg.decay_hi);

        rec.root_text = make_text(rng, topic.token, 4 + rng.below(4));

        std::vector<double> times = simulate_gamma_cascade(
            p, cfg.horizon_hours, derive_seed(cfg.seed, i) ^ 0x9e3779b97f4a7c15ULL);
        rec.events = attach_followers(times, cfg.follower_exponent, cfg.follower_min,
                                      derive_seed(cfg.seed, i) ^ 0x517cc1b727220a95ULL);

        GroundTruth truth;
        truth.id = rec.id;
        truth.params = p;
        for (double hz : corpus.truth_horizons)
            truth.sizes.push_back(growth::cascade_size_closed_form(p, hz));

        corpus.cascades.push_back(std::move(rec));
        corpus.truth.push_back(std::move(truth));
    }
    return corpus;
}

double hawkes_loglik(const std::vector<double>& events, double t_end, const HawkesParams& p) {
    return hawkes_loglik_grad(events, t_end, p).loglik;
}

HawkesLoglikGrad hawkes_loglik_grad(const std::vector<double>& events, double t_end,
                                    const HawkesParams& p) {
    if (!p.valid()) throw std::domain_error("invalid Hawkes parameters");
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i] < 0.0 || events[i] > t_end || (i > 0 && events[i] < events[i - 1]))
            throw std::invalid_argument("events must be sorted within [0, t_end]");
    }

    HawkesLoglikGrad out;
    double log_term = 0.0;
    double r = 0.0, dr = 0.0;  // excitation sum at the current event and d/d beta
    double sum_inv = 0.0, sum_r_inv = 0.0, sum_dr_term = 0.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (i > 0) {
            double delta = events[i] - events[i - 1];
            double decay = std::exp(-p.beta * delta);
            dr = decay * (dr - delta * (1.0 + r));
            r = decay * (1.0 + r);
        }
        double intensity = p.mu + p.alpha * r;
        log_term += std::log(intensity);
        sum_inv += 1.0 / intensity;
        sum_r_inv += r / intensity;
        sum_dr_term += dr / intensity;
    }

    double comp_tail = 0.0;       // sum_i (1 - e^{-beta u_i}), u_i = T - t_i
    double comp_tail_du = 0.0;    // sum_i u_i e^{-beta u_i}
    for (double ti : events) {
        double u = t_end - ti;
        double e = std::exp(-p.beta * u);
        comp_tail += 1.0 - e;
        comp_tail_du += u * e;
    }

    out.loglik = log_term - p.mu * t_end - (p.alpha / p.beta) * comp_tail;
    out.d_mu = sum_inv - t_end;
    out.d_alpha = sum_r_inv - comp_tail / p.beta;
    out.d_beta = p.alpha * sum_dr_term + (p.alpha / (p.beta * p.beta)) * comp_tail -
                 (p.alpha / p.beta) * comp_tail_du;
    return out;
}

HawkesFit fit_hawkes(const std::vector<double>& events, double t_end) {
    if (events.size() < 5) throw std::invalid_argument("fit_hawkes needs >= 5 events");
    const double n = static_cast<double>(events.size());
    const double mean_gap = t_end / n;

    auto loglik_at = [&](const std::array<double, 3>& theta) {
        HawkesParams p{std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2])};
        return hawkes_loglik_grad(events, t_end, p);
    };

    HawkesFit best;
    best.loglik = -std::numeric_limits<double>::infinity();

    const double branchings[4] = {0.1, 0.4, 0.7, 0.9};
    const double beta_factors[2] = {0.3, 3.0};
    for (double nb : branchings) {
        for (double bf : beta_factors) {
            double beta0 = bf / mean_gap;
            std::array<double, 3> theta = {std::log((1.0 - nb) * n / t_end),
                                           std::log(nb * beta0), std::log(beta0)};
            HawkesLoglikGrad cur = loglik_at(theta);
            bool converged = false;
            for (int iter = 0; iter < 500; ++iter) {
                // Gradient in log space: d/d log(x) = x * d/dx.
                std::array<double, 3> g = {std::exp(theta[0]) * cur.d_mu,
                                           std::exp(theta[1]) * cur.d_alpha,
                                           std::exp(theta[2]) * cur.d_beta};
                double gnorm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
                if (gnorm < 1e-7 * std::max(1.0, std::abs(cur.loglik))) {
                    converged = true;
                    break;
                }
                double step = 1.0 / gnorm;
                bool improved = false;
                for (int half = 0; half < 40; ++half) {
                    std::array<double, 3> cand = {
                        std::clamp(theta[0] + step * g[0], -30.0, 30.0),
                        std::clamp(theta[1] + step * g[1], -30.0, 30.0),
                        std::clamp(theta[2] + step * g[2], -30.0, 30.0)};
                    HawkesLoglikGrad next = loglik_at(cand);
                    if (std::isfinite(next.loglik) && next.loglik > cur.loglik) {
                        theta = cand;
                        cur = next;
                        improved = true;
                        break;
                    }
                    step *= 0.5;
                }
                if (!improved) {
                    converged = true;
                    break;
                }
            }
            if (cur.loglik > best.loglik) {
                best.params = {std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2])};
                best.loglik = cur.loglik;
                best.converged = converged;
            }
        }
    }
    return best;
}

double hawkes_predict_size(const HawkesParams& p, const std::vector<double>& observed,
                           double obs_window, double horizon) {
    if (!p.valid()) throw std::domain_error("invalid Hawkes parameters");
    if (!(horizon >= obs_window)) throw std::invalid_argument("horizon must be >= window");
    double ratio = p.branching_ratio();
    if (ratio >= 1.0) return std::numeric_limits<double>::infinity();  // overshoot risk
    double residual = 0.0;
    for (double ti : observed) residual += (p.alpha / p.beta) * std::exp(-p.beta * (obs_window - ti));
    double future = (p.mu * (horizon - obs_window) + residual) / (1.0 - ratio);
    return static_cast<double>(observed.size()) + future;
}

std::vector<double> simulate_hawkes(const HawkesParams& p, double t_end, std::uint64_t seed) {
    if (!p.valid()) throw std::domain_error("invalid Hawkes parameters");
    Rng rng(seed);
    std::vector<double> events;
    double t = 0.0;
    double excitation = 0.0;  // sum_i e^{-beta (t - t_i)}
    while (true) {
        double bound = p.mu + p.alpha * excitation;
        double w = rng.exponential(bound);
        t += w;
        if (t >= t_end) break;
        double decayed = excitation * std::exp(-p.beta * w);
        double intensity = p.mu + p.alpha * decayed;
        if (rng.uniform01() < intensity / bound) {
            events.push_back(t);
            excitation = decayed + 1.0;
        } else {
            excitation = decayed;
        }
    }
    return events;
}

}  // namespace gammacas::pp
