#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gammacas/encoder.hpp"
#include "gammacas/growth.hpp"
#include "gammacas/text.hpp"

namespace gammacas::pp {

/// Exponential-kernel Hawkes parameters: intensity
/// mu + alpha * sum_i exp(-beta (t - t_i)).
struct HawkesParams {
    double mu = 0.0;
    double alpha = 0.0;
    double beta = 1.0;

    bool valid() const { return mu > 0.0 && alpha >= 0.0 && beta > 0.0; }
    double branching_ratio() const { return alpha / beta; }
};

struct TopicSpec {
    std::string token;
    double scale_multiplier = 1.0;
};

/// Synthetic corpus settings. Growth parameters are sampled inside the given
/// ranges; each cascade's true scale is its (log-uniform) base draw times its
/// topic multiplier, and the topic token appears in the root text and in a
/// fraction of news headlines.
struct SynthConfig {
    std::size_t n_cascades = 2000;
    double scale_lo = 2.0, scale_hi = 5.0;    // base A, log-uniform
    double growth_lo = 0.9, growth_hi = 1.5;  // gamma
    double decay_lo = 0.12, decay_hi = 0.25;  // lambda
    double follower_exponent = 2.5;
    std::int64_t follower_min = 5;
    std::vector<TopicSpec> topics = {{"alpha", 1.0}, {"bravo", 2.0}, {"charlie", 4.0}};
    double news_rate_per_hour = 2.0;
    double news_topic_fraction = 0.8;
    double horizon_hours = 360.0;
    double span_days = 30.0;  // root times spread uniformly over this span
    /// Mixing weight tying gamma to the root's log follower count (0 = none).
    double gamma_follower_coupling = 0.5;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Inhomogeneous Poisson simulation of the gamma-form rate by thinning
/// against the constant envelope max_t rate(t) (analytic max at growth/decay).
/// Returns sorted event times in hours, all < horizon.
std::vector<double> simulate_gamma_cascade(const growth::GrowthParams& params,
                                           double horizon_hours, std::uint64_t seed);

/// Draws one discrete Pareto(exponent, min) follower count per event
/// (floor of the continuous Pareto; counts >= min).
std::vector<seq::Event> attach_followers(const std::vector<double>& times_hours, double exponent,
                                         std::int64_t min_followers, std::uint64_t seed);
std::int64_t pareto_count(double exponent, std::int64_t min_followers, double u01);

struct GroundTruth {
    std::string id;
    growth::GrowthParams params;
    std::vector<double> sizes;  // closed-form expected sizes at truth_horizons
};

struct SynthCorpus {
    std::vector<seq::CascadeRecord> cascades;
    std::vector<text::NewsRecord> news;
    std::vector<GroundTruth> truth;
    std::vector<double> truth_horizons;
};

SynthCorpus synth_corpus(const SynthConfig& cfg);

/// Exact log likelihood on [0, t_end] with the O(n) excitation recursion
/// R_i = exp(-beta (t_i - t_{i-1})) (1 + R_{i-1}).
double hawkes_loglik(const std::vector<double>& events, double t_end, const HawkesParams& p);

/// Log likelihood plus its gradient in (mu, alpha, beta).
struct HawkesLoglikGrad {
    double loglik = 0.0;
    double d_mu = 0.0;
    double d_alpha = 0.0;
    double d_beta = 0.0;
};
HawkesLoglikGrad hawkes_loglik_grad(const std::vector<double>& events, double t_end,
                                    const HawkesParams& p);

struct HawkesFit {
    HawkesParams params;
    double loglik = 0.0;
    bool converged = false;
};

/// Multi-start (8 starts) gradient ascent in log-parameter space with
/// backtracking line search, 500 iterations per start; returns the best.
HawkesFit fit_hawkes(const std::vector<double>& events, double t_end);

/// Branching-expectation size prediction: |observed| plus
/// [mu (horizon - obs_window) + sum_i (alpha/beta) e^{-beta (obs_window-t_i)}]
/// / (1 - alpha/beta). Supercritical fits return +infinity.
double hawkes_predict_size(const HawkesParams& p, const std::vector<double>& observed,
                           double obs_window, double horizon);

/// Ogata-thinning simulation of the exponential-kernel process on [0, t_end].
std::vector<double> simulate_hawkes(const HawkesParams& p, double t_end, std::uint64_t seed);

}  // namespace gammacas::pp
