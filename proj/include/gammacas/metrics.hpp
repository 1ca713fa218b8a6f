#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "gammacas/common.hpp"
#include "gammacas/growth.hpp"

namespace gammacas::metrics {

struct PredictionRow {
    std::string id;
    double horizon = 0.0;   // hours
    double predicted = 0.0;
    double actual = 0.0;    // >= 1 by dataset filter
};

/// Ascending size-range edges for step-tau; value x maps to the number of
/// edges <= x.
struct BucketScheme {
    std::vector<double> edges;

    void validate() const;
    std::size_t bucket(double x) const;
    /// Powers of two starting at 10 (10, 20, 40, ...), 24 edges.
    static BucketScheme default_scheme();
};

/// 100 * mean(|actual - predicted| / actual).
double mape(const std::vector<PredictionRow>& rows);
double mape(const Vec& predicted, const Vec& actual);

/// Tie-corrected Kendall tau-b via O(n log n) merge counting. Throws
/// NumericError when either vector is entirely tied.
double kendall_tau(const Vec& x, const Vec& y);

/// Spearman rho as Pearson correlation of mid-ranks. Throws NumericError on
/// zero rank variance.
double spearman_rho(const Vec& x, const Vec& y);

/// Kendall tau-b on bucket indices of predicted and actual sizes.
double step_tau(const std::vector<PredictionRow>& rows, const BucketScheme& scheme);

struct MetricsSummary {
    double mape = 0.0;
    double kendall_tau = 0.0;
    double spearman_rho = 0.0;
    double step_tau = 0.0;
    std::size_t n = 0;
};

/// All four metrics for one horizon's rows.
MetricsSummary summarize(const std::vector<PredictionRow>& rows, const BucketScheme& scheme);

struct CorrelationEntry {
    double rho = 0.0;
    double p_value = 1.0;  // two-sided, large-sample normal approximation
};

struct BinSummary {
    double feature_lo = 0.0;
    double feature_hi = 0.0;
    std::size_t n = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
};

/// Feature-vs-parameter diagnostics: Spearman rho with p-value against each
/// of (scale, growth, decay), plus summaries over feature-quantile bins.
struct FeatureParamReport {
    std::size_t n = 0;
    CorrelationEntry scale, growth, decay;
    std::vector<BinSummary> scale_bins, growth_bins, decay_bins;
    std::string p_value_method = "normal-approximation";
};

FeatureParamReport feature_param_correlation(
    const std::map<std::string, double>& features,
    const std::map<std::string, growth::GrowthParams>& params, std::size_t quantile_bins = 10);

}  // namespace gammacas::metrics
