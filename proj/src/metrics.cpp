#include "gammacas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gammacas::metrics {

void BucketScheme::validate() const {
    if (edges.empty()) throw std::invalid_argument("bucket scheme needs at least one edge");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            throw std::invalid_argument("bucket edges must be strictly increasing");
}

std::size_t BucketScheme::bucket(double x) const {
    return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) -
                                    edges.begin());
}

BucketScheme BucketScheme::default_scheme() {
    BucketScheme s;
    double edge = 10.0;
    for (int i = 0; i < 24; ++i) {
        s.edges.push_back(edge);
        edge *= 2.0;
    }
    return s;
}

double mape(const Vec& predicted, const Vec& actual) {
    if (predicted.empty() || predicted.size() != actual.size())
        throw std::invalid_argument("mape needs equal non-empty vectors");
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (!(actual[i] > 0.0)) throw std::domain_error("mape requires positive actual sizes");
        sum += std::abs(actual[i] - predicted[i]) / actual[i];
    }
    return 100.0 * sum / static_cast<double>(predicted.size());
}

double mape(const std::vector<PredictionRow>& rows) {
    Vec p, a;
    p.reserve(rows.size());
    a.reserve(rows.size());
    for (const auto& r : rows) {
        p.push_back(r.predicted);
        a.push_back(r.actual);
    }
    return mape(p, a);
}

namespace {

// Counts strict inversions of v by merge sort (pairs i<j with v[i] > v[j]).
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch,
                               std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t inv = count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            inv += mid - i;
            scratch[k++] = v[j++];
        } else {
            scratch[k++] = v[i++];
        }
    }
    while (i < mid) scratch[k++] = v[i++];
    while (j < hi) scratch[k++] = v[j++];
    std::copy(scratch.begin() + static_cast<long>(lo), scratch.begin() + static_cast<long>(hi),
              v.begin() + static_cast<long>(lo));
    return inv;
}

std::uint64_t tie_pairs(const Vec& sorted) {
    std::uint64_t total = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        std::uint64_t t = j - i;
        total += t * (t - 1) / 2;
        i = j;
    }
    return total;
}

// Mid-ranks (average rank over tie groups, 1-based).
Vec midranks(const Vec& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    Vec rank(x.size(), 0.0);
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && x[idx[j]] == x[idx[i]]) ++j;
        double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) rank[idx[k]] = mid;
        i = j;
    }
    return rank;
}

}  // namespace

double kendall_tau(const Vec& x, const Vec& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("kendall_tau needs equal lengths >= 2");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    // Ties in x and joint (x, y) ties from the sorted order.
    std::uint64_t ties_x = 0, ties_xy = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && x[idx[j]] == x[idx[i]]) ++j;
        std::uint64_t t = j - i;
        ties_x += t * (t - 1) / 2;
        std::size_t a = i;
        while (a < j) {
            std::size_t b = a;
            while (b < j && y[idx[b]] == y[idx[a]]) ++b;
            std::uint64_t u = b - a;
            ties_xy += u * (u - 1) / 2;
            a = b;
        }
        i = j;
    }

    Vec y_sorted(n);
    for (std::size_t k = 0; k < n; ++k) y_sorted[k] = y[idx[k]];
    Vec y_for_ties = y_sorted;
    std::sort(y_for_ties.begin(), y_for_ties.end());
    std::uint64_t ties_y = tie_pairs(y_for_ties);

    std::vector<double> scratch(n);
    std::uint64_t discordant = count_inversions(y_sorted, scratch, 0, n);

    const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    if (ties_x == total || ties_y == total)
        throw NumericError("kendall_tau undefined: one input is entirely tied");

    double num = static_cast<double>(total) - static_cast<double>(ties_x) -
                 static_cast<double>(ties_y) + static_cast<double>(ties_xy) -
                 2.0 * static_cast<double>(discordant);
    double den = std::sqrt(static_cast<double>(total - ties_x)) *
                 std::sqrt(static_cast<double>(total - ties_y));
    return num / den;
}

double spearman_rho(const Vec& x, const Vec& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("spearman_rho needs equal lengths >= 2");
    Vec rx = midranks(x), ry = midranks(y);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw NumericError("spearman_rho undefined: zero rank variance");
    return sxy / std::sqrt(sxx * syy);
}

double step_tau(const std::vector<PredictionRow>& rows, const BucketScheme& scheme) {
    scheme.validate();
    Vec p, a;
    p.reserve(rows.size());
    a.reserve(rows.size());
    for (const auto& r : rows) {
        p.push_back(static_cast<double>(scheme.bucket(r.predicted)));
        a.push_back(static_cast<double>(scheme.bucket(r.actual)));
    }
    return kendall_tau(p, a);
}

MetricsSummary summarize(const std::vector<PredictionRow>& rows, const BucketScheme& scheme) {
    MetricsSummary s;
    s.n = rows.size();
    s.mape = mape(rows);
    Vec p, a;
    for (const auto& r : rows) {
        p.push_back(r.predicted);
        a.push_back(r.actual);
    }
    s.kendall_tau = kendall_tau(p, a);
    s.spearman_rho = spearman_rho(p, a);
    s.step_tau = step_tau(rows, scheme);
    return s;
}

namespace {

CorrelationEntry correlate(const Vec& feature, const Vec& values) {
    CorrelationEntry e;
    e.rho = spearman_rho(feature, values);
    double z = std::abs(e.rho) * std::sqrt(static_cast<double>(feature.size() - 1));
    e.p_value = std::erfc(z / std::sqrt(2.0));
    return e;
}

std::vector<BinSummary> binned(const Vec& feature, const Vec& values, std::size_t bins) {
    std::vector<std::size_t> idx(feature.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return feature[a] < feature[b]; });
    std::vector<BinSummary> out;
    const std::size_t n = idx.size();
    for (std::size_t b = 0; b < bins; ++b) {
        std::size_t lo = b * n / bins;
        std::size_t hi = (b + 1) * n / bins;
        if (hi <= lo) continue;
        BinSummary s;
        s.n = hi - lo;
        s.feature_lo = feature[idx[lo]];
        s.feature_hi = feature[idx[hi - 1]];
        double sum = 0.0, sq = 0.0;
        s.min = values[idx[lo]];
        s.max = values[idx[lo]];
        for (std::size_t k = lo; k < hi; ++k) {
            double v = values[idx[k]];
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
            sum += v;
            sq += v * v;
        }
        s.mean = sum / static_cast<double>(s.n);
        double var = sq / static_cast<double>(s.n) - s.mean * s.mean;
        s.stddev = var > 0.0 ? std::sqrt(var) : 0.0;
        out.push_back(s);
    }
    return out;
}

}  // namespace

FeatureParamReport feature_param_correlation(
    const std::map<std::string, double>& features,
    const std::map<std::string, growth::GrowthParams>& params, std::size_t quantile_bins) {
    Vec f, a, g, l;
    for (const auto& [id, value] : features) {
        auto it = params.find(id);
        if (it == params.end()) continue;
        f.push_back(value);
        a.push_back(it->second.scale);
        g.push_back(it->second.growth);
        l.push_back(it->second.decay);
    }
    if (f.size() < 30) throw DataError("feature/param overlap below 30 ids");

    FeatureParamReport rep;
    rep.n = f.size();
    rep.scale = correlate(f, a);
    rep.growth = correlate(f, g);
    rep.decay = correlate(f, l);
    rep.scale_bins = binned(f, a, quantile_bins);
    rep.growth_bins = binned(f, g, quantile_bins);
    rep.decay_bins = binned(f, l, quantile_bins);
    return rep;
}

}  // namespace gammacas::metrics
