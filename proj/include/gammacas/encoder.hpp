#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gammacas/common.hpp"

namespace gammacas::seq {

/// One reshare event: arrival offset from the root post (seconds) and the
/// resharer's follower count (their out-degree in the follow graph).
struct Event {
    double t_seconds = 0.0;
    std::int64_t followers = 0;
};

/// A root post with its ordered reshare events.
struct CascadeRecord {
    std::string id;
    double root_time = 0.0;  // epoch seconds
    std::string root_text;
    std::int64_t root_followers = 0;
    std::vector<Event> events;  // sorted non-decreasing in t_seconds
};

/// Per-bin retweet counts and aggregated follower counts over the
/// observation window (window_hours = bins * bin width).
struct BinnedObservation {
    std::vector<std::int64_t> retweet_counts;
    std::vector<std::int64_t> follower_sums;
    double bin_width_hours = 0.0;
    double window_hours = 0.0;

    std::size_t bins() const { return retweet_counts.size(); }
};

/// Trainable affine applied to log1p of integer counts.
struct CountNorm {
    double scale = 1.0;
    double shift = 0.0;

    double apply(double count) const { return scale * std::log1p(count) + shift; }
};

struct CellState {
    Vec c;
    Vec h;
};

/// Weights of the follower-gated cell. Gate inputs are [r_m : h_{m-1}]
/// (1+s wide); the follower gate sees the scalar f_m alone; the output map
/// acts on the cell state.
struct CellWeights {
    Mat w_forget, w_input, w_cand;  // (1+s) x s
    Vec b_forget, b_input, b_cand;  // s
    Vec w_follower, b_follower;     // s
    Mat w_out;                      // s x s
    Vec b_out;                      // s

    std::size_t state_size() const { return b_forget.size(); }
    /// Trainable scalar count: 3(s^2+2s) + 2s + (s^2+s) = 4s^2 + 9s.
    std::size_t parameter_count() const;
};

/// Standard 4-gate LSTM over the concatenated [r_m : f_m] input, used by the
/// plain-cell ablation. h_m = o ⊙ tanh(c_m), zero initial state.
struct PlainCellWeights {
    Mat w_input, w_forget, w_output, w_cand;  // (2+s) x s
    Vec b_input, b_forget, b_output, b_cand;  // s

    std::size_t state_size() const { return b_input.size(); }
    std::size_t parameter_count() const;
};

/// Quantize events into M half-open bins [m*w, (m+1)*w). Events at or beyond
/// the window are ignored. The root's own followers count toward bin 0.
BinnedObservation bin_cascade(const CascadeRecord& cascade, double bin_width_hours, std::size_t bins);

/// Normalized per-bin sequences (r_m, f_m).
struct NormalizedBins {
    Vec r;
    Vec f;
};
NormalizedBins normalize_counts(const BinnedObservation& binned, const CountNorm& retweet_norm,
                                const CountNorm& follower_norm);

/// Intermediate values of one cell step, retained for backprop.
struct CellStepCache {
    double r = 0.0, f = 0.0;
    Vec h_prev, c_prev;
    Vec x_forget, x_input, x_cand, x_follower;
    Vec out_tanh;  // tanh(w_out c_m + b_out)
    Vec c;
};

CellState cell_step(double r_m, double f_m, const CellState& state, const CellWeights& w,
                    CellStepCache* cache = nullptr);

/// Folds cell_step left-to-right from (c0, h0); returns every intermediate
/// hidden state h_1..h_M (the parameter heads read all of them).
struct SequenceTrace {
    std::vector<Vec> hidden;
    std::vector<CellStepCache> steps;
};
SequenceTrace encode_sequence(const Vec& r, const Vec& f, const CellWeights& w,
                              const CellState& init, bool keep_caches);

/// Reverse-mode pass. d_hidden[m] is dJ/dh_{m+1}; gradients accumulate into
/// `grads` (same shapes as the weights); returns dJ/dr_m and dJ/df_m.
struct SequenceBackResult {
    Vec d_r;
    Vec d_f;
};
SequenceBackResult backward_sequence(const SequenceTrace& trace, const std::vector<Vec>& d_hidden,
                                     const CellWeights& w, CellWeights& grads);

// Plain-cell counterparts.
struct PlainStepCache {
    double r = 0.0, f = 0.0;
    Vec h_prev, c_prev;
    Vec g_input, g_forget, g_output, g_cand;
    Vec c, c_tanh;
};
CellState plain_cell_step(double r_m, double f_m, const CellState& state,
                          const PlainCellWeights& w, PlainStepCache* cache = nullptr);
struct PlainSequenceTrace {
    std::vector<Vec> hidden;
    std::vector<PlainStepCache> steps;
};
PlainSequenceTrace encode_sequence_plain(const Vec& r, const Vec& f, const PlainCellWeights& w,
                                         bool keep_caches);
SequenceBackResult backward_sequence_plain(const PlainSequenceTrace& trace,
                                           const std::vector<Vec>& d_hidden,
                                           const PlainCellWeights& w, PlainCellWeights& grads);

}  // namespace gammacas::seq
