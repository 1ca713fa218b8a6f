#include "gammacas/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace gammacas::seq {

namespace {

// z = in . W[:, j] + b[j] for each column j; W is (in_dim x out_dim).
Vec affine(const Vec& in, const Mat& w, const Vec& b) {
    if (in.size() != w.rows || b.size() != w.cols) throw std::invalid_argument("shape mismatch");
    Vec z = b;
    for (std::size_t i = 0; i < w.rows; ++i) {
        double x = in[i];
        if (x == 0.0) continue;
        const double* row = &w.a[i * w.cols];
        for (std::size_t j = 0; j < w.cols; ++j) z[j] += x * row[j];
    }
    return z;
}

}  // namespace

std::size_t CellWeights::parameter_count() const {
    return w_forget.size() + b_forget.size() + w_input.size() + b_input.size() + w_cand.size() +
           b_cand.size() + w_follower.size() + b_follower.size() + w_out.size() + b_out.size();
}

std::size_t PlainCellWeights::parameter_count() const {
    return w_input.size() + b_input.size() + w_forget.size() + b_forget.size() + w_output.size() +
           b_output.size() + w_cand.size() + b_cand.size();
}

BinnedObservation bin_cascade(const CascadeRecord& cascade, double bin_width_hours,
                              std::size_t bins) {
    if (!(bin_width_hours > 0.0)) throw std::invalid_argument("bin width must be > 0");
    if (bins < 1) throw std::invalid_argument("bin count must be >= 1");
    BinnedObservation out;
    out.bin_width_hours = bin_width_hours;
    out.window_hours = bin_width_hours * static_cast<double>(bins);
    out.retweet_counts.assign(bins, 0);
    out.follower_sums.assign(bins, 0);
    const double bin_seconds = bin_width_hours * 3600.0;
    for (const Event& e : cascade.events) {
        double idx = std::floor(e.t_seconds / bin_seconds);
        if (idx < 0.0 || idx >= static_cast<double>(bins)) continue;
        auto m = static_cast<std::size_t>(idx);
        out.retweet_counts[m] += 1;
        out.follower_sums[m] += e.followers;
    }
    out.follower_sums[0] += cascade.root_followers;
    return out;
}

NormalizedBins normalize_counts(const BinnedObservation& binned, const CountNorm& retweet_norm,
                                const CountNorm& follower_norm) {
    NormalizedBins out;
    out.r.reserve(binned.bins());
    out.f.reserve(binned.bins());
    for (std::size_t m = 0; m < binned.bins(); ++m) {
        out.r.push_back(retweet_norm.apply(static_cast<double>(binned.retweet_counts[m])));
        out.f.push_back(follower_norm.apply(static_cast<double>(binned.follower_sums[m])));
    }
    return out;
}

CellState cell_step(double r_m, double f_m, const CellState& state, const CellWeights& w,
                    CellStepCache* cache) {
    const std::size_t s = w.state_size();
    if (state.c.size() != s || state.h.size() != s) throw std::invalid_argument("state size mismatch");

    Vec in(1 + s);
    in[0] = r_m;
    for (std::size_t j = 0; j < s; ++j) in[1 + j] = state.h[j];

    Vec x_forget = affine(in, w.w_forget, w.b_forget);
    Vec x_input = affine(in, w.w_input, w.b_input);
    Vec x_cand = affine(in, w.w_cand, w.b_cand);
    for (std::size_t j = 0; j < s; ++j) {
        x_forget[j] = sigmoid(x_forget[j]);
        x_input[j] = sigmoid(x_input[j]);
        x_cand[j] = std::tanh(x_cand[j]);
    }
    Vec x_follower(s);
    for (std::size_t j = 0; j < s; ++j) x_follower[j] = sigmoid(w.w_follower[j] * f_m + w.b_follower[j]);

    CellState next;
    next.c.resize(s);
    for (std::size_t j = 0; j < s; ++j)
        next.c[j] = state.c[j] * x_forget[j] + x_input[j] * x_cand[j] * x_follower[j];

    Vec z_out = affine(next.c, w.w_out, w.b_out);
    Vec out_tanh(s);
    next.h.resize(s);
    for (std::size_t j = 0; j < s; ++j) {
        out_tanh[j] = std::tanh(z_out[j]);
        next.h[j] = state.h[j] * out_tanh[j];
    }

    if (cache) {
        cache->r = r_m;
        cache->f = f_m;
        cache->h_prev = state.h;
        cache->c_prev = state.c;
        cache->x_forget = std::move(x_forget);
        cache->x_input = std::move(x_input);
        cache->x_cand = std::move(x_cand);
        cache->x_follower = std::move(x_follower);
        cache->out_tanh = std::move(out_tanh);
        cache->c = next.c;
    }
    return next;
}

SequenceTrace encode_sequence(const Vec& r, const Vec& f, const CellWeights& w,
                              const CellState& init, bool keep_caches) {
    if (r.size() != f.size() || r.empty()) throw std::invalid_argument("sequence length mismatch");
    SequenceTrace trace;
    trace.hidden.reserve(r.size());
    if (keep_caches) trace.steps.resize(r.size());
    CellState state = init;
    for (std::size_t m = 0; m < r.size(); ++m) {
        state = cell_step(r[m], f[m], state, w, keep_caches ? &trace.steps[m] : nullptr);
        trace.hidden.push_back(state.h);
    }
    return trace;
}

SequenceBackResult backward_sequence(const SequenceTrace& trace, const std::vector<Vec>& d_hidden,
                                     const CellWeights& w, CellWeights& grads) {
    const std::size_t steps = trace.steps.size();
    if (steps == 0 || d_hidden.size() != steps) throw std::invalid_argument("trace/gradient mismatch");
    const std::size_t s = w.state_size();

    SequenceBackResult out;
    out.d_r.assign(steps, 0.0);
    out.d_f.assign(steps, 0.0);

    Vec dh(s, 0.0), dc(s, 0.0);
    for (std::size_t mi = steps; mi-- > 0;) {
        const CellStepCache& st = trace.steps[mi];
        for (std::size_t j = 0; j < s; ++j) dh[j] += d_hidden[mi][j];

        // h_m = h_{m-1} ⊙ tanh(z_out)
        Vec dz_out(s);
        Vec dh_prev(s);
        for (std::size_t j = 0; j < s; ++j) {
            dh_prev[j] = dh[j] * st.out_tanh[j];
            double d_tanh = dh[j] * st.h_prev[j];
            dz_out[j] = d_tanh * (1.0 - st.out_tanh[j] * st.out_tanh[j]);
        }
        // z_out = c_m . w_out + b_out
        for (std::size_t i = 0; i < s; ++i) {
            double* gw = &grads.w_out.a[i * s];
            const double* ww = &w.w_out.a[i * s];
            double ci = st.c[i];
            double acc = 0.0;
            for (std::size_t j = 0; j < s; ++j) {
                gw[j] += ci * dz_out[j];
                acc += ww[j] * dz_out[j];
            }
            dc[i] += acc;
        }
        for (std::size_t j = 0; j < s; ++j) grads.b_out[j] += dz_out[j];

        // c_m = c_{m-1} ⊙ x_forget + x_input ⊙ x_cand ⊙ x_follower
        Vec dz_forget(s), dz_input(s), dz_cand(s), dz_follower(s), dc_prev(s);
        for (std::size_t j = 0; j < s; ++j) {
            double g = st.x_forget[j], i_ = st.x_input[j], cand = st.x_cand[j], fl = st.x_follower[j];
            dc_prev[j] = dc[j] * g;
            dz_forget[j] = dc[j] * st.c_prev[j] * g * (1.0 - g);
            dz_input[j] = dc[j] * cand * fl * i_ * (1.0 - i_);
            dz_cand[j] = dc[j] * i_ * fl * (1.0 - cand * cand);
            dz_follower[j] = dc[j] * i_ * cand * fl * (1.0 - fl);
        }

        // Follower gate: z = w_follower * f + b_follower.
        double df = 0.0;
        for (std::size_t j = 0; j < s; ++j) {
            grads.w_follower[j] += dz_follower[j] * st.f;
            grads.b_follower[j] += dz_follower[j];
            df += dz_follower[j] * w.w_follower[j];
        }
        out.d_f[mi] = df;

        // Concatenated-input gates: in = [r : h_prev].
        Vec in(1 + s);
        in[0] = st.r;
        for (std::size_t j = 0; j < s; ++j) in[1 + j] = st.h_prev[j];
        Vec d_in(1 + s, 0.0);
        auto gate_back = [&](const Vec& dz, const Mat& wm, Mat& gm, Vec& gb) {
            for (std::size_t i = 0; i <= s; ++i) {
                double* grow = &gm.a[i * s];
                const double* wrow = &wm.a[i * s];
                double x = in[i];
                double acc = 0.0;
                for (std::size_t j = 0; j < s; ++j) {
                    grow[j] += x * dz[j];
                    acc += wrow[j] * dz[j];
                }
                d_in[i] += acc;
            }
            for (std::size_t j = 0; j < s; ++j) gb[j] += dz[j];
        };
        gate_back(dz_forget, w.w_forget, grads.w_forget, grads.b_forget);
        gate_back(dz_input, w.w_input, grads.w_input, grads.b_input);
        gate_back(dz_cand, w.w_cand, grads.w_cand, grads.b_cand);

        out.d_r[mi] = d_in[0];
        for (std::size_t j = 0; j < s; ++j) dh_prev[j] += d_in[1 + j];

        dh = std::move(dh_prev);
        dc = std::move(dc_prev);
    }
    return out;
}

CellState plain_cell_step(double r_m, double f_m, const CellState& state,
                          const PlainCellWeights& w, PlainStepCache* cache) {
    const std::size_t s = w.state_size();
    if (state.c.size() != s || state.h.size() != s) throw std::invalid_argument("state size mismatch");

    Vec in(2 + s);
    in[0] = r_m;
    in[1] = f_m;
    for (std::size_t j = 0; j < s; ++j) in[2 + j] = state.h[j];

    Vec gi = affine(in, w.w_input, w.b_input);
    Vec gf = affine(in, w.w_forget, w.b_forget);
    Vec go = affine(in, w.w_output, w.b_output);
    Vec gc = affine(in, w.w_cand, w.b_cand);
    for (std::size_t j = 0; j < s; ++j) {
        gi[j] = sigmoid(gi[j]);
        gf[j] = sigmoid(gf[j]);
        go[j] = sigmoid(go[j]);
        gc[j] = std::tanh(gc[j]);
    }

    CellState next;
    next.c.resize(s);
    next.h.resize(s);
    Vec c_tanh(s);
    for (std::size_t j = 0; j < s; ++j) {
        next.c[j] = gf[j] * state.c[j] + gi[j] * gc[j];
        c_tanh[j] = std::tanh(next.c[j]);
        next.h[j] = go[j] * c_tanh[j];
    }

    if (cache) {
        cache->r = r_m;
        cache->f = f_m;
        cache->h_prev = state.h;
        cache->c_prev = state.c;
        cache->g_input = std::move(gi);
        cache->g_forget = std::move(gf);
        cache->g_output = std::move(go);
        cache->g_cand = std::move(gc);
        cache->c = next.c;
        cache->c_tanh = std::move(c_tanh);
    }
    return next;
}

PlainSequenceTrace encode_sequence_plain(const Vec& r, const Vec& f, const PlainCellWeights& w,
                                         bool keep_caches) {
    if (r.size() != f.size() || r.empty()) throw std::invalid_argument("sequence length mismatch");
    PlainSequenceTrace trace;
    trace.hidden.reserve(r.size());
    if (keep_caches) trace.steps.resize(r.size());
    CellState state{Vec(w.state_size(), 0.0), Vec(w.state_size(), 0.0)};
    for (std::size_t m = 0; m < r.size(); ++m) {
        state = plain_cell_step(r[m], f[m], state, w, keep_caches ? &trace.steps[m] : nullptr);
        trace.hidden.push_back(state.h);
    }
    return trace;
}

SequenceBackResult backward_sequence_plain(const PlainSequenceTrace& trace,
                                           const std::vector<Vec>& d_hidden,
                                           const PlainCellWeights& w, PlainCellWeights& grads) {
    const std::size_t steps = trace.steps.size();
    if (steps == 0 || d_hidden.size() != steps) throw std::invalid_argument("trace/gradient mismatch");
    const std::size_t s = w.state_size();

    SequenceBackResult out;
    out.d_r.assign(steps, 0.0);
    out.d_f.assign(steps, 0.0);

    Vec dh(s, 0.0), dc(s, 0.0);
    for (std::size_t mi = steps; mi-- > 0;) {
        const PlainStepCache& st = trace.steps[mi];
        for (std::size_t j = 0; j < s; ++j) dh[j] += d_hidden[mi][j];

        Vec dz_i(s), dz_f(s), dz_o(s), dz_c(s), dc_prev(s);
        for (std::size_t j = 0; j < s; ++j) {
            double tc = st.c_tanh[j];
            double o = st.g_output[j];
            dz_o[j] = dh[j] * tc * o * (1.0 - o);
            double dcj = dc[j] + dh[j] * o * (1.0 - tc * tc);
            double fg = st.g_forget[j], ig = st.g_input[j], cg = st.g_cand[j];
            dc_prev[j] = dcj * fg;
            dz_f[j] = dcj * st.c_prev[j] * fg * (1.0 - fg);
            dz_i[j] = dcj * cg * ig * (1.0 - ig);
            dz_c[j] = dcj * ig * (1.0 - cg * cg);
        }

        Vec in(2 + s);
        in[0] = st.r;
        in[1] = st.f;
        for (std::size_t j = 0; j < s; ++j) in[2 + j] = st.h_prev[j];
        Vec d_in(2 + s, 0.0);
        auto gate_back = [&](const Vec& dz, const Mat& wm, Mat& gm, Vec& gb) {
            for (std::size_t i = 0; i < 2 + s; ++i) {
                double* grow = &gm.a[i * s];
                const double* wrow = &wm.a[i * s];
                double x = in[i];
                double acc = 0.0;
                for (std::size_t j = 0; j < s; ++j) {
                    grow[j] += x * dz[j];
                    acc += wrow[j] * dz[j];
                }
                d_in[i] += acc;
            }
            for (std::size_t j = 0; j < s; ++j) gb[j] += dz[j];
        };
        gate_back(dz_i, w.w_input, grads.w_input, grads.b_input);
        gate_back(dz_f, w.w_forget, grads.w_forget, grads.b_forget);
        gate_back(dz_o, w.w_output, grads.w_output, grads.b_output);
        gate_back(dz_c, w.w_cand, grads.w_cand, grads.b_cand);

        out.d_r[mi] = d_in[0];
        out.d_f[mi] = d_in[1];
        Vec dh_prev(s);
        for (std::size_t j = 0; j < s; ++j) dh_prev[j] = d_in[2 + j];
        dh = std::move(dh_prev);
        dc = std::move(dc_prev);
    }
    return out;
}

}  // namespace gammacas::seq
