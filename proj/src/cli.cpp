#include "gammacas/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gammacas/io.hpp"
#include "gammacas/rng.hpp"

namespace gammacas::cli {

using nlohmann::json;

namespace {

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::istringstream ss(csv);
    std::string field;
    while (std::getline(ss, field, ',')) {
        if (field.empty()) continue;
        std::size_t used = 0;
        double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument("bad number in list: " + field);
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty number list");
    return out;
}

const std::set<std::string>& stopwords() {
    static const std::set<std::string> words = {
        "the", "a",   "an",  "and", "or", "of", "to",   "in",   "on",   "for",  "is", "are",
        "was", "at",  "by",  "it",  "this", "that", "with", "as", "be", "from", "over"};
    return words;
}

struct ModelFlags {
    std::string mode = "full";
    double bin_minutes = 5.0;
    double window_hours = 6.0;
    std::string horizons = "12,18,24,36,48,72,120,240,360";
    double zeta = 0.25;
    int quad_steps = 256;
    std::size_t state_size = 16;
    std::size_t embed_dim = 256;
    std::size_t max_len_tweet = 30;
    std::size_t max_len_news = 36;
    std::size_t news_cap = 64;

    model::ModelConfig to_config() const {
        model::ModelConfig cfg;
        cfg.mode = model::mode_from_string(mode);
        cfg.bin_minutes = bin_minutes;
        cfg.window_hours = window_hours;
        cfg.train_horizons = parse_double_list(horizons);
        cfg.zeta = zeta;
        cfg.quad_steps = quad_steps;
        cfg.state_size = state_size;
        cfg.embed_dim = embed_dim;
        cfg.max_len_tweet = max_len_tweet;
        cfg.max_len_news = max_len_news;
        cfg.news_cap = news_cap;
        return cfg;
    }
};

void add_model_flags(CLI::App* cmd, ModelFlags& mf) {
    cmd->add_option("--mode", mf.mode, "full|text_only|cascade_only|plain_lstm");
    cmd->add_option("--bin-minutes", mf.bin_minutes, "observation bin width (minutes)");
    cmd->add_option("--window", mf.window_hours, "observation window (hours)");
    cmd->add_option("--horizons", mf.horizons, "training horizons, hours, comma separated");
    cmd->add_option("--zeta", mf.zeta, "autoregressive loss weight");
    cmd->add_option("--quad-steps", mf.quad_steps, "RK4 sub-intervals");
    cmd->add_option("--state-size", mf.state_size, "cell state size");
    cmd->add_option("--embed-dim", mf.embed_dim, "word embedding dimension");
    cmd->add_option("--max-tweet", mf.max_len_tweet, "max tweet tokens");
    cmd->add_option("--max-news", mf.max_len_news, "max headline tokens");
    cmd->add_option("--news-cap", mf.news_cap, "max news items per cascade window");
}

int cmd_simulate(const std::string& out_dir, const pp::SynthConfig& scfg, double split_train) {
    pp::SynthCorpus corpus = pp::synth_corpus(scfg);
    io::save_news(corpus.news, out_dir + "/news.jsonl");
    io::write_truth_csv(corpus, out_dir + "/truth.csv");
    if (split_train > 0.0) {
        auto cut = static_cast<std::size_t>(std::llround(split_train *
                                                         static_cast<double>(corpus.cascades.size())));
        std::vector<seq::CascadeRecord> head(corpus.cascades.begin(),
                                             corpus.cascades.begin() + static_cast<long>(cut));
        std::vector<seq::CascadeRecord> tail(corpus.cascades.begin() + static_cast<long>(cut),
                                             corpus.cascades.end());
        io::save_cascades(head, out_dir + "/cascades_train.jsonl");
        io::save_cascades(tail, out_dir + "/cascades_test.jsonl");
    } else {
        io::save_cascades(corpus.cascades, out_dir + "/cascades.jsonl");
    }
    std::cerr << "simulate: " << corpus.cascades.size() << " cascades, " << corpus.news.size()
              << " news items -> " << out_dir << "\n";
    return 0;
}

struct LoadedData {
    std::vector<seq::CascadeRecord> cascades;
    io::NewsIndex news;
};

LoadedData load_data(const std::string& cascade_path, const std::string& news_path,
                     std::size_t min_size) {
    LoadedData data;
    io::LoadStats stats;
    data.cascades = io::load_cascades(cascade_path, min_size, &stats);
    if (stats.dropped_small)
        std::cerr << "load: dropped " << stats.dropped_small << " cascades below " << min_size
                  << " events\n";
    if (data.cascades.empty()) throw DataError("no cascades left after filtering");
    if (!news_path.empty()) data.news = io::NewsIndex(io::load_news(news_path));
    return data;
}

int cmd_train(const std::string& cascade_path, const std::string& news_path,
              const std::string& model_path, const std::string& log_path,
              const std::string& embedding_path, const ModelFlags& mf,
              const train::TrainConfig& tc, std::size_t min_size, std::size_t min_freq) {
    model::ModelConfig cfg = mf.to_config();
    text::Vocab vocab = cfg.mode == model::Mode::cascade_only
                            ? text::Vocab{}
                            : io::build_vocab(cascade_path, news_path, min_freq);
    cfg.vocab_size = std::max<std::size_t>(vocab.size(), 2);
    cfg.validate();

    LoadedData data = load_data(cascade_path, news_path, min_size);
    std::vector<model::SampleInput> samples;
    std::size_t rejected = 0;
    for (const auto& rec : data.cascades) {
        model::SampleInput s = io::make_sample(rec, data.news, vocab, cfg, true);
        bool ok = true;
        for (double a : s.actual_sizes)
            if (a < 1.0) ok = false;
        if (!ok) {
            ++rejected;
            continue;
        }
        samples.push_back(std::move(s));
    }
    if (rejected)
        std::cerr << "train: rejected " << rejected << " samples with zero-size horizons\n";
    if (samples.empty()) throw DataError("no trainable samples");

    model::ModelWeights initial = train::init_weights(cfg, tc.seed);
    if (!embedding_path.empty() && cfg.mode != model::Mode::cascade_only)
        io::load_embedding_file(embedding_path, vocab, initial.text.embedding);

    auto on_epoch = [](const train::EpochLog& log) {
        std::cerr << "epoch " << log.epoch << " loss " << log.train_loss << " devMAPE@24 "
                  << log.dev_mape24 << " devTau@24 " << log.dev_tau24 << " (" << log.seconds
                  << "s)\n";
    };
    train::TrainResult result = train::train(samples, cfg, tc, on_epoch, &initial);

    model::save_weights(result.best, model_path);
    io::save_run_config(cfg, vocab, model_path);
    if (!log_path.empty()) io::write_training_log_csv(result.log, log_path);
    std::cerr << "train: best epoch " << result.best_epoch << " -> " << model_path << "\n";
    return 0;
}

int cmd_predict(const std::string& cascade_path, const std::string& news_path,
                const std::string& model_path, const std::string& out_path,
                const std::string& horizons_csv, std::size_t min_size) {
    auto [cfg, vocab] = io::load_run_config(model_path);
    model::ModelWeights weights = model::load_weights(model_path, cfg);
    std::vector<double> horizons =
        horizons_csv.empty() ? cfg.train_horizons : parse_double_list(horizons_csv);

    LoadedData data = load_data(cascade_path, news_path, min_size);
    std::vector<metrics::PredictionRow> rows;
    for (const auto& rec : data.cascades) {
        model::SampleInput s = io::make_sample(rec, data.news, vocab, cfg, false);
        model::ForwardOutput out = model::forward(s, weights, cfg, horizons);
        for (std::size_t i = 0; i < horizons.size(); ++i) {
            metrics::PredictionRow row;
            row.id = rec.id;
            row.horizon = horizons[i];
            row.predicted = out.predictions[i];
            row.actual = static_cast<double>(io::actual_size(rec, horizons[i]));
            rows.push_back(std::move(row));
        }
    }
    io::write_predictions_csv(rows, out_path);
    std::cerr << "predict: " << rows.size() << " rows -> " << out_path << "\n";
    return 0;
}

int cmd_evaluate(const std::string& predictions_path, const std::string& truth_path,
                 const std::string& buckets_csv, const std::string& out_path) {
    std::vector<metrics::PredictionRow> rows = io::read_predictions_csv(predictions_path);
    if (rows.empty()) throw DataError("no prediction rows in " + predictions_path);

    if (!truth_path.empty()) {
        io::TruthTable truth = io::read_truth_csv(truth_path);
        std::map<std::string, const io::TruthRow*> by_id;
        for (const auto& row : truth.rows) by_id[row.id] = &row;
        std::size_t missing = 0;
        std::vector<metrics::PredictionRow> matched;
        for (auto& r : rows) {
            auto it = by_id.find(r.id);
            const io::TruthRow* t = it == by_id.end() ? nullptr : it->second;
            std::size_t col = truth.horizons.size();
            if (t)
                for (std::size_t i = 0; i < truth.horizons.size(); ++i)
                    if (std::abs(truth.horizons[i] - r.horizon) < 1e-9) col = i;
            if (!t || col == truth.horizons.size()) {
                ++missing;
                continue;
            }
            r.actual = t->sizes[col];
            matched.push_back(r);
        }
        if (missing) std::cerr << "evaluate: " << missing << " rows without ground truth\n";
        rows = std::move(matched);
        if (rows.empty()) throw DataError("no rows matched the ground-truth table");
    }

    metrics::BucketScheme scheme = metrics::BucketScheme::default_scheme();
    if (!buckets_csv.empty()) scheme.edges = parse_double_list(buckets_csv);
    scheme.validate();

    std::map<double, std::vector<metrics::PredictionRow>> by_horizon;
    for (const auto& r : rows) by_horizon[r.horizon].push_back(r);

    json doc;
    for (const auto& [hz, group] : by_horizon) {
        metrics::MetricsSummary s = metrics::summarize(group, scheme);
        doc[io::format_double(hz)] = {{"mape", s.mape},
                                      {"kendall_tau", s.kendall_tau},
                                      {"spearman_rho", s.spearman_rho},
                                      {"step_tau", s.step_tau},
                                      {"n", s.n}};
    }
    std::string text = doc.dump(2) + "\n";
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        std::ofstream f(out_path, std::ios::trunc);
        if (!f) throw DataError("cannot open " + out_path);
        f << text;
    }
    return 0;
}

int cmd_fit_hawkes(const std::string& cascade_path, double window_hours,
                   const std::string& horizons_csv, const std::string& out_path,
                   std::size_t min_size) {
    std::vector<double> horizons = parse_double_list(horizons_csv);
    LoadedData data = load_data(cascade_path, "", min_size);
    std::vector<metrics::PredictionRow> rows;
    std::size_t skipped = 0, supercritical = 0;
    for (const auto& rec : data.cascades) {
        std::vector<double> observed;
        for (const auto& e : rec.events) {
            double t = e.t_seconds / 3600.0;
            if (t <= window_hours) observed.push_back(t);
        }
        if (observed.size() < 5) {
            ++skipped;
            continue;
        }
        pp::HawkesFit fit = pp::fit_hawkes(observed, window_hours);
        for (double hz : horizons) {
            metrics::PredictionRow row;
            row.id = rec.id;
            row.horizon = hz;
            row.predicted = pp::hawkes_predict_size(fit.params, observed, window_hours, hz);
            if (std::isinf(row.predicted)) ++supercritical;
            row.actual = static_cast<double>(io::actual_size(rec, hz));
            rows.push_back(std::move(row));
        }
    }
    if (skipped) std::cerr << "fit-hawkes: skipped " << skipped << " cascades with < 5 observed events\n";
    if (supercritical)
        std::cerr << "fit-hawkes: " << supercritical << " predictions flagged supercritical (overshoot risk)\n";
    io::write_predictions_csv(rows, out_path);
    std::cerr << "fit-hawkes: " << rows.size() << " rows -> " << out_path << "\n";
    return 0;
}

int cmd_inspect(const std::string& cascade_path, const std::string& news_path,
                const std::string& model_path, const std::vector<std::string>& ids,
                std::size_t limit, const std::string& out_path) {
    auto [cfg, vocab] = io::load_run_config(model_path);
    model::ModelWeights weights = model::load_weights(model_path, cfg);
    LoadedData data = load_data(cascade_path, news_path, 0);

    std::set<std::string> wanted(ids.begin(), ids.end());
    json doc = json::array();
    std::size_t emitted = 0;
    for (const auto& rec : data.cascades) {
        if (!wanted.empty() && !wanted.count(rec.id)) continue;
        if (limit && emitted >= limit) break;
        model::SampleInput s = io::make_sample(rec, data.news, vocab, cfg, false);
        model::ForwardOutput out = model::forward(s, weights, cfg, cfg.train_horizons);

        json entry;
        entry["id"] = rec.id;
        entry["pooled"] = {{"A", out.pooled.scale},
                           {"gamma", out.pooled.growth},
                           {"lambda", out.pooled.decay}};
        entry["modulation"] = out.modulation;
        json bins = json::array();
        for (const auto& t : out.per_bin) bins.push_back({{"A", t[0]}, {"gamma", t[1]}, {"lambda", t[2]}});
        entry["per_bin"] = std::move(bins);
        json preds;
        for (std::size_t i = 0; i < cfg.train_horizons.size(); ++i)
            preds[io::format_double(cfg.train_horizons[i])] = out.predictions[i];
        entry["predictions"] = std::move(preds);

        // Word attentions, stopwords filtered from the report only.
        json alpha = json::array();
        for (std::size_t i = 0; i < out.tweet_alpha.size(); ++i) {
            int id = s.tweet.ids[i];
            const std::string& tok = vocab.tokens[static_cast<std::size_t>(id)];
            if (stopwords().count(tok)) continue;
            alpha.push_back({{"token", tok}, {"weight", out.tweet_alpha[i]}});
        }
        entry["word_attention"] = std::move(alpha);

        auto window = data.news.window(rec.root_time - cfg.window_hours * 3600.0,
                                       rec.root_time + cfg.window_hours * 3600.0, cfg.news_cap);
        json beta = json::array();
        for (std::size_t jn = 0; jn < out.news_beta.size(); ++jn)
            beta.push_back({{"headline", window[jn]->headline},
                            {"time", window[jn]->time},
                            {"weight", out.news_beta[jn]}});
        entry["news_attention"] = std::move(beta);

        doc.push_back(std::move(entry));
        ++emitted;
    }
    std::string text = doc.dump(2) + "\n";
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        std::ofstream f(out_path, std::ios::trunc);
        if (!f) throw DataError("cannot open " + out_path);
        f << text;
    }
    return 0;
}

int cmd_gradcheck(const std::string& mode_arg, double epsilon) {
    std::vector<model::Mode> modes;
    if (mode_arg == "all") {
        modes = {model::Mode::full, model::Mode::text_only, model::Mode::cascade_only,
                 model::Mode::plain_lstm};
    } else {
        modes = {model::mode_from_string(mode_arg)};
    }
    bool ok = true;
    for (model::Mode m : modes) {
        model::ModelConfig cfg = train::toy_config(m);
        std::vector<model::SampleInput> batch = train::make_gradcheck_batch(cfg, 7);
        model::ModelWeights w = train::init_weights(cfg, 11);
        auto report = train::grad_check(w, batch, cfg, epsilon);
        double worst = 0.0;
        for (const auto& [name, err] : report) {
            std::cout << model::mode_to_string(m) << ' ' << name << ' ' << err << '\n';
            worst = std::max(worst, err);
        }
        std::cout << model::mode_to_string(m) << " max " << worst << '\n';
        ok = ok && worst <= 1e-4;
    }
    if (!ok) throw NumericError("gradient check exceeded 1e-4");
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"GammaCas cascade-size predictor"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a synthetic corpus");
    std::string sim_out = ".";
    pp::SynthConfig scfg;
    double split_train = 0.0;
    std::string sim_topics;
    sim->add_option("--out-dir", sim_out, "output directory")->required();
    sim->add_option("--n", scfg.n_cascades, "number of cascades");
    sim->add_option("--seed", scfg.seed, "corpus seed");
    sim->add_option("--scale-lo", scfg.scale_lo);
    sim->add_option("--scale-hi", scfg.scale_hi);
    sim->add_option("--growth-lo", scfg.growth_lo);
    sim->add_option("--growth-hi", scfg.growth_hi);
    sim->add_option("--decay-lo", scfg.decay_lo);
    sim->add_option("--decay-hi", scfg.decay_hi);
    sim->add_option("--follower-exponent", scfg.follower_exponent);
    sim->add_option("--follower-min", scfg.follower_min);
    sim->add_option("--news-rate", scfg.news_rate_per_hour, "news items per hour");
    sim->add_option("--news-topic-frac", scfg.news_topic_fraction);
    sim->add_option("--horizon", scfg.horizon_hours, "simulation horizon (hours)");
    sim->add_option("--span-days", scfg.span_days);
    sim->add_option("--coupling", scfg.gamma_follower_coupling, "gamma/follower coupling");
    sim->add_option("--topics", sim_topics, "token:multiplier list, e.g. alpha:1,bravo:2");
    sim->add_option("--split-train", split_train, "fraction written to cascades_train.jsonl");

    // train
    auto* tr = app.add_subcommand("train", "train a model");
    std::string tr_cascades, tr_news, tr_model = "model.gcas", tr_log, tr_embeddings;
    ModelFlags tr_mf;
    train::TrainConfig tc;
    std::size_t tr_min_size = 10, tr_min_freq = 1;
    tr->add_option("--cascades", tr_cascades)->required();
    tr->add_option("--news", tr_news);
    tr->add_option("--out", tr_model, "model output path");
    tr->add_option("--log", tr_log, "training log CSV path");
    tr->add_option("--embeddings", tr_embeddings, "pretrained embedding file");
    add_model_flags(tr, tr_mf);
    tr->add_option("--epochs", tc.epochs);
    tr->add_option("--batch", tc.batch_size);
    tr->add_option("--lr", tc.learning_rate);
    tr->add_option("--seed", tc.seed);
    tr->add_option("--clip", tc.clip_norm);
    tr->add_option("--dev-frac", tc.dev_fraction);
    tr->add_option("--min-size", tr_min_size, "drop cascades with fewer events");
    tr->add_option("--min-freq", tr_min_freq, "vocab frequency threshold");

    // predict
    auto* pr = app.add_subcommand("predict", "predict cascade sizes");
    std::string pr_cascades, pr_news, pr_model, pr_out = "predictions.csv", pr_horizons;
    std::size_t pr_min_size = 10;
    pr->add_option("--cascades", pr_cascades)->required();
    pr->add_option("--news", pr_news);
    pr->add_option("--model", pr_model)->required();
    pr->add_option("--out", pr_out);
    pr->add_option("--horizons", pr_horizons, "override horizons (hours)");
    pr->add_option("--min-size", pr_min_size);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "metrics report from a prediction CSV");
    std::string ev_pred, ev_truth, ev_buckets, ev_out;
    ev->add_option("--predictions", ev_pred)->required();
    ev->add_option("--truth", ev_truth, "ground-truth table replacing actual sizes");
    ev->add_option("--buckets", ev_buckets, "step-tau bucket edges");
    ev->add_option("--out", ev_out, "report path (default stdout)");

    // fit-hawkes
    auto* fh = app.add_subcommand("fit-hawkes", "exponential-kernel Hawkes baseline");
    std::string fh_cascades, fh_out = "hawkes.csv", fh_horizons = "12,18,24,36,48,72,120,240,360";
    double fh_window = 6.0;
    std::size_t fh_min_size = 10;
    fh->add_option("--cascades", fh_cascades)->required();
    fh->add_option("--window", fh_window, "observation window (hours)");
    fh->add_option("--horizons", fh_horizons);
    fh->add_option("--out", fh_out);
    fh->add_option("--min-size", fh_min_size);

    // inspect
    auto* in = app.add_subcommand("inspect", "dump parameters and attention traces");
    std::string in_cascades, in_news, in_model, in_out;
    std::vector<std::string> in_ids;
    std::size_t in_limit = 0;
    in->add_option("--cascades", in_cascades)->required();
    in->add_option("--news", in_news);
    in->add_option("--model", in_model)->required();
    in->add_option("--id", in_ids, "cascade ids (default: all)");
    in->add_option("--limit", in_limit, "max cascades to dump");
    in->add_option("--out", in_out, "output path (default stdout)");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
    std::string gc_mode = "all";
    double gc_eps = 1e-5;
    gc->add_option("--mode", gc_mode, "full|text_only|cascade_only|plain_lstm|all");
    gc->add_option("--eps", gc_eps, "finite-difference step");

    std::vector<const char*> argv;
    argv.push_back("gammacas");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) {
            if (!sim_topics.empty()) {
                scfg.topics.clear();
                std::istringstream ss(sim_topics);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    auto colon = item.find(':');
                    if (colon == std::string::npos)
                        throw std::invalid_argument("topics must be token:multiplier");
                    scfg.topics.push_back(
                        {item.substr(0, colon), std::stod(item.substr(colon + 1))});
                }
            }
            return cmd_simulate(sim_out, scfg, split_train);
        }
        if (tr->parsed())
            return cmd_train(tr_cascades, tr_news, tr_model, tr_log, tr_embeddings, tr_mf, tc,
                             tr_min_size, tr_min_freq);
        if (pr->parsed())
            return cmd_predict(pr_cascades, pr_news, pr_model, pr_out, pr_horizons, pr_min_size);
        if (ev->parsed()) return cmd_evaluate(ev_pred, ev_truth, ev_buckets, ev_out);
        if (fh->parsed())
            return cmd_fit_hawkes(fh_cascades, fh_window, fh_horizons, fh_out, fh_min_size);
        if (in->parsed())
            return cmd_inspect(in_cascades, in_news, in_model, in_ids, in_limit, in_out);
        if (gc->parsed()) return cmd_gradcheck(gc_mode, gc_eps);
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace gammacas::cli
