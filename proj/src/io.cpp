#include <cmath>
#include "gammacas/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace gammacas::io {

using nlohmann::json;

std::string format_double(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
        return buf;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Trim to the shortest representation that round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[32];
        std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
        if (std::strtod(shorter, nullptr) == v) return shorter;
    }
    return buf;
}

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open file: " + path);
    return f;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open file for writing: " + path);
    return f;
}

json parse_line(const std::string& line, const std::string& path, std::size_t line_no) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw DataError(path + ":" + std::to_string(line_no) + ": bad JSON (" + e.what() + ")");
    }
}

}  // namespace

std::vector<seq::CascadeRecord> load_cascades(const std::string& path, std::size_t min_size,
                                              LoadStats* stats) {
    std::ifstream f = open_in(path);
    std::vector<seq::CascadeRecord> out;
    std::string line;
    std::size_t line_no = 0;
    LoadStats local;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = parse_line(line, path, line_no);
        auto where = [&] { return path + ":" + std::to_string(line_no); };
        try {
            seq::CascadeRecord rec;
            rec.id = j.at("id").get<std::string>();
            rec.root_time = j.at("root_time").get<double>();
            rec.root_text = j.at("root_text").get<std::string>();
            rec.root_followers = j.at("root_followers").get<std::int64_t>();
            double prev = -1.0;
            for (const auto& ev : j.at("events")) {
                if (!ev.is_array() || ev.size() != 2)
                    throw DataError(where() + ": event entries must be [t_rel_s, followers]");
                seq::Event e{ev[0].get<double>(), ev[1].get<std::int64_t>()};
                if (e.t_seconds < 0.0)
                    throw DataError(where() + ": negative event time");
                if (e.t_seconds < prev)
                    throw DataError(where() + ": events out of order");
                if (e.followers < 0)
                    throw DataError(where() + ": negative follower count");
                prev = e.t_seconds;
                rec.events.push_back(e);
            }
            if (rec.events.size() < min_size) {
                ++local.dropped_small;
                continue;
            }
            ++local.kept;
            out.push_back(std::move(rec));
        } catch (const json::exception& e) {
            throw DataError(where() + ": schema violation (" + e.what() + ")");
        }
    }
    if (stats) *stats = local;
    return out;
}

void save_cascades(const std::vector<seq::CascadeRecord>& cascades, const std::string& path) {
    std::ofstream f = open_out(path);
    for (const auto& rec : cascades) {
        json ev = json::array();
        for (const auto& e : rec.events) ev.push_back({e.t_seconds, e.followers});
        json j{{"id", rec.id},
               {"root_time", rec.root_time},
               {"root_text", rec.root_text},
               {"root_followers", rec.root_followers},
               {"events", std::move(ev)}};
        f << j.dump() << '\n';
    }
    if (!f) throw DataError("failed writing " + path);
}

std::vector<text::NewsRecord> load_news(const std::string& path) {
    std::ifstream f = open_in(path);
    std::vector<text::NewsRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = parse_line(line, path, line_no);
        try {
            text::NewsRecord n;
            n.time = j.at("time").get<double>();
            n.headline = j.at("headline").get<std::string>();
            n.source = j.value("source", std::string{});
            out.push_back(std::move(n));
        } catch (const json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": schema violation (" +
                            e.what() + ")");
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.time < b.time; });
    return out;
}

void save_news(const std::vector<text::NewsRecord>& news, const std::string& path) {
    std::ofstream f = open_out(path);
    for (const auto& n : news) {
        json j{{"time", n.time}, {"headline", n.headline}, {"source", n.source}};
        f << j.dump() << '\n';
    }
    if (!f) throw DataError("failed writing " + path);
}

NewsIndex::NewsIndex(std::vector<text::NewsRecord> news) : news_(std::move(news)) {
    std::stable_sort(news_.begin(), news_.end(),
                     [](const auto& a, const auto& b) { return a.time < b.time; });
}

std::vector<const text::NewsRecord*> NewsIndex::window(double lo_epoch, double hi_epoch,
                                                       std::size_t cap) const {
    auto lo = std::lower_bound(news_.begin(), news_.end(), lo_epoch,
                               [](const text::NewsRecord& n, double t) { return n.time < t; });
    auto hi = std::upper_bound(news_.begin(), news_.end(), hi_epoch,
                               [](double t, const text::NewsRecord& n) { return t < n.time; });
    std::vector<const text::NewsRecord*> out;
    for (auto it = lo; it != hi; ++it) out.push_back(&*it);
    if (out.size() > cap) out.erase(out.begin(), out.end() - static_cast<long>(cap));
    return out;
}

text::Vocab build_vocab(const std::string& cascade_path, const std::string& news_path,
                        std::size_t min_freq) {
    std::map<std::string, std::size_t> freq;
    {
        std::ifstream f = open_in(cascade_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(f, line)) {
            ++line_no;
            if (line.empty()) continue;
            json j = parse_line(line, cascade_path, line_no);
            for (const auto& tok : text::clean_tokens(j.value("root_text", std::string{})))
                ++freq[tok];
        }
    }
    if (!news_path.empty()) {
        std::ifstream f = open_in(news_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(f, line)) {
            ++line_no;
            if (line.empty()) continue;
            json j = parse_line(line, news_path, line_no);
            for (const auto& tok : text::clean_tokens(j.value("headline", std::string{})))
                ++freq[tok];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    text::Vocab vocab;
    for (const auto& [tok, count] : items)
        if (count >= min_freq) vocab.add(tok);
    return vocab;
}

std::size_t actual_size(const seq::CascadeRecord& rec, double horizon_hours) {
    double limit = horizon_hours * 3600.0;
    std::size_t n = 0;
    for (const auto& e : rec.events)
        if (e.t_seconds <= limit) ++n;
    return n;
}

model::SampleInput make_sample(const seq::CascadeRecord& rec, const NewsIndex& news,
                               const text::Vocab& vocab, const model::ModelConfig& cfg,
                               bool with_targets) {
    model::SampleInput s;
    s.id = rec.id;
    s.binned = seq::bin_cascade(rec, cfg.bin_width_hours(), cfg.bins());
    s.tweet = text::tokenize(rec.root_text, vocab, cfg.max_len_tweet);
    double half = cfg.window_hours * 3600.0;
    for (const text::NewsRecord* n :
         news.window(rec.root_time - half, rec.root_time + half, cfg.news_cap))
        s.news.push_back(text::tokenize(n->headline, vocab, cfg.max_len_news));
    if (with_targets) {
        for (double hz : cfg.train_horizons)
            s.actual_sizes.push_back(static_cast<double>(actual_size(rec, hz)));
    }
    return s;
}

void load_embedding_file(const std::string& path, const text::Vocab& vocab, Mat& embedding) {
    std::ifstream f = open_in(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string token;
        ss >> token;
        auto it = vocab.index.find(token);
        std::vector<double> values;
        double v;
        while (ss >> v) values.push_back(v);
        if (values.size() != embedding.cols)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(embedding.cols) + " values");
        if (it == vocab.index.end()) continue;
        for (std::size_t j = 0; j < embedding.cols; ++j)
            embedding(static_cast<std::size_t>(it->second), j) = values[j];
    }
}

void write_predictions_csv(const std::vector<metrics::PredictionRow>& rows,
                           const std::string& path) {
    std::ofstream f = open_out(path);
    f << "id,horizon,predicted,actual\n";
    for (const auto& r : rows)
        f << r.id << ',' << format_double(r.horizon) << ',' << format_double(r.predicted) << ','
          << format_double(r.actual) << '\n';
    if (!f) throw DataError("failed writing " + path);
}

std::vector<metrics::PredictionRow> read_predictions_csv(const std::string& path) {
    std::ifstream f = open_in(path);
    std::vector<metrics::PredictionRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("id,", 0) == 0) continue;
        std::istringstream ss(line);
        metrics::PredictionRow r;
        std::string field;
        if (!std::getline(ss, r.id, ',')) throw DataError(path + ": bad row " + std::to_string(line_no));
        auto next = [&](double& out) {
            if (!std::getline(ss, field, ','))
                throw DataError(path + ": bad row " + std::to_string(line_no));
            out = std::strtod(field.c_str(), nullptr);
        };
        next(r.horizon);
        next(r.predicted);
        next(r.actual);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_truth_csv(const pp::SynthCorpus& corpus, const std::string& path) {
    std::ofstream f = open_out(path);
    f << "id,A,gamma,lambda";
    for (double hz : corpus.truth_horizons) f << ",size_" << format_double(hz) << "h";
    f << '\n';
    for (const auto& row : corpus.truth) {
        f << row.id << ',' << format_double(row.params.scale) << ','
          << format_double(row.params.growth) << ',' << format_double(row.params.decay);
        for (double s : row.sizes) f << ',' << format_double(s);
        f << '\n';
    }
    if (!f) throw DataError("failed writing " + path);
}

TruthTable read_truth_csv(const std::string& path) {
    std::ifstream f = open_in(path);
    TruthTable table;
    std::string line;
    if (!std::getline(f, line)) throw DataError(path + ": empty truth table");
    {
        std::istringstream ss(line);
        std::string col;
        int idx = 0;
        while (std::getline(ss, col, ',')) {
            if (idx >= 4) {
                if (col.rfind("size_", 0) != 0 || col.back() != 'h')
                    throw DataError(path + ": bad size column " + col);
                table.horizons.push_back(std::strtod(col.c_str() + 5, nullptr));
            }
            ++idx;
        }
    }
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        TruthRow row;
        std::string field;
        if (!std::getline(ss, row.id, ','))
            throw DataError(path + ": bad row " + std::to_string(line_no));
        auto next = [&]() {
            if (!std::getline(ss, field, ','))
                throw DataError(path + ": bad row " + std::to_string(line_no));
            return std::strtod(field.c_str(), nullptr);
        };
        row.params.scale = next();
        row.params.growth = next();
        row.params.decay = next();
        for (std::size_t i = 0; i < table.horizons.size(); ++i) row.sizes.push_back(next());
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_training_log_csv(const std::vector<train::EpochLog>& log, const std::string& path) {
    std::ofstream f = open_out(path);
    f << "epoch,train_loss,dev_mape24,dev_tau24,seconds\n";
    for (const auto& row : log)
        f << row.epoch << ',' << format_double(row.train_loss) << ','
          << format_double(row.dev_mape24) << ',' << format_double(row.dev_tau24) << ','
          << format_double(row.seconds) << '\n';
    if (!f) throw DataError("failed writing " + path);
}

void save_run_config(const model::ModelConfig& cfg, const text::Vocab& vocab,
                     const std::string& model_path) {
    json j{{"mode", model::mode_to_string(cfg.mode)},
           {"bin_minutes", cfg.bin_minutes},
           {"window_hours", cfg.window_hours},
           {"train_horizons", cfg.train_horizons},
           {"zeta", cfg.zeta},
           {"quad_steps", cfg.quad_steps},
           {"state_size", cfg.state_size},
           {"embed_dim", cfg.embed_dim},
           {"max_len_tweet", cfg.max_len_tweet},
           {"max_len_news", cfg.max_len_news},
           {"news_cap", cfg.news_cap},
           {"vocab", std::vector<std::string>(vocab.tokens.begin() + 2, vocab.tokens.end())}};
    std::ofstream f = open_out(model_path + ".json");
    f << j.dump(2) << '\n';
    if (!f) throw DataError("failed writing " + model_path + ".json");
}

std::pair<model::ModelConfig, text::Vocab> load_run_config(const std::string& model_path) {
    std::ifstream f = open_in(model_path + ".json");
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw DataError(model_path + ".json: bad JSON (" + std::string(e.what()) + ")");
    }
    model::ModelConfig cfg;
    try {
        cfg.mode = model::mode_from_string(j.at("mode").get<std::string>());
        cfg.bin_minutes = j.at("bin_minutes").get<double>();
        cfg.window_hours = j.at("window_hours").get<double>();
        cfg.train_horizons = j.at("train_horizons").get<std::vector<double>>();
        cfg.zeta = j.at("zeta").get<double>();
        cfg.quad_steps = j.at("quad_steps").get<int>();
        cfg.state_size = j.at("state_size").get<std::size_t>();
        cfg.embed_dim = j.at("embed_dim").get<std::size_t>();
        cfg.max_len_tweet = j.at("max_len_tweet").get<std::size_t>();
        cfg.max_len_news = j.at("max_len_news").get<std::size_t>();
        cfg.news_cap = j.at("news_cap").get<std::size_t>();
        text::Vocab vocab;
        for (const auto& tok : j.at("vocab")) vocab.add(tok.get<std::string>());
        cfg.vocab_size = vocab.size();
        return {cfg, vocab};
    } catch (const json::exception& e) {
        throw DataError(model_path + ".json: schema violation (" + std::string(e.what()) + ")");
    }
}

}  // namespace gammacas::io
