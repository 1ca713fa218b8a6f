#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gammacas/encoder.hpp"
#include "gammacas/metrics.hpp"
#include "gammacas/model.hpp"
#include "gammacas/pointprocess.hpp"
#include "gammacas/text.hpp"
#include "gammacas/trainer.hpp"

namespace gammacas::io {

struct LoadStats {
    std::size_t kept = 0;
    std::size_t dropped_small = 0;
};

/// JSON Lines: {"id", "root_time", "root_text", "root_followers",
/// "events": [[t_rel_s, followers], ...]}. Malformed lines raise DataError
/// naming the line; cascades with fewer than min_size events are dropped.
std::vector<seq::CascadeRecord> load_cascades(const std::string& path, std::size_t min_size,
                                              LoadStats* stats = nullptr);
void save_cascades(const std::vector<seq::CascadeRecord>& cascades, const std::string& path);

/// JSON Lines: {"time", "headline", "source"}; returned sorted by time.
std::vector<text::NewsRecord> load_news(const std::string& path);
void save_news(const std::vector<text::NewsRecord>& news, const std::string& path);

/// Time-sorted news with closed-interval window queries capped at the most
/// recent items.
class NewsIndex {
  public:
    NewsIndex() = default;
    explicit NewsIndex(std::vector<text::NewsRecord> news);
    std::vector<const text::NewsRecord*> window(double lo_epoch, double hi_epoch,
                                                std::size_t cap) const;
    const std::vector<text::NewsRecord>& all() const { return news_; }

  private:
    std::vector<text::NewsRecord> news_;
};

/// Tokens with corpus frequency >= min_freq across both files, indexed by
/// descending frequency then lexicographic; ids 0/1 stay pad/unk.
text::Vocab build_vocab(const std::string& cascade_path, const std::string& news_path,
                        std::size_t min_freq);

/// Number of events arriving within the horizon (t <= horizon).
std::size_t actual_size(const seq::CascadeRecord& rec, double horizon_hours);

/// Bins, tokenizes and (optionally) attaches per-horizon actual sizes.
model::SampleInput make_sample(const seq::CascadeRecord& rec, const NewsIndex& news,
                               const text::Vocab& vocab, const model::ModelConfig& cfg,
                               bool with_targets);

/// Plain-text embedding file: token followed by embed_dim decimals per line.
/// Rows for tokens absent from the vocab are ignored.
void load_embedding_file(const std::string& path, const text::Vocab& vocab, Mat& embedding);

void write_predictions_csv(const std::vector<metrics::PredictionRow>& rows,
                           const std::string& path);
std::vector<metrics::PredictionRow> read_predictions_csv(const std::string& path);

/// Ground-truth table: CSV id,A,gamma,lambda,size_12h,...
struct TruthRow {
    std::string id;
    growth::GrowthParams params;
    std::vector<double> sizes;
};
struct TruthTable {
    std::vector<double> horizons;
    std::vector<TruthRow> rows;
};
void write_truth_csv(const pp::SynthCorpus& corpus, const std::string& path);
TruthTable read_truth_csv(const std::string& path);

void write_training_log_csv(const std::vector<train::EpochLog>& log, const std::string& path);

/// JSON sidecar (<model path>.json) carrying the model config and vocab so
/// that predict/inspect can rebuild the exact setup.
void save_run_config(const model::ModelConfig& cfg, const text::Vocab& vocab,
                     const std::string& model_path);
std::pair<model::ModelConfig, text::Vocab> load_run_config(const std::string& model_path);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace gammacas::io
