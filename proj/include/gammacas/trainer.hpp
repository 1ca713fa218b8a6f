#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gammacas/model.hpp"

namespace gammacas::train {

struct TrainConfig {
    std::size_t batch_size = 256;
    double learning_rate = 0.0025;
    std::size_t epochs = 40;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 1;
    double clip_norm = 5.0;
    double dev_fraction = 0.1;

    void validate() const;
};

/// Adam moment accumulators, shapes mirroring the model weights.
struct OptimizerState {
    model::ModelWeights m;
    model::ModelWeights v;
    std::int64_t step = 0;
};

OptimizerState make_optimizer_state(const model::ModelWeights& w);

/// Glorot-uniform matrices, zero biases except the modulation bias (1.0 so
/// the initial modulation is the identity); count-normalizer scales start at
/// 1. Embeddings are uniform in [-0.05, 0.05]. Every value is rounded through
/// f32 so a fresh model round-trips the weight file bit-exactly.
model::ModelWeights init_weights(const model::ModelConfig& cfg, std::uint64_t seed);

/// Mean-over-batch loss and its exact gradients. Throws NumericError when the
/// batch loss is non-finite.
double batch_backward(const std::vector<model::SampleInput>& batch, const model::ModelWeights& w,
                      const model::ModelConfig& cfg, model::ModelWeights& grads);

double global_norm(const model::ModelWeights& grads);

/// Global-norm clipping followed by a standard bias-corrected Adam update.
void adam_step(model::ModelWeights& w, model::ModelWeights& grads, OptimizerState& opt,
               const TrainConfig& tc);

/// Central finite differences on a deterministic ~1% coordinate subsample of
/// each array; returns the max relative deviation per array name.
std::map<std::string, double> grad_check(const model::ModelWeights& w,
                                         const std::vector<model::SampleInput>& batch,
                                         const model::ModelConfig& cfg, double epsilon,
                                         std::uint64_t seed = 17);

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double dev_mape24 = 0.0;
    double dev_tau24 = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    model::ModelWeights best;
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
};

/// Shuffled mini-batch epochs with a held-out dev split; selects the epoch
/// snapshot with the best dev MAPE at the 24h horizon (or the horizon closest
/// to 24h when 24 is not trained). Deterministic under the seed. `initial`
/// overrides init_weights (e.g. embeddings pre-loaded from a vector file).
TrainResult train(std::vector<model::SampleInput> dataset, const model::ModelConfig& cfg,
                  const TrainConfig& tc,
                  const std::function<void(const EpochLog&)>& on_epoch = nullptr,
                  const model::ModelWeights* initial = nullptr);

/// Toy configuration for gradient checking: 8 bins, state 4, embedding dim 8.
model::ModelConfig toy_config(model::Mode mode);

/// Deterministic two-sample batch (two news items each) for the toy config.
std::vector<model::SampleInput> make_gradcheck_batch(const model::ModelConfig& cfg,
                                                     std::uint64_t seed);

}  // namespace gammacas::train
