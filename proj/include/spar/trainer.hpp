#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "spar/corpus.hpp"
#include "spar/encoder.hpp"
#include "spar/imitation.hpp"

namespace spar {

enum class TrainerMode { standard, init_from_model, joint_frozen_lexical };

TrainerMode parse_trainer_mode(std::string_view name);
std::string_view to_string(TrainerMode mode);

struct TrainerConfig {
    double learning_rate = 1e-2;
    std::size_t batch_size = 32;
    std::size_t epochs = 1;
    std::uint64_t seed = 0;
    TrainerMode mode = TrainerMode::standard;

    // Fresh parameters (standard and joint modes).
    std::size_t dim = 64;
    double init_scale = 0.1;
    Precision precision = Precision::f32;

    // init_from_model: the starting point, copied.
    std::optional<EncoderParams> initial_model;
    // joint_frozen_lexical: the frozen companion and the starting weight.
    std::optional<EncoderParams> frozen_lexical;
    double initial_mu = 1.0;
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double loss = 0.0;      // mean batch loss over the epoch
    std::optional<double> surrogate_mrr;
};

struct TrainResult {
    EncoderParams params;
    std::vector<EpochStats> history;
    std::optional<double> initial_surrogate_mrr;
    std::optional<double> mu;  // joint mode only
};

/// Plain minibatch SGD on the in-batch contrastive loss. An example with n_p
/// positives becomes n_p items sharing its negatives; items are reshuffled
/// every epoch and the last batch may be short. Fresh parameters use the
/// corpus vocabulary under the tokenizer. Surrogate MRR is recorded whenever
/// validation pairs are given. Deterministic for a given seed.
///
/// Throws std::invalid_argument for empty data, a zero batch size, a
/// non-positive learning rate, a missing model for the chosen mode, or a
/// passage id that is not in the corpus. Throws std::runtime_error if the loss
/// stops being finite.
TrainResult train(
    const TrainerConfig& config, const Corpus& corpus, std::span<const ImitationExample> data,
    std::span<const SurrogatePair> validation = {}, const TokenizerConfig& tokenizer = {});

}  // namespace spar
