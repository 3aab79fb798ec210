#include "spar/trainer.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "spar/detail/contrastive.hpp"
#include "spar/evaluation.hpp"
#include "spar/rng.hpp"

namespace spar {

TrainerMode parse_trainer_mode(std::string_view name)
{
    if (name == "standard") {
        return TrainerMode::standard;
    }
    if (name == "init_from_model") {
        return TrainerMode::init_from_model;
    }
    if (name == "joint_frozen_lexical") {
        return TrainerMode::joint_frozen_lexical;
    }
    throw std::invalid_argument(
        "unknown trainer mode '" + std::string(name) + "' (expected standard, init_from_model or joint_frozen_lexical)");
}

std::string_view to_string(TrainerMode mode)
{
    switch (mode) {
    case TrainerMode::standard:
        return "standard";
    case TrainerMode::init_from_model:
        return "init_from_model";
    case TrainerMode::joint_frozen_lexical:
        return "joint_frozen_lexical";
    }
    return "standard";
}

namespace {

struct Item {
    std::size_t example;
    std::size_t positive;  // corpus position
};

EncoderParams initial_params(const TrainerConfig& cfg, const Corpus& corpus, const TokenizerConfig& tokenizer)
{
    if (cfg.mode == TrainerMode::init_from_model) {
        if (!cfg.initial_model) {
            throw std::invalid_argument("init_from_model mode needs an initial model");
        }
        return *cfg.initial_model;
    }
    if (cfg.initial_model) {
        return *cfg.initial_model;
    }
    return EncoderParams::random(
        build_vocab(corpus, tokenizer), cfg.dim, mix_seed(cfg.seed, 0x1a17), cfg.precision, cfg.init_scale);
}

void sgd_step(Matrix& table, const detail::RowGradients& grad, double lr, Precision precision)
{
    const auto& rows = grad.touched_rows();
    for (std::size_t slot = 0; slot < rows.size(); ++slot) {
        auto dst = table.row(rows[slot]);
        auto g = grad.gradient(slot);
        for (std::size_t t = 0; t < dst.size(); ++t) {
            dst[t] = store(precision, dst[t] - lr * g[t]);
        }
    }
}

}  // namespace

TrainResult train(
    const TrainerConfig& config, const Corpus& corpus, std::span<const ImitationExample> data,
    std::span<const SurrogatePair> validation, const TokenizerConfig& tokenizer)
{
    if (data.empty()) {
        throw std::invalid_argument("training needs at least one imitation example");
    }
    if (config.batch_size == 0) {
        throw std::invalid_argument("batch size must be positive");
    }
    if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
        throw std::invalid_argument("learning rate must be positive");
    }
    const bool joint = config.mode == TrainerMode::joint_frozen_lexical;
    if (joint && !config.frozen_lexical) {
        throw std::invalid_argument("joint_frozen_lexical mode needs a frozen lexical model");
    }

    TrainResult result{initial_params(config, corpus, tokenizer), {}, {}, {}};
    auto& params = result.params;
    double mu = config.initial_mu;

    // Token bags (and frozen lexical vectors) are built once per text.
    std::vector<TokenBag> query_bags;
    std::vector<std::vector<double>> lex_queries;
    std::vector<std::vector<std::size_t>> negatives(data.size());
    std::vector<Item> items;
    std::vector<char> used(corpus.size(), 0);
    auto locate = [&](const std::string& id) {
        const auto* p = corpus.find(id);
        if (p == nullptr) {
            throw std::invalid_argument("imitation data names passage '" + id + "' which is not in the corpus");
        }
        auto pos = corpus.index_of(id);
        used[pos] = 1;
        return pos;
    };
    for (std::size_t e = 0; e < data.size(); ++e) {
        auto tokens = tokenize(data[e].query.text, tokenizer);
        query_bags.push_back(make_bag(params, tokens));
        if (joint) {
            lex_queries.push_back(encode_query(*config.frozen_lexical, tokens));
        }
        for (const auto& id : data[e].positives) {
            items.push_back(Item{e, locate(id)});
        }
        for (const auto& id : data[e].negatives) {
            negatives[e].push_back(locate(id));
        }
    }
    if (items.empty()) {
        throw std::invalid_argument("imitation data holds no positives");
    }
    std::vector<TokenBag> passage_bags(corpus.size());
    std::vector<std::vector<double>> lex_passages(joint ? corpus.size() : 0);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (used[i] != 0) {
            auto tokens = tokenize(corpus[i].text, tokenizer);
            passage_bags[i] = make_bag(params, tokens);
            if (joint) {
                lex_passages[i] = encode_passage(*config.frozen_lexical, tokens);
            }
        }
    }

    if (!validation.empty()) {
        result.initial_surrogate_mrr = surrogate_mrr(params, validation, corpus, tokenizer);
    }

    detail::RowGradients gq(params.vocab_size(), params.dim());
    detail::RowGradients gp(params.vocab_size(), params.dim());
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(config.seed, 0x7ea1));

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            auto end = std::min(order.size(), start + config.batch_size);
            detail::BagBatch batch;
            for (std::size_t k = start; k < end; ++k) {
                const auto& item = items[order[k]];
                batch.queries.push_back(&query_bags[item.example]);
                batch.positives.push_back(&passage_bags[item.positive]);
                auto& negs = batch.negatives.emplace_back();
                for (auto n : negatives[item.example]) {
                    negs.push_back(&passage_bags[n]);
                }
                if (joint) {
                    batch.lex_queries.emplace_back(lex_queries[item.example]);
                    batch.lex_positives.emplace_back(lex_passages[item.positive]);
                    auto& lex_negs = batch.lex_negatives.emplace_back();
                    for (auto n : negatives[item.example]) {
                        lex_negs.emplace_back(lex_passages[n]);
                    }
                }
            }
            gq.clear();
            gp.clear();
            double mu_grad = 0.0;
            double loss = detail::contrastive_core(params, batch, mu, gq, gp, joint ? &mu_grad : nullptr);
            if (!std::isfinite(loss)) {
                throw std::runtime_error(
                    "training diverged in epoch " + std::to_string(epoch) + "; lower the learning rate");
            }
            loss_sum += loss;
            ++batches;
            sgd_step(params.query_embedding(), gq, config.learning_rate, params.precision());
            sgd_step(params.passage_embedding(), gp, config.learning_rate, params.precision());
            if (joint) {
                mu -= config.learning_rate * mu_grad;
            }
        }
        EpochStats stats{epoch, loss_sum / static_cast<double>(batches), {}};
        if (!validation.empty()) {
            stats.surrogate_mrr = surrogate_mrr(params, validation, corpus, tokenizer);
        }
        result.history.push_back(stats);
    }
    if (joint) {
        result.mu = mu;
    }
    return result;
}

}  // namespace spar
