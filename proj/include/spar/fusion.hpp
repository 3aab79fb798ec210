#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spar/dense_index.hpp"
#include "spar/encoder.hpp"
#include "spar/evaluation.hpp"

namespace spar {

enum class FusionMode { concat, sum };

FusionMode parse_fusion_mode(std::string_view name);
std::string_view to_string(FusionMode mode);

struct FusionConfig {
    FusionMode mode = FusionMode::concat;
    double mu = 1.0;
};

/// The weight goes on the query side only: concat gives [q ‖ mu q_lex], sum
/// gives q + mu q_lex. Throws std::invalid_argument for a negative or
/// non-finite mu, or mismatched dimensions in sum mode.
std::vector<double> fuse_query_vector(
    std::span<const double> q_base, std::span<const double> q_lex, const FusionConfig& cfg);

/// Unweighted: concat gives [p ‖ p_lex], sum gives p + p_lex.
std::vector<double> fuse_passage_vector(std::span<const double> p_base, std::span<const double> p_lex, FusionMode mode);

/// Row-wise fuse_passage_vector of two indexes over the same ids in the same
/// order. Only cfg.mode is used; the rows never depend on mu, so retuning the
/// weight reuses the index. The result is f64 unless both inputs are f32.
DenseIndex build_spar_index(const DenseIndex& base, const DenseIndex& lex, const FusionConfig& cfg);

/// A base dense retriever and a lexical model sharing one fused index.
struct SparModel {
    const EncoderParams* base = nullptr;
    const EncoderParams* lexical = nullptr;
    const DenseIndex* index = nullptr;
    FusionMode mode = FusionMode::concat;
    TokenizerConfig tokenizer;

    [[nodiscard]] std::vector<double> query_vector(const Query& query, double mu) const;
    [[nodiscard]] RankedList retrieve(const Query& query, double mu, std::size_t k) const;
};

/// 0.1, 0.2, ..., 1.0 followed by their reciprocals 1/0.9, ..., 1/0.1; ascending.
std::array<double, 19> weight_candidates();

struct WeightTuning {
    double best_mu = 0.0;
    std::vector<std::pair<double, double>> table;  // (mu, metric) in candidate order
};

/// Evaluates the metric at every candidate (in parallel) and returns the
/// argmax; ties go to the smaller weight.
WeightTuning tune_weight(const std::function<double(double)>& metric_at_mu);

enum class TuneMetric { acc_at_100, mrr_at_10 };

TuneMetric parse_tune_metric(std::string_view name);
std::string_view to_string(TuneMetric metric);

/// Retrieves the dev queries with the SPAR model at each candidate weight.
/// Throws std::invalid_argument for an empty dev set.
WeightTuning tune_weight(
    std::span<const Query> dev_queries, const Judgments& judgments, const SparModel& model, TuneMetric metric);

/// How hybrid_rerank fills a component score for a candidate that only one
/// list returned: with zero, or by exact recomputation.
struct MissingScorePolicy {
    std::function<double(const std::string&)> base_score;
    std::function<double(const std::string&)> lex_score;

    static MissingScorePolicy zero() { return {}; }
    static MissingScorePolicy recompute(
        std::function<double(const std::string&)> base, std::function<double(const std::string&)> lex)
    {
        return {std::move(base), std::move(lex)};
    }
    [[nodiscard]] bool recomputes() const { return static_cast<bool>(base_score); }
};

/// Reranks the union of two candidate lists for one query by base + mu * lex.
/// Throws std::invalid_argument when both lists are non-empty but name
/// different queries.
RankedList hybrid_rerank(
    const RankedList& base, const RankedList& lex, double mu, std::size_t k,
    const MissingScorePolicy& policy = MissingScorePolicy::zero());

}  // namespace spar
