#include "spar/fusion.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "spar/parallel.hpp"

namespace spar {

FusionMode parse_fusion_mode(std::string_view name)
{
    if (name == "concat") {
        return FusionMode::concat;
    }
    if (name == "sum") {
        return FusionMode::sum;
    }
    throw std::invalid_argument("unknown fusion mode '" + std::string(name) + "' (expected concat or sum)");
}

std::string_view to_string(FusionMode mode) { return mode == FusionMode::concat ? "concat" : "sum"; }

std::vector<double> fuse_query_vector(
    std::span<const double> q_base, std::span<const double> q_lex, const FusionConfig& cfg)
{
    if (!(cfg.mu >= 0.0) || !std::isfinite(cfg.mu)) {
        throw std::invalid_argument("fusion weight mu must be finite and non-negative");
    }
    if (cfg.mode == FusionMode::concat) {
        std::vector<double> out(q_base.begin(), q_base.end());
        out.reserve(q_base.size() + q_lex.size());
        for (double x : q_lex) {
            out.push_back(cfg.mu * x);
        }
        return out;
    }
    if (q_base.size() != q_lex.size()) {
        throw std::invalid_argument("weighted sum needs equal dimensions");
    }
    std::vector<double> out(q_base.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = q_base[i] + cfg.mu * q_lex[i];
    }
    return out;
}

std::vector<double> fuse_passage_vector(std::span<const double> p_base, std::span<const double> p_lex, FusionMode mode)
{
    if (mode == FusionMode::concat) {
        std::vector<double> out(p_base.begin(), p_base.end());
        out.insert(out.end(), p_lex.begin(), p_lex.end());
        return out;
    }
    if (p_base.size() != p_lex.size()) {
        throw std::invalid_argument("weighted sum needs equal dimensions");
    }
    std::vector<double> out(p_base.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = p_base[i] + p_lex[i];
    }
    return out;
}

DenseIndex build_spar_index(const DenseIndex& base, const DenseIndex& lex, const FusionConfig& cfg)
{
    if (base.ids() != lex.ids()) {
        throw std::invalid_argument("base and lexical indexes must hold the same ids in the same order");
    }
    if (cfg.mode == FusionMode::sum && base.dim() != lex.dim()) {
        throw std::invalid_argument("weighted sum needs equal dimensions");
    }
    auto dim = cfg.mode == FusionMode::concat ? base.dim() + lex.dim() : base.dim();
    auto precision =
        base.precision() == Precision::f32 && lex.precision() == Precision::f32 ? Precision::f32 : Precision::f64;
    DenseIndex fused(base.ids(), dim, precision);
    for (std::size_t i = 0; i < base.size(); ++i) {
        fused.set_row(i, fuse_passage_vector(base.row(i), lex.row(i), cfg.mode));
    }
    return fused;
}

std::vector<double> SparModel::query_vector(const Query& query, double mu) const
{
    auto tokens = tokenize(query.text, tokenizer);
    return fuse_query_vector(encode_query(*base, tokens), encode_query(*lexical, tokens), FusionConfig{mode, mu});
}

RankedList SparModel::retrieve(const Query& query, double mu, std::size_t k) const
{
    return retrieve_dense(*index, query_vector(query, mu), k, query.id);
}

std::array<double, 19> weight_candidates()
{
    std::array<double, 19> out{};
    for (int i = 1; i <= 10; ++i) {
        out[static_cast<std::size_t>(i - 1)] = i / 10.0;
    }
    for (int i = 9; i >= 1; --i) {
        out[static_cast<std::size_t>(19 - i)] = 1.0 / (i / 10.0);
    }
    return out;
}

WeightTuning tune_weight(const std::function<double(double)>& metric_at_mu)
{
    auto candidates = weight_candidates();
    std::vector<double> values(candidates.size());
    parallel_for(candidates.size(), [&](std::size_t i) { values[i] = metric_at_mu(candidates[i]); });

    WeightTuning result;
    std::size_t best = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        result.table.emplace_back(candidates[i], values[i]);
        if (values[i] > values[best]) {
            best = i;
        }
    }
    result.best_mu = candidates[best];
    return result;
}

TuneMetric parse_tune_metric(std::string_view name)
{
    if (name == "acc@100") {
        return TuneMetric::acc_at_100;
    }
    if (name == "mrr@10") {
        return TuneMetric::mrr_at_10;
    }
    throw std::invalid_argument("unknown tuning metric '" + std::string(name) + "' (expected acc@100 or mrr@10)");
}

std::string_view to_string(TuneMetric metric) { return metric == TuneMetric::acc_at_100 ? "acc@100" : "mrr@10"; }

WeightTuning tune_weight(
    std::span<const Query> dev_queries, const Judgments& judgments, const SparModel& model, TuneMetric metric)
{
    if (dev_queries.empty()) {
        throw std::invalid_argument("weight tuning needs a non-empty dev set");
    }
    const std::size_t k = metric == TuneMetric::acc_at_100 ? 100 : 10;
    return tune_weight([&](double mu) {
        Run run;
        for (const auto& q : dev_queries) {
            run[q.id] = model.retrieve(q, mu, k);
        }
        return metric == TuneMetric::acc_at_100 ? accuracy_at_k(run, judgments, k) : mrr_at_k(run, judgments, k);
    });
}

RankedList hybrid_rerank(
    const RankedList& base, const RankedList& lex, double mu, std::size_t k, const MissingScorePolicy& policy)
{
    if (!base.empty() && !lex.empty() && base.query_id != lex.query_id) {
        throw std::invalid_argument("hybrid_rerank lists belong to different queries");
    }
    if (policy.recomputes() && !policy.lex_score) {
        throw std::invalid_argument("recompute policy needs both score functions");
    }
    struct Parts {
        std::optional<double> base;
        std::optional<double> lex;
    };
    std::map<std::string, Parts> pool;
    for (const auto& e : base.entries) {
        pool[e.id].base = e.score;
    }
    for (const auto& e : lex.entries) {
        pool[e.id].lex = e.score;
    }

    std::vector<ScoredPassage> candidates;
    candidates.reserve(pool.size());
    for (const auto& [id, parts] : pool) {
        double b = parts.base ? *parts.base : (policy.recomputes() ? policy.base_score(id) : 0.0);
        double l = parts.lex ? *parts.lex : (policy.recomputes() ? policy.lex_score(id) : 0.0);
        candidates.push_back(ScoredPassage{id, b + mu * l});
    }
    auto qid = base.query_id.empty() ? lex.query_id : base.query_id;
    return select_top_k(std::move(qid), std::move(candidates), k);
}

}  // namespace spar
