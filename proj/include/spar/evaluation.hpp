#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "spar/corpus.hpp"
#include "spar/encoder.hpp"
#include "spar/imitation.hpp"
#include "spar/run_file.hpp"

namespace spar {

/// Relevance for a query set, either explicit positive passages (qrels) or
/// answer strings matched against passage text.
class Judgments {
  public:
    /// Queries with an empty positive set are not judged.
    static Judgments from_qrels(std::map<std::string, std::set<std::string>> positives);

    /// Every query carrying an answers list is judged; a passage is positive
    /// when its normalized text contains any normalized answer.
    static Judgments from_answers(std::span<const Query> queries, const Corpus& corpus);

    [[nodiscard]] bool answer_mode() const { return answer_mode_; }
    [[nodiscard]] bool empty() const { return query_ids_.empty(); }
    [[nodiscard]] std::size_t size() const { return query_ids_.size(); }
    /// Judged query ids, ascending.
    [[nodiscard]] const std::vector<std::string>& query_ids() const { return query_ids_; }

    [[nodiscard]] bool is_positive(const std::string& query_id, const std::string& passage_id) const;
    /// Qrels mode only; nullptr for unjudged queries.
    [[nodiscard]] const std::set<std::string>* positives(const std::string& query_id) const;

  private:
    bool answer_mode_ = false;
    std::vector<std::string> query_ids_;
    std::map<std::string, std::set<std::string>> qrels_;
    std::map<std::string, std::vector<std::string>> answers_;
    std::shared_ptr<const std::unordered_map<std::string, std::string>> normalized_text_;
};

/// Lowercase, collapse whitespace runs to one space, trim.
std::string normalize_for_match(std::string_view text);

/// "<query_id> <iteration> <passage_id> <relevance>"; relevance > 0 is positive.
Judgments read_qrels(std::istream& in);
Judgments load_qrels(const std::filesystem::path& path);
void write_qrels(std::ostream& out, const std::map<std::string, std::set<std::string>>& positives);

// Averages over judged queries; a judged query missing from the run scores 0.
// Throw std::invalid_argument for empty judgments or k == 0.

/// Fraction of queries with at least one positive in the top k.
double accuracy_at_k(const Run& run, const Judgments& judgments, std::size_t k);
/// Mean reciprocal rank of the first positive within the top k.
double mrr_at_k(const Run& run, const Judgments& judgments, std::size_t k);
/// Mean of |top-k ∩ positives| / |positives|. Qrels mode only.
double recall_at_k(const Run& run, const Judgments& judgments, std::size_t k);

/// MRR of the encoder on the mini-index of every pair's positive and
/// negative, each query's own positive being its only relevant passage.
/// Ties rank by ascending passage id.
double surrogate_mrr(
    const EncoderParams& encoder, std::span<const SurrogatePair> pairs, const Corpus& corpus,
    const TokenizerConfig& tokenizer = {});

/// Extrapolated rank-biased overlap at depth D = min(|a|, |b|):
/// (1-p) sum_{d<=D} p^(d-1) A_d + p^D A_D, with A_d the prefix overlap
/// fraction. Two empty lists give 1, one empty list gives 0. Throws
/// std::invalid_argument for a duplicate within a list or p outside (0, 1).
double rbo(std::span<const std::string> a, std::span<const std::string> b, double p = 0.9);

struct MetricValue {
    std::string metric;
    std::size_t k = 0;
    double value = 0.0;
};

/// Aligned plain-text table.
std::string format_metric_table(std::span<const MetricValue> values);
/// One "metric=<m>, k=<k>, value=<v>" line per value.
std::string format_metric_lines(std::span<const MetricValue> values);

struct NamedRetriever {
    std::string name;
    std::function<RankedList(const Query&, std::size_t)> retrieve;
};

struct StressRow {
    std::string retriever;
    std::size_t k = 0;
    double original = 0.0;
    double shuffled = 0.0;
    double delta = 0.0;  // original - shuffled
};

/// Acc@k of each retriever on the queries and on token-shuffled copies. Each
/// query is shuffled once, with seed mix_seed(seed, position), and the same
/// shuffled set is shared by all retrievers.
std::vector<StressRow> shuffle_stress_test(
    std::span<const NamedRetriever> retrievers, std::span<const Query> queries, const Judgments& judgments,
    std::span<const std::size_t> k_values, std::uint64_t seed);

/// An order-sensitive BM25 variant: the term first seen at query position i is
/// weighted by decay^i. Exists to show the stress test detects order effects.
NamedRetriever position_weighted_bm25(const InvertedIndex& index, Bm25Params params = {}, double decay = 0.25);

std::string format_stress_table(std::span<const StressRow> rows);
std::string format_stress_lines(std::span<const StressRow> rows);

}  // namespace spar
