#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spar/corpus.hpp"
#include "spar/types.hpp"

namespace spar {

struct TokenizerConfig {
    bool lowercase = true;
    std::set<std::string> stopwords;

    friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;
};

/// Maximal runs of alphanumeric code points in input order, optionally
/// lowercased, with stopwords removed (after lowercasing). Input is UTF-8;
/// non-ASCII letters count as alphanumeric, general punctuation and symbol
/// blocks do not, and malformed bytes act as separators.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg = {});

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
};

/// Throws std::invalid_argument unless k1 >= 0 and b in [0, 1].
void validate(const Bm25Params& params);

/// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
double bm25_idf(std::size_t doc_count, std::size_t doc_freq);

/// Contribution of one query term: idf * tf (k1 + 1) / (tf + k1 (1 - b + b dl / avgdl)).
double bm25_term_score(
    double idf, std::uint32_t tf, std::uint32_t doc_length, double avg_doc_length, const Bm25Params& params);

struct Posting {
    std::uint32_t doc;  // ordinal, see InvertedIndex::doc_id
    std::uint32_t tf;

    friend bool operator==(const Posting&, const Posting&) = default;
};

/// Term to postings map with the collection statistics BM25 needs. Document
/// ordinals follow ascending passage id, so postings sorted by ordinal are
/// sorted by passage id and the index does not depend on corpus order.
class InvertedIndex {
  public:
    [[nodiscard]] std::size_t doc_count() const { return doc_ids_.size(); }
    [[nodiscard]] double avg_doc_length() const { return avg_doc_length_; }
    [[nodiscard]] const std::string& doc_id(std::uint32_t ordinal) const { return doc_ids_[ordinal]; }
    [[nodiscard]] std::uint32_t doc_length(std::uint32_t ordinal) const { return doc_lengths_[ordinal]; }
    [[nodiscard]] std::optional<std::uint32_t> ordinal_of(std::string_view id) const;

    [[nodiscard]] std::span<const Posting> postings(std::string_view term) const;
    [[nodiscard]] std::size_t doc_freq(std::string_view term) const { return postings(term).size(); }
    [[nodiscard]] std::size_t term_count() const { return postings_.size(); }
    /// All indexed terms, sorted.
    [[nodiscard]] std::vector<std::string> terms() const;

    [[nodiscard]] const TokenizerConfig& tokenizer() const { return tokenizer_; }

    void save(std::ostream& out) const;
    static InvertedIndex load(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

    friend InvertedIndex build_inverted_index(const Corpus& corpus, const TokenizerConfig& cfg);

  private:
    void rebuild_lookup();

    TokenizerConfig tokenizer_;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::unordered_map<std::string, std::uint32_t> ordinal_by_id_;
};

/// Throws std::invalid_argument for an empty corpus or one without any tokens.
InvertedIndex build_inverted_index(const Corpus& corpus, const TokenizerConfig& cfg = {});

/// BM25 over the distinct query terms; repeated query tokens count once.
/// Throws std::out_of_range for a passage id missing from the index.
double bm25_score(
    const InvertedIndex& index, std::span<const std::string> query_tokens, std::string_view passage_id,
    const Bm25Params& params = {});

/// Term-at-a-time top-k. Passages scoring zero are never returned.
RankedList retrieve_sparse(const InvertedIndex& index, const Query& query, std::size_t k, const Bm25Params& params = {});

/// retrieve_sparse over a query set; output follows input order.
std::vector<RankedList> retrieve_sparse_batch(
    const InvertedIndex& index, std::span<const Query> queries, std::size_t k, const Bm25Params& params = {});

}  // namespace spar
