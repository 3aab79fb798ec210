#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spar/types.hpp"

namespace spar {

/// An ordered passage collection with unique ids and non-blank texts.
class Corpus {
  public:
    Corpus() = default;

    /// Throws FormatError on a duplicate or empty id, or a blank text.
    explicit Corpus(std::vector<Passage> passages);

    [[nodiscard]] std::size_t size() const { return passages_.size(); }
    [[nodiscard]] bool empty() const { return passages_.empty(); }
    [[nodiscard]] const Passage& operator[](std::size_t i) const { return passages_[i]; }
    [[nodiscard]] const std::vector<Passage>& passages() const { return passages_; }
    [[nodiscard]] auto begin() const { return passages_.begin(); }
    [[nodiscard]] auto end() const { return passages_.end(); }

    [[nodiscard]] const Passage* find(std::string_view id) const;
    /// Position of the passage in corpus order; throws std::out_of_range for unknown ids.
    [[nodiscard]] std::size_t index_of(std::string_view id) const;

  private:
    std::vector<Passage> passages_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

// Corpus and query files hold one JSON object per line. Errors name the
// 1-based line number.
Corpus read_corpus(std::istream& in);
void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

QuerySet read_queries(std::istream& in);
void write_queries(std::ostream& out, const QuerySet& queries);
QuerySet load_queries(const std::filesystem::path& path);
void save_queries(const std::filesystem::path& path, const QuerySet& queries);

/// Splits after '.', '!' or '?' when followed by whitespace; the terminator
/// stays with the left sentence and the separating whitespace is dropped.
std::vector<std::string> split_sentences(std::string_view text);

struct SamplingConfig {
    double decay_tau = 1.0;
    std::size_t min_per_passage = 1;
    std::uint64_t seed = 0;
};

/// Probability that a non-mandatory sentence of the passage at `position`
/// within its document is emitted.
double extra_sentence_probability(std::size_t position, double decay_tau);

/// Sentence queries for imitation training. Passages sharing a title form a
/// document; every passage yields min(min_per_passage, #sentences) sentences
/// and each remaining sentence is kept with extra_sentence_probability of the
/// passage's position in its document. Query ids are "<passage id>#<sentence
/// index>" and source_id records the passage.
///
/// Each passage draws from its own stream seeded by (seed, corpus position) and
/// consumes the same number of draws for every tau, so the output for a larger
/// tau is a superset of the output for a smaller one.
QuerySet sample_training_queries(const Corpus& corpus, const SamplingConfig& cfg);

/// Uniform random permutation of the whitespace-separated tokens, re-joined
/// with single spaces. Queries with fewer than two tokens come back unchanged.
Query shuffle_query_tokens(const Query& query, std::uint64_t seed);

}  // namespace spar
