#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spar {

/// Input data failed validation (malformed line, duplicate id, bad magic).
/// The CLI maps this to exit code 2.
class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument combination. The CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Passage {
    std::string id;
    std::optional<std::string> title;
    std::string text;
};

struct Query {
    std::string id;
    std::string text;
    std::optional<std::vector<std::string>> answers;
    // Set for queries synthesized from corpus sentences.
    std::optional<std::string> source_id;
};

using QuerySet = std::vector<Query>;

struct ScoredPassage {
    std::string id;
    double score = 0.0;

    friend bool operator==(const ScoredPassage&, const ScoredPassage&) = default;
};

/// Total order used by every retriever: score descending, then id ascending.
inline bool ranks_before(const ScoredPassage& a, const ScoredPassage& b)
{
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.id < b.id;
}

struct RankedList {
    std::string query_id;
    std::vector<ScoredPassage> entries;

    [[nodiscard]] std::size_t size() const { return entries.size(); }
    [[nodiscard]] bool empty() const { return entries.empty(); }
    [[nodiscard]] std::vector<std::string> ids() const;

    friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// Keeps the k best candidates in ranks_before order. Candidates must have unique ids.
RankedList select_top_k(std::string query_id, std::vector<ScoredPassage> candidates, std::size_t k);

}  // namespace spar
