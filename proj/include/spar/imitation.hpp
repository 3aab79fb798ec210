#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "spar/sparse.hpp"
#include "spar/types.hpp"

namespace spar {

/// Any retriever that can label queries: (query, depth) -> ranked list.
using Teacher = std::function<RankedList(const Query&, std::size_t)>;

/// BM25 over the given index. The index must outlive the teacher.
Teacher bm25_teacher(const InvertedIndex& index, Bm25Params params = {});

/// A query with the teacher's top passages as positives (teacher rank order)
/// and passages from the bottom of its list as negatives. The two never overlap.
struct ImitationExample {
    Query query;
    std::vector<std::string> positives;
    std::vector<std::string> negatives;

    friend bool operator==(const ImitationExample& a, const ImitationExample& b)
    {
        return a.query.id == b.query.id && a.query.text == b.query.text && a.positives == b.positives &&
               a.negatives == b.negatives;
    }
};

struct ImitationConfig {
    std::size_t depth = 100;    // K
    std::size_t positives = 10; // n_p
    std::size_t negatives = 5;  // n_n
};

struct ImitationData {
    std::vector<ImitationExample> examples;
    std::size_t dropped = 0;
};

/// Labels every query with the teacher's top-K list: ranks 1..n_p are
/// positives and ranks K-n_n+1..K are negatives. A shorter list supplies
/// negatives from its actual bottom, starting no earlier than rank n_p+1; a
/// list with fewer than n_p entries drops the query. Output keeps input order.
/// Throws std::invalid_argument if n_p == 0 or n_p + n_n > K.
ImitationData generate_imitation_data(const Teacher& teacher, std::span<const Query> queries, const ImitationConfig& cfg);

struct SurrogatePair {
    Query query;
    std::string positive;
    std::string negative;
};

using SurrogatePairs = std::vector<SurrogatePair>;

struct ValidationData {
    SurrogatePairs pairs;
    std::size_t dropped = 0;
};

/// One pair per dev query: the teacher's rank-1 passage and its rank-K
/// passage (or the last one returned). Queries with fewer than two results
/// are dropped. Throws std::invalid_argument if depth < 2.
ValidationData generate_validation_pairs(const Teacher& teacher, std::span<const Query> dev_queries, std::size_t depth = 100);

/// Distinct passages referenced by the pairs, in first-appearance order
/// (positive before negative). Throws std::invalid_argument for no pairs.
std::vector<std::string> build_surrogate_index(std::span<const SurrogatePair> pairs);

// One JSON object per line:
//   imitation data:   query_id, query_text, positives, negatives
//   surrogate pairs:  query_id, query_text, positive, negative
void write_imitation_data(std::ostream& out, std::span<const ImitationExample> examples);
std::vector<ImitationExample> read_imitation_data(std::istream& in);
void save_imitation_data(const std::filesystem::path& path, std::span<const ImitationExample> examples);
std::vector<ImitationExample> load_imitation_data(const std::filesystem::path& path);

void write_surrogate_pairs(std::ostream& out, std::span<const SurrogatePair> pairs);
SurrogatePairs read_surrogate_pairs(std::istream& in);
void save_surrogate_pairs(const std::filesystem::path& path, std::span<const SurrogatePair> pairs);
SurrogatePairs load_surrogate_pairs(const std::filesystem::path& path);

}  // namespace spar
