#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "spar/corpus.hpp"
#include "spar/encoder.hpp"
#include "spar/types.hpp"

namespace spar {

/// Flat matrix of passage vectors, one row per id, searched exhaustively.
class DenseIndex {
  public:
    DenseIndex() = default;
    /// Zero rows. Throws std::invalid_argument on duplicate ids or dim == 0.
    DenseIndex(std::vector<std::string> ids, std::size_t dim, Precision precision = Precision::f32);

    [[nodiscard]] const std::vector<std::string>& ids() const { return ids_; }
    [[nodiscard]] std::size_t size() const { return ids_.size(); }
    [[nodiscard]] std::size_t dim() const { return rows_.cols(); }
    [[nodiscard]] Precision precision() const { return precision_; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const { return rows_.row(i); }
    /// Stores the vector rounded to the index precision.
    void set_row(std::size_t i, std::span<const double> values);

    void save(std::ostream& out) const;
    static DenseIndex load(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static DenseIndex load(const std::filesystem::path& path);

    friend bool operator==(const DenseIndex&, const DenseIndex&) = default;

  private:
    std::vector<std::string> ids_;
    Precision precision_ = Precision::f32;
    Matrix rows_;
};

/// Row i encodes passage i with the passage tower; ids follow corpus order.
DenseIndex build_dense_index(const Corpus& corpus, const EncoderParams& params, const TokenizerConfig& tokenizer = {});

/// Exact top-k by dot product (64-bit accumulation), ties by ascending id.
/// Throws std::invalid_argument on a dimension mismatch or k == 0.
RankedList retrieve_dense(
    const DenseIndex& index, std::span<const double> query_vector, std::size_t k, std::string query_id = {});

/// Encodes the query with the encoder's query tower, then retrieve_dense.
RankedList retrieve_with_encoder(
    const EncoderParams& encoder, const DenseIndex& index, const Query& query, std::size_t k,
    const TokenizerConfig& tokenizer = {});

}  // namespace spar
