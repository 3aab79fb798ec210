#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spar/encoder.hpp"

// Loss core shared by the public loss functions and the trainer. Works on
// pre-built token bags so the trainer never re-tokenizes.
namespace spar::detail {

struct BagBatch {
    std::vector<const TokenBag*> queries;
    std::vector<const TokenBag*> positives;
    std::vector<std::vector<const TokenBag*>> negatives;

    // Frozen lexical vectors, aligned with the bags above; empty unless joint.
    std::vector<std::span<const double>> lex_queries;
    std::vector<std::span<const double>> lex_positives;
    std::vector<std::vector<std::span<const double>>> lex_negatives;

    [[nodiscard]] std::size_t size() const { return queries.size(); }
    [[nodiscard]] bool joint() const { return !lex_queries.empty(); }
};

/// Sparse accumulator of per-row gradients for one embedding table.
class RowGradients {
  public:
    RowGradients(std::size_t vocab_size, std::size_t dim);

    /// Distributes d(loss)/d(pooled vector) onto the bag's rows.
    void add(const TokenBag& bag, std::span<const double> vector_grad);

    [[nodiscard]] const std::vector<std::uint32_t>& touched_rows() const { return rows_; }
    [[nodiscard]] std::span<const double> gradient(std::size_t slot) const { return {values_.data() + slot * dim_, dim_}; }

    void clear();
    void scatter_into(Matrix& dense) const;

  private:
    std::size_t dim_;
    std::vector<std::int64_t> slot_of_row_;
    std::vector<std::uint32_t> rows_;
    std::vector<double> values_;
};

/// Returns the batch loss and accumulates gradients for both tables (and mu
/// in joint mode, when weight_grad is non-null).
double contrastive_core(
    const EncoderParams& params, const BagBatch& batch, double mu, RowGradients& query_grad,
    RowGradients& passage_grad, double* weight_grad);

}  // namespace spar::detail
