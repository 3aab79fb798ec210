#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spar/corpus.hpp"
#include "spar/sparse.hpp"

namespace spar {

/// Storage precision of parameters and index rows. Arithmetic is always
/// 64-bit; in f32 mode stored values are rounded to float after every write.
enum class Precision : std::uint8_t { f32 = 0, f64 = 1 };

inline double store(Precision p, double x)
{
    return p == Precision::f32 ? static_cast<double>(static_cast<float>(x)) : x;
}

/// Dense row-major matrix.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    [[nodiscard]] std::vector<double>& data() { return data_; }
    [[nodiscard]] const std::vector<double>& data() const { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);

/// Bi-encoder parameters: a shared vocabulary with separate query and passage
/// embedding tables of shape V x d. Encoding is the mean of the rows of the
/// in-vocabulary tokens.
class EncoderParams {
  public:
    EncoderParams() = default;
    /// Zero-initialized tables. Throws std::invalid_argument on a duplicate
    /// token or d == 0.
    EncoderParams(std::vector<std::string> vocab, std::size_t dim, Precision precision = Precision::f32);

    /// Entries drawn uniformly from [-scale, scale).
    static EncoderParams random(
        std::vector<std::string> vocab, std::size_t dim, std::uint64_t seed, Precision precision = Precision::f32,
        double scale = 0.1);

    [[nodiscard]] const std::vector<std::string>& vocab() const { return vocab_; }
    [[nodiscard]] std::size_t vocab_size() const { return vocab_.size(); }
    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] Precision precision() const { return precision_; }
    [[nodiscard]] std::optional<std::uint32_t> row_of(std::string_view token) const;

    [[nodiscard]] Matrix& query_embedding() { return query_; }
    [[nodiscard]] const Matrix& query_embedding() const { return query_; }
    [[nodiscard]] Matrix& passage_embedding() { return passage_; }
    [[nodiscard]] const Matrix& passage_embedding() const { return passage_; }

    /// Re-rounds every stored value to the storage precision.
    void round_to_precision();
    /// Same values, different storage precision (rounding when narrowing).
    [[nodiscard]] EncoderParams with_precision(Precision precision) const;

    void save(std::ostream& out) const;
    static EncoderParams load(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static EncoderParams load(const std::filesystem::path& path);

    friend bool operator==(const EncoderParams& a, const EncoderParams& b)
    {
        return a.vocab_ == b.vocab_ && a.dim_ == b.dim_ && a.precision_ == b.precision_ && a.query_ == b.query_ &&
               a.passage_ == b.passage_;
    }

  private:
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, std::uint32_t> row_by_token_;
    std::size_t dim_ = 0;
    Precision precision_ = Precision::f32;
    Matrix query_;
    Matrix passage_;
};

/// Sorted distinct tokens of the corpus under the given tokenizer.
std::vector<std::string> build_vocab(const Corpus& corpus, const TokenizerConfig& cfg = {});

/// Token multiset restricted to the vocabulary, keyed by ascending row.
/// Pooling walks rows in this order, so encodings are bitwise invariant to
/// token order.
struct TokenBag {
    std::vector<std::uint32_t> rows;
    std::vector<std::uint32_t> counts;
    std::uint32_t total = 0;
};

TokenBag make_bag(const EncoderParams& params, std::span<const std::string> tokens);

/// Mean of the bag's rows, weighted by multiplicity; zeros for an empty bag.
std::vector<double> pool(const Matrix& table, const TokenBag& bag);

std::vector<double> encode_query(const EncoderParams& params, std::span<const std::string> tokens);
std::vector<double> encode_passage(const EncoderParams& params, std::span<const std::string> tokens);

struct TrainingItem {
    std::vector<std::string> query;
    std::vector<std::string> positive;
    std::vector<std::vector<std::string>> negatives;
};

/// Non-empty; each item has exactly one positive.
using TrainingBatch = std::vector<TrainingItem>;

struct Gradients {
    Matrix query;
    Matrix passage;
};

struct LossResult {
    double loss = 0.0;
    Gradients gradients;
};

/// In-batch softmax cross-entropy. Item i scores its query against every
/// item's positive plus its own hard negatives (B + n_i candidates) by dot
/// product; the loss is the batch mean of -log softmax at its own positive.
/// Gradients are exact.
LossResult contrastive_loss(const EncoderParams& params, const TrainingBatch& batch);

struct JointLossResult {
    double loss = 0.0;
    Gradients gradients;
    double weight_gradient = 0.0;
};

/// Loss over concatenated vectors [Q, mu Q_lex] . [P, P_lex], i.e. scores
/// q.p + mu q_lex.p_lex, with the lexical model frozen. Returns gradients
/// for the trainable model and for mu.
JointLossResult joint_contrastive_loss(
    const EncoderParams& params, const EncoderParams& lexical, double mu, const TrainingBatch& batch);

struct GradCheckOptions {
    double epsilon = 1e-5;
    /// 0 checks every coordinate; otherwise a seeded random subsample of this
    /// many coordinates (at least 200).
    std::size_t max_coordinates = 0;
    std::uint64_t seed = 0;
};

/// Maximum over checked coordinates of |analytic - numeric| / max(|analytic|,
/// |numeric|, 1e-8), with central differences.
double grad_check(const EncoderParams& params, const TrainingBatch& batch, const GradCheckOptions& options = {});

}  // namespace spar
