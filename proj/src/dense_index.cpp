#include "spar/dense_index.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "spar/binary_io.hpp"
#include "spar/parallel.hpp"

namespace spar {

namespace {

constexpr std::string_view kIndexMagic = "SPARIDX1";

}  // namespace

DenseIndex::DenseIndex(std::vector<std::string> ids, std::size_t dim, Precision precision)
    : ids_(std::move(ids)), precision_(precision), rows_(ids_.size(), dim)
{
    if (dim == 0) {
        throw std::invalid_argument("index dimension must be positive");
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& id : ids_) {
        if (!seen.insert(id).second) {
            throw std::invalid_argument("duplicate index id '" + id + "'");
        }
    }
}

void DenseIndex::set_row(std::size_t i, std::span<const double> values)
{
    if (values.size() != dim()) {
        throw std::invalid_argument("row dimension mismatch");
    }
    auto dst = rows_.row(i);
    for (std::size_t t = 0; t < values.size(); ++t) {
        dst[t] = store(precision_, values[t]);
    }
}

void DenseIndex::save(std::ostream& out) const
{
    using namespace binary;
    write_magic(out, kIndexMagic);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ids_.size()));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(dim()));
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(precision_));
    for (const auto& id : ids_) {
        write_string(out, id);
    }
    for (double x : rows_.data()) {
        if (precision_ == Precision::f32) {
            write_pod<float>(out, static_cast<float>(x));
        } else {
            write_pod<double>(out, x);
        }
    }
}

DenseIndex DenseIndex::load(std::istream& in)
{
    using namespace binary;
    expect_magic(in, kIndexMagic);
    auto count = read_pod<std::uint32_t>(in);
    auto dim = read_pod<std::uint32_t>(in);
    auto flag = read_pod<std::uint8_t>(in);
    if (flag > 1) {
        throw FormatError("unknown precision flag " + std::to_string(flag));
    }
    std::vector<std::string> ids;
    ids.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        ids.push_back(read_string(in));
    }
    DenseIndex index;
    try {
        index = DenseIndex(std::move(ids), dim, static_cast<Precision>(flag));
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
    for (auto& x : index.rows_.data()) {
        x = flag == 0 ? static_cast<double>(read_pod<float>(in)) : read_pod<double>(in);
    }
    return index;
}

void DenseIndex::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    save(out);
}

DenseIndex DenseIndex::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return load(in);
}

DenseIndex build_dense_index(const Corpus& corpus, const EncoderParams& params, const TokenizerConfig& tokenizer)
{
    if (corpus.empty()) {
        throw std::invalid_argument("cannot build a dense index over an empty corpus");
    }
    std::vector<std::string> ids;
    ids.reserve(corpus.size());
    for (const auto& p : corpus) {
        ids.push_back(p.id);
    }
    DenseIndex index(std::move(ids), params.dim(), params.precision());
    parallel_for(corpus.size(), [&](std::size_t i) {
        index.set_row(i, encode_passage(params, tokenize(corpus[i].text, tokenizer)));
    });
    return index;
}

RankedList retrieve_dense(const DenseIndex& index, std::span<const double> query_vector, std::size_t k, std::string query_id)
{
    if (query_vector.size() != index.dim()) {
        throw std::invalid_argument(
            "query dimension " + std::to_string(query_vector.size()) + " does not match index dimension " +
            std::to_string(index.dim()));
    }
    if (k == 0) {
        throw std::invalid_argument("k must be at least 1");
    }
    std::vector<ScoredPassage> scored;
    scored.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        scored.push_back(ScoredPassage{index.ids()[i], dot(query_vector, index.row(i))});
    }
    return select_top_k(std::move(query_id), std::move(scored), k);
}

RankedList retrieve_with_encoder(
    const EncoderParams& encoder, const DenseIndex& index, const Query& query, std::size_t k,
    const TokenizerConfig& tokenizer)
{
    auto q = encode_query(encoder, tokenize(query.text, tokenizer));
    return retrieve_dense(index, q, k, query.id);
}

}  // namespace spar
