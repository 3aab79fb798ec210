#include "spar/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "spar/binary_io.hpp"
#include "spar/parallel.hpp"

namespace spar {

namespace {

constexpr std::string_view kIndexMagic = "SPARINV1";

// Decodes one code point starting at text[i]; returns the byte length, or 0
// for a malformed sequence.
std::size_t decode_utf8(std::string_view text, std::size_t i, char32_t& cp)
{
    auto byte = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
    unsigned char lead = byte(i);
    std::size_t len = 0;
    if (lead < 0x80) {
        cp = lead;
        return 1;
    }
    if ((lead & 0xE0) == 0xC0) {
        len = 2;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4;
        cp = lead & 0x07;
    } else {
        return 0;
    }
    if (i + len > text.size()) {
        return 0;
    }
    for (std::size_t k = 1; k < len; ++k) {
        if ((byte(i + k) & 0xC0) != 0x80) {
            return 0;
        }
        cp = (cp << 6) | (byte(i + k) & 0x3F);
    }
    return len;
}

void encode_utf8(char32_t cp, std::string& out)
{
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

bool is_alnum(char32_t cp)
{
    if (cp < 0x80) {
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    }
    // Latin-1 punctuation and symbols, except the few letter-like ones.
    if (cp <= 0xBF) {
        return cp == 0xAA || cp == 0xB5 || cp == 0xBA || cp == 0xB2 || cp == 0xB3 || cp == 0xB9;
    }
    if (cp == 0xD7 || cp == 0xF7) {
        return false;
    }
    if (cp >= 0x2000 && cp <= 0x2BFF) {
        return false;  // general punctuation through miscellaneous symbols and arrows
    }
    if ((cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFE30 && cp <= 0xFE4F)) {
        return false;
    }
    if ((cp >= 0xFF00 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) ||
        (cp >= 0xFF5B && cp <= 0xFF65)) {
        return false;  // fullwidth punctuation
    }
    if (cp >= 0x1F000 && cp <= 0x1FAFF) {
        return false;  // emoji and pictographs
    }
    return true;
}

char32_t to_lower(char32_t cp)
{
    if (cp >= 'A' && cp <= 'Z') {
        return cp + 32;
    }
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) {
        return cp + 32;
    }
    if (cp >= 0x100 && cp <= 0x17F && cp != 0x130 && cp != 0x131 && cp != 0x138 && cp != 0x149 && cp != 0x178 && cp != 0x17F) {
        // Latin Extended-A mostly alternates upper/lower; the parity flips at U+0139.
        bool upper_even = cp < 0x139 || (cp >= 0x14A && cp < 0x179);
        bool is_upper = upper_even ? (cp % 2 == 0) : (cp % 2 == 1);
        return is_upper ? cp + 1 : cp;
    }
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) {
        return cp + 32;
    }
    if (cp >= 0x410 && cp <= 0x42F) {
        return cp + 32;
    }
    if (cp >= 0x400 && cp <= 0x40F) {
        return cp + 80;
    }
    return cp;
}

std::ifstream open_binary_input(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return in;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg)
{
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            if (!cfg.stopwords.contains(current)) {
                tokens.push_back(current);
            }
            current.clear();
        }
    };
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = 0;
        auto len = decode_utf8(text, i, cp);
        if (len == 0) {
            flush();
            ++i;
            continue;
        }
        if (is_alnum(cp)) {
            if (cfg.lowercase) {
                encode_utf8(to_lower(cp), current);
            } else {
                current.append(text.substr(i, len));
            }
        } else {
            flush();
        }
        i += len;
    }
    flush();
    return tokens;
}

void validate(const Bm25Params& params)
{
    if (!(params.k1 >= 0.0)) {
        throw std::invalid_argument("bm25 k1 must be non-negative");
    }
    if (!(params.b >= 0.0 && params.b <= 1.0)) {
        throw std::invalid_argument("bm25 b must lie in [0, 1]");
    }
}

double bm25_idf(std::size_t doc_count, std::size_t doc_freq)
{
    auto n = static_cast<double>(doc_count);
    auto df = static_cast<double>(doc_freq);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double bm25_term_score(
    double idf, std::uint32_t tf, std::uint32_t doc_length, double avg_doc_length, const Bm25Params& params)
{
    auto f = static_cast<double>(tf);
    double norm = 1.0 - params.b + params.b * static_cast<double>(doc_length) / avg_doc_length;
    return idf * f * (params.k1 + 1.0) / (f + params.k1 * norm);
}

std::optional<std::uint32_t> InvertedIndex::ordinal_of(std::string_view id) const
{
    auto it = ordinal_by_id_.find(std::string(id));
    if (it == ordinal_by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const
{
    auto it = postings_.find(std::string(term));
    if (it == postings_.end()) {
        return {};
    }
    return it->second;
}

std::vector<std::string> InvertedIndex::terms() const
{
    std::vector<std::string> out;
    out.reserve(postings_.size());
    for (const auto& [term, list] : postings_) {
        out.push_back(term);
    }
    std::sort(out.begin(), out.end());
    return out;
}

void InvertedIndex::rebuild_lookup()
{
    ordinal_by_id_.clear();
    ordinal_by_id_.reserve(doc_ids_.size());
    for (std::uint32_t i = 0; i < doc_ids_.size(); ++i) {
        ordinal_by_id_.emplace(doc_ids_[i], i);
    }
}

InvertedIndex build_inverted_index(const Corpus& corpus, const TokenizerConfig& cfg)
{
    if (corpus.empty()) {
        throw std::invalid_argument("cannot index an empty corpus");
    }

    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return corpus[a].id < corpus[b].id; });

    InvertedIndex index;
    index.tokenizer_ = cfg;
    index.doc_ids_.reserve(corpus.size());
    index.doc_lengths_.reserve(corpus.size());
    std::uint64_t total_length = 0;
    for (std::uint32_t ordinal = 0; ordinal < order.size(); ++ordinal) {
        const auto& passage = corpus[order[ordinal]];
        auto tokens = tokenize(passage.text, cfg);
        std::map<std::string, std::uint32_t> tf;
        for (auto& t : tokens) {
            ++tf[std::move(t)];
        }
        for (const auto& [term, count] : tf) {
            index.postings_[term].push_back(Posting{ordinal, count});
        }
        index.doc_ids_.push_back(passage.id);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total_length += tokens.size();
    }
    if (total_length == 0) {
        throw std::invalid_argument("corpus contains no indexable tokens");
    }
    index.avg_doc_length_ = static_cast<double>(total_length) / static_cast<double>(corpus.size());
    index.rebuild_lookup();
    return index;
}

void InvertedIndex::save(std::ostream& out) const
{
    using namespace binary;
    write_magic(out, kIndexMagic);
    write_pod<std::uint8_t>(out, tokenizer_.lowercase ? 1 : 0);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tokenizer_.stopwords.size()));
    for (const auto& w : tokenizer_.stopwords) {
        write_string(out, w);
    }
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(doc_ids_.size()));
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        write_string(out, doc_ids_[i]);
        write_pod<std::uint32_t>(out, doc_lengths_[i]);
    }
    auto sorted_terms = terms();
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(sorted_terms.size()));
    for (const auto& term : sorted_terms) {
        const auto& list = postings_.at(term);
        write_string(out, term);
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(list.size()));
        for (const auto& p : list) {
            write_pod<std::uint32_t>(out, p.doc);
            write_pod<std::uint32_t>(out, p.tf);
        }
    }
}

InvertedIndex InvertedIndex::load(std::istream& in)
{
    using namespace binary;
    expect_magic(in, kIndexMagic);
    InvertedIndex index;
    index.tokenizer_.lowercase = read_pod<std::uint8_t>(in) != 0;
    auto stop_count = read_pod<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < stop_count; ++i) {
        index.tokenizer_.stopwords.insert(read_string(in));
    }
    auto n = read_pod<std::uint32_t>(in);
    if (n == 0) {
        throw FormatError("sparse index has no documents");
    }
    std::uint64_t total = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        index.doc_ids_.push_back(read_string(in));
        index.doc_lengths_.push_back(read_pod<std::uint32_t>(in));
        total += index.doc_lengths_.back();
        if (i > 0 && !(index.doc_ids_[i - 1] < index.doc_ids_[i])) {
            throw FormatError("sparse index document ids are not strictly ascending");
        }
    }
    index.avg_doc_length_ = static_cast<double>(total) / n;
    auto term_count = read_pod<std::uint32_t>(in);
    for (std::uint32_t t = 0; t < term_count; ++t) {
        auto term = read_string(in);
        auto len = read_pod<std::uint32_t>(in);
        std::vector<Posting> list;
        list.reserve(len);
        for (std::uint32_t i = 0; i < len; ++i) {
            Posting p{read_pod<std::uint32_t>(in), read_pod<std::uint32_t>(in)};
            if (p.doc >= n || p.tf == 0 || (!list.empty() && list.back().doc >= p.doc)) {
                throw FormatError("corrupt postings for term '" + term + "'");
            }
            list.push_back(p);
        }
        index.postings_.emplace(std::move(term), std::move(list));
    }
    index.rebuild_lookup();
    return index;
}

void InvertedIndex::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    save(out);
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path)
{
    auto in = open_binary_input(path);
    return load(in);
}

namespace {

std::vector<std::string> distinct_sorted(std::span<const std::string> tokens)
{
    std::vector<std::string> terms(tokens.begin(), tokens.end());
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    return terms;
}

}  // namespace

double bm25_score(
    const InvertedIndex& index, std::span<const std::string> query_tokens, std::string_view passage_id,
    const Bm25Params& params)
{
    auto ordinal = index.ordinal_of(passage_id);
    if (!ordinal) {
        throw std::out_of_range("passage '" + std::string(passage_id) + "' is not in the index");
    }
    double score = 0.0;
    for (const auto& term : distinct_sorted(query_tokens)) {
        auto list = index.postings(term);
        auto it = std::lower_bound(
            list.begin(), list.end(), *ordinal, [](const Posting& p, std::uint32_t doc) { return p.doc < doc; });
        if (it == list.end() || it->doc != *ordinal) {
            continue;
        }
        auto idf = bm25_idf(index.doc_count(), list.size());
        score += bm25_term_score(idf, it->tf, index.doc_length(*ordinal), index.avg_doc_length(), params);
    }
    return score;
}

RankedList retrieve_sparse(const InvertedIndex& index, const Query& query, std::size_t k, const Bm25Params& params)
{
    if (k == 0) {
        throw std::invalid_argument("k must be at least 1");
    }
    auto tokens = tokenize(query.text, index.tokenizer());
    std::vector<double> accumulators(index.doc_count(), 0.0);
    std::vector<std::uint32_t> touched;
    for (const auto& term : distinct_sorted(tokens)) {
        auto list = index.postings(term);
        if (list.empty()) {
            continue;
        }
        auto idf = bm25_idf(index.doc_count(), list.size());
        for (const auto& p : list) {
            if (accumulators[p.doc] == 0.0) {
                touched.push_back(p.doc);
            }
            accumulators[p.doc] +=
                bm25_term_score(idf, p.tf, index.doc_length(p.doc), index.avg_doc_length(), params);
        }
    }

    std::vector<ScoredPassage> candidates;
    candidates.reserve(touched.size());
    for (auto doc : touched) {
        if (accumulators[doc] > 0.0) {
            candidates.push_back(ScoredPassage{index.doc_id(doc), accumulators[doc]});
        }
    }
    return select_top_k(query.id, std::move(candidates), k);
}

std::vector<RankedList> retrieve_sparse_batch(
    const InvertedIndex& index, std::span<const Query> queries, std::size_t k, const Bm25Params& params)
{
    std::vector<RankedList> out(queries.size());
    parallel_for(queries.size(), [&](std::size_t i) { out[i] = retrieve_sparse(index, queries[i], k, params); });
    return out;
}

}  // namespace spar
