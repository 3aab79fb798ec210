#include "spar/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "spar/rng.hpp"

namespace spar {

namespace {

using nlohmann::json;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_blank(std::string_view s)
{
    return std::all_of(s.begin(), s.end(), is_space);
}

std::string line_error(std::size_t line_no, std::string_view what)
{
    return "line " + std::to_string(line_no) + ": " + std::string(what);
}

json parse_line(const std::string& line, std::size_t line_no)
{
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw FormatError(line_error(line_no, "malformed JSON (" + std::string(e.what()) + ")"));
    }
    if (!obj.is_object()) {
        throw FormatError(line_error(line_no, "expected a JSON object"));
    }
    return obj;
}

std::string required_string(const json& obj, const char* key, std::size_t line_no)
{
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw FormatError(line_error(line_no, std::string("missing string field '") + key + "'"));
    }
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* key, std::size_t line_no)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_string()) {
        throw FormatError(line_error(line_no, std::string("field '") + key + "' must be a string"));
    }
    return it->get<std::string>();
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        fn(line, line_no);
    }
}

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

}  // namespace

Corpus::Corpus(std::vector<Passage> passages) : passages_(std::move(passages))
{
    by_id_.reserve(passages_.size());
    for (std::size_t i = 0; i < passages_.size(); ++i) {
        const auto& p = passages_[i];
        if (p.id.empty()) {
            throw FormatError("passage at position " + std::to_string(i) + " has an empty id");
        }
        if (is_blank(p.text)) {
            throw FormatError("passage '" + p.id + "' has blank text");
        }
        if (!by_id_.emplace(p.id, i).second) {
            throw FormatError("duplicate passage id '" + p.id + "'");
        }
    }
}

const Passage* Corpus::find(std::string_view id) const
{
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &passages_[it->second];
}

std::size_t Corpus::index_of(std::string_view id) const
{
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) {
        throw std::out_of_range("unknown passage id '" + std::string(id) + "'");
    }
    return it->second;
}

Corpus read_corpus(std::istream& in)
{
    std::vector<Passage> passages;
    std::unordered_map<std::string, std::size_t> first_line;
    for_each_line(in, [&](const std::string& line, std::size_t line_no) {
        auto obj = parse_line(line, line_no);
        Passage p;
        p.id = required_string(obj, "id", line_no);
        p.title = optional_string(obj, "title", line_no);
        p.text = required_string(obj, "text", line_no);
        if (p.id.empty()) {
            throw FormatError(line_error(line_no, "empty id"));
        }
        if (is_blank(p.text)) {
            throw FormatError(line_error(line_no, "blank text for passage '" + p.id + "'"));
        }
        if (!first_line.emplace(p.id, line_no).second) {
            throw FormatError(line_error(line_no, "duplicate passage id '" + p.id + "'"));
        }
        passages.push_back(std::move(p));
    });
    return Corpus(std::move(passages));
}

void write_corpus(std::ostream& out, const Corpus& corpus)
{
    for (const auto& p : corpus) {
        json obj = {{"id", p.id}};
        obj["title"] = p.title ? json(*p.title) : json(nullptr);
        obj["text"] = p.text;
        out << obj.dump() << '\n';
    }
}

Corpus load_corpus(const std::filesystem::path& path)
{
    auto in = open_input(path);
    try {
        return read_corpus(in);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus)
{
    auto out = open_output(path);
    write_corpus(out, corpus);
}

QuerySet read_queries(std::istream& in)
{
    QuerySet queries;
    std::unordered_map<std::string, std::size_t> seen;
    for_each_line(in, [&](const std::string& line, std::size_t line_no) {
        auto obj = parse_line(line, line_no);
        Query q;
        q.id = required_string(obj, "id", line_no);
        q.text = required_string(obj, "text", line_no);
        if (auto it = obj.find("answers"); it != obj.end() && !it->is_null()) {
            if (!it->is_array()) {
                throw FormatError(line_error(line_no, "field 'answers' must be a list of strings"));
            }
            std::vector<std::string> answers;
            for (const auto& a : *it) {
                if (!a.is_string()) {
                    throw FormatError(line_error(line_no, "field 'answers' must be a list of strings"));
                }
                answers.push_back(a.get<std::string>());
            }
            q.answers = std::move(answers);
        }
        q.source_id = optional_string(obj, "source", line_no);
        if (!seen.emplace(q.id, line_no).second) {
            throw FormatError(line_error(line_no, "duplicate query id '" + q.id + "'"));
        }
        queries.push_back(std::move(q));
    });
    return queries;
}

void write_queries(std::ostream& out, const QuerySet& queries)
{
    for (const auto& q : queries) {
        json obj = {{"id", q.id}, {"text", q.text}};
        if (q.answers) {
            obj["answers"] = *q.answers;
        }
        if (q.source_id) {
            obj["source"] = *q.source_id;
        }
        out << obj.dump() << '\n';
    }
}

QuerySet load_queries(const std::filesystem::path& path)
{
    auto in = open_input(path);
    try {
        return read_queries(in);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void save_queries(const std::filesystem::path& path, const QuerySet& queries)
{
    auto out = open_output(path);
    write_queries(out, queries);
}

std::vector<std::string> split_sentences(std::string_view text)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    auto emit = [&](std::size_t end) {
        auto piece = text.substr(start, end - start);
        auto first = piece.find_first_not_of(" \t\n\r\f\v");
        if (first == std::string_view::npos) {
            return;
        }
        auto last = piece.find_last_not_of(" \t\n\r\f\v");
        out.emplace_back(piece.substr(first, last - first + 1));
    };
    for (std::size_t i = 0; i + 1 < text.size(); ++i) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') && is_space(text[i + 1])) {
            emit(i + 1);
            start = i + 1;
        }
    }
    emit(text.size());
    return out;
}

double extra_sentence_probability(std::size_t position, double decay_tau)
{
    return std::exp(-static_cast<double>(position) / decay_tau);
}

QuerySet sample_training_queries(const Corpus& corpus, const SamplingConfig& cfg)
{
    if (corpus.empty()) {
        throw std::invalid_argument("cannot sample training queries from an empty corpus");
    }
    if (!(cfg.decay_tau > 0.0)) {
        throw std::invalid_argument("decay_tau must be positive");
    }

    std::unordered_map<std::string, std::size_t> passages_seen;
    QuerySet queries;
    for (std::size_t pi = 0; pi < corpus.size(); ++pi) {
        const auto& passage = corpus[pi];
        std::size_t position = 0;
        if (passage.title && !passage.title->empty()) {
            position = passages_seen[*passage.title]++;
        }

        auto sentences = split_sentences(passage.text);
        if (sentences.empty()) {
            throw std::invalid_argument("passage '" + passage.id + "' has no sentences");
        }

        Rng rng(mix_seed(cfg.seed, pi));
        auto n = sentences.size();
        auto mandatory = std::min(cfg.min_per_passage, n);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = 0; i < mandatory; ++i) {
            auto j = i + static_cast<std::size_t>(rng.below(n - i));
            std::swap(order[i], order[j]);
        }
        std::vector<bool> keep(n, false);
        for (std::size_t i = 0; i < mandatory; ++i) {
            keep[order[i]] = true;
        }
        auto p_extra = extra_sentence_probability(position, cfg.decay_tau);
        for (std::size_t s = 0; s < n; ++s) {
            // drawn for every sentence so the stream does not depend on tau
            double u = rng.uniform();
            if (u < p_extra) {
                keep[s] = true;
            }
        }

        for (std::size_t s = 0; s < n; ++s) {
            if (keep[s]) {
                Query q;
                q.id = passage.id + "#" + std::to_string(s);
                q.text = std::move(sentences[s]);
                q.source_id = passage.id;
                queries.push_back(std::move(q));
            }
        }
    }
    return queries;
}

Query shuffle_query_tokens(const Query& query, std::uint64_t seed)
{
    std::vector<std::string_view> tokens;
    std::string_view text = query.text;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) {
            ++i;
        }
        auto start = i;
        while (i < text.size() && !is_space(text[i])) {
            ++i;
        }
        if (i > start) {
            tokens.push_back(text.substr(start, i - start));
        }
    }
    if (tokens.size() < 2) {
        return query;
    }

    Rng rng(seed);
    rng.shuffle(std::span(tokens));
    Query out = query;
    out.text.clear();
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (t > 0) {
            out.text += ' ';
        }
        out.text += tokens[t];
    }
    return out;
}

}  // namespace spar
