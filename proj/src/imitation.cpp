#include "spar/imitation.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

#include "spar/parallel.hpp"

namespace spar {

namespace {

using nlohmann::json;

std::vector<RankedList> label_all(const Teacher& teacher, std::span<const Query> queries, std::size_t depth)
{
    std::vector<RankedList> lists(queries.size());
    parallel_for(queries.size(), [&](std::size_t i) { lists[i] = teacher(queries[i], depth); });
    return lists;
}

json parse_object(const std::string& line, std::size_t line_no)
{
    try {
        auto obj = json::parse(line);
        if (!obj.is_object()) {
            throw FormatError("line " + std::to_string(line_no) + ": expected a JSON object");
        }
        return obj;
    } catch (const json::exception& e) {
        throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
}

template <typename T>
T field(const json& obj, const char* key, std::size_t line_no)
{
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw FormatError("line " + std::to_string(line_no) + ": missing or mistyped field '" + key + "'");
    }
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        fn(parse_object(line, line_no), line_no);
    }
}

template <typename Writer>
void save_with(const std::filesystem::path& path, Writer&& writer)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    writer(out);
}

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return in;
}

}  // namespace

Teacher bm25_teacher(const InvertedIndex& index, Bm25Params params)
{
    validate(params);
    return [&index, params](const Query& q, std::size_t k) { return retrieve_sparse(index, q, k, params); };
}

ImitationData generate_imitation_data(const Teacher& teacher, std::span<const Query> queries, const ImitationConfig& cfg)
{
    if (cfg.positives == 0) {
        throw std::invalid_argument("n_p must be at least 1");
    }
    if (cfg.positives + cfg.negatives > cfg.depth) {
        throw std::invalid_argument(
            "n_p + n_n = " + std::to_string(cfg.positives + cfg.negatives) + " exceeds teacher depth K = " +
            std::to_string(cfg.depth));
    }

    auto lists = label_all(teacher, queries, cfg.depth);
    ImitationData data;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto& entries = lists[i].entries;
        auto len = std::min(entries.size(), cfg.depth);
        if (len < cfg.positives) {
            ++data.dropped;
            continue;
        }
        ImitationExample ex;
        ex.query = queries[i];
        for (std::size_t r = 0; r < cfg.positives; ++r) {
            ex.positives.push_back(entries[r].id);
        }
        auto neg_begin = std::max(cfg.positives, len >= cfg.negatives ? len - cfg.negatives : 0);
        for (auto r = neg_begin; r < len; ++r) {
            ex.negatives.push_back(entries[r].id);
        }
        data.examples.push_back(std::move(ex));
    }
    return data;
}

ValidationData generate_validation_pairs(const Teacher& teacher, std::span<const Query> dev_queries, std::size_t depth)
{
    if (depth < 2) {
        throw std::invalid_argument("validation depth K must be at least 2");
    }
    auto lists = label_all(teacher, dev_queries, depth);
    ValidationData data;
    for (std::size_t i = 0; i < dev_queries.size(); ++i) {
        const auto& entries = lists[i].entries;
        auto len = std::min(entries.size(), depth);
        if (len < 2) {
            ++data.dropped;
            continue;
        }
        data.pairs.push_back(SurrogatePair{dev_queries[i], entries.front().id, entries[len - 1].id});
    }
    return data;
}

std::vector<std::string> build_surrogate_index(std::span<const SurrogatePair> pairs)
{
    if (pairs.empty()) {
        throw std::invalid_argument("surrogate index needs at least one pair");
    }
    std::vector<std::string> ids;
    std::unordered_set<std::string> seen;
    for (const auto& pair : pairs) {
        for (const auto* id : {&pair.positive, &pair.negative}) {
            if (seen.insert(*id).second) {
                ids.push_back(*id);
            }
        }
    }
    return ids;
}

void write_imitation_data(std::ostream& out, std::span<const ImitationExample> examples)
{
    for (const auto& ex : examples) {
        json obj = {
            {"query_id", ex.query.id},
            {"query_text", ex.query.text},
            {"positives", ex.positives},
            {"negatives", ex.negatives},
        };
        out << obj.dump() << '\n';
    }
}

std::vector<ImitationExample> read_imitation_data(std::istream& in)
{
    std::vector<ImitationExample> examples;
    for_each_line(in, [&](const json& obj, std::size_t line_no) {
        ImitationExample ex;
        ex.query.id = field<std::string>(obj, "query_id", line_no);
        ex.query.text = field<std::string>(obj, "query_text", line_no);
        ex.positives = field<std::vector<std::string>>(obj, "positives", line_no);
        ex.negatives = field<std::vector<std::string>>(obj, "negatives", line_no);
        if (ex.positives.empty()) {
            throw FormatError("line " + std::to_string(line_no) + ": example has no positives");
        }
        std::unordered_set<std::string> pos(ex.positives.begin(), ex.positives.end());
        for (const auto& n : ex.negatives) {
            if (pos.contains(n)) {
                throw FormatError("line " + std::to_string(line_no) + ": passage '" + n + "' is both positive and negative");
            }
        }
        examples.push_back(std::move(ex));
    });
    return examples;
}

void save_imitation_data(const std::filesystem::path& path, std::span<const ImitationExample> examples)
{
    save_with(path, [&](std::ostream& out) { write_imitation_data(out, examples); });
}

std::vector<ImitationExample> load_imitation_data(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_imitation_data(in);
}

void write_surrogate_pairs(std::ostream& out, std::span<const SurrogatePair> pairs)
{
    for (const auto& p : pairs) {
        json obj = {
            {"query_id", p.query.id},
            {"query_text", p.query.text},
            {"positive", p.positive},
            {"negative", p.negative},
        };
        out << obj.dump() << '\n';
    }
}

SurrogatePairs read_surrogate_pairs(std::istream& in)
{
    SurrogatePairs pairs;
    for_each_line(in, [&](const json& obj, std::size_t line_no) {
        SurrogatePair p;
        p.query.id = field<std::string>(obj, "query_id", line_no);
        p.query.text = field<std::string>(obj, "query_text", line_no);
        p.positive = field<std::string>(obj, "positive", line_no);
        p.negative = field<std::string>(obj, "negative", line_no);
        if (p.positive == p.negative) {
            throw FormatError("line " + std::to_string(line_no) + ": positive equals negative");
        }
        pairs.push_back(std::move(p));
    });
    return pairs;
}

void save_surrogate_pairs(const std::filesystem::path& path, std::span<const SurrogatePair> pairs)
{
    save_with(path, [&](std::ostream& out) { write_surrogate_pairs(out, pairs); });
}

SurrogatePairs load_surrogate_pairs(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_surrogate_pairs(in);
}

}  // namespace spar
