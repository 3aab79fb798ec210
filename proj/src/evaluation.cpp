#include "spar/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "spar/parallel.hpp"
#include "spar/rng.hpp"

namespace spar {

std::string normalize_for_match(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        auto u = static_cast<unsigned char>(c);
        if (std::isspace(u)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(u));
    }
    return out;
}

Judgments Judgments::from_qrels(std::map<std::string, std::set<std::string>> positives)
{
    Judgments j;
    for (auto& [qid, set] : positives) {
        if (!set.empty()) {
            j.query_ids_.push_back(qid);
            j.qrels_.emplace(qid, std::move(set));
        }
    }
    return j;
}

Judgments Judgments::from_answers(std::span<const Query> queries, const Corpus& corpus)
{
    Judgments j;
    j.answer_mode_ = true;
    auto texts = std::make_shared<std::unordered_map<std::string, std::string>>();
    texts->reserve(corpus.size());
    for (const auto& p : corpus) {
        texts->emplace(p.id, normalize_for_match(p.text));
    }
    j.normalized_text_ = std::move(texts);
    for (const auto& q : queries) {
        if (!q.answers) {
            continue;
        }
        std::vector<std::string> normalized;
        for (const auto& a : *q.answers) {
            auto n = normalize_for_match(a);
            if (!n.empty()) {
                normalized.push_back(std::move(n));
            }
        }
        j.answers_[q.id] = std::move(normalized);
    }
    for (const auto& [qid, answers] : j.answers_) {
        j.query_ids_.push_back(qid);
    }
    return j;
}

bool Judgments::is_positive(const std::string& query_id, const std::string& passage_id) const
{
    if (!answer_mode_) {
        auto it = qrels_.find(query_id);
        return it != qrels_.end() && it->second.contains(passage_id);
    }
    auto answers = answers_.find(query_id);
    auto text = normalized_text_->find(passage_id);
    if (answers == answers_.end() || text == normalized_text_->end()) {
        return false;
    }
    return std::any_of(answers->second.begin(), answers->second.end(), [&](const std::string& a) {
        return text->second.find(a) != std::string::npos;
    });
}

const std::set<std::string>* Judgments::positives(const std::string& query_id) const
{
    auto it = qrels_.find(query_id);
    return it == qrels_.end() ? nullptr : &it->second;
}

Judgments read_qrels(std::istream& in)
{
    std::map<std::string, std::set<std::string>> positives;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, iteration, pid;
        double rel = 0.0;
        if (!(fields >> qid >> iteration >> pid >> rel)) {
            throw FormatError(
                "qrels line " + std::to_string(line_no) + ": expected '<query_id> 0 <passage_id> <relevance>'");
        }
        if (rel > 0.0) {
            positives[qid].insert(pid);
        }
    }
    return Judgments::from_qrels(std::move(positives));
}

Judgments load_qrels(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return read_qrels(in);
}

void write_qrels(std::ostream& out, const std::map<std::string, std::set<std::string>>& positives)
{
    for (const auto& [qid, set] : positives) {
        for (const auto& pid : set) {
            out << qid << " 0 " << pid << " 1\n";
        }
    }
}

namespace {

void check_args(const Judgments& judgments, std::size_t k)
{
    if (judgments.empty()) {
        throw std::invalid_argument("judgments are empty");
    }
    if (k == 0) {
        throw std::invalid_argument("k must be at least 1");
    }
}

// 1-based rank of the first positive within the top k, 0 if none.
std::size_t first_hit(const RankedList& list, const Judgments& judgments, const std::string& qid, std::size_t k)
{
    auto depth = std::min(k, list.entries.size());
    for (std::size_t r = 0; r < depth; ++r) {
        if (judgments.is_positive(qid, list.entries[r].id)) {
            return r + 1;
        }
    }
    return 0;
}

template <typename PerQuery>
double mean_over_queries(const Run& run, const Judgments& judgments, PerQuery&& per_query)
{
    double total = 0.0;
    for (const auto& qid : judgments.query_ids()) {
        auto it = run.find(qid);
        if (it != run.end()) {
            total += per_query(qid, it->second);
        }
    }
    return total / static_cast<double>(judgments.size());
}

}  // namespace

double accuracy_at_k(const Run& run, const Judgments& judgments, std::size_t k)
{
    check_args(judgments, k);
    return mean_over_queries(run, judgments, [&](const std::string& qid, const RankedList& list) {
        return first_hit(list, judgments, qid, k) > 0 ? 1.0 : 0.0;
    });
}

double mrr_at_k(const Run& run, const Judgments& judgments, std::size_t k)
{
    check_args(judgments, k);
    return mean_over_queries(run, judgments, [&](const std::string& qid, const RankedList& list) {
        auto rank = first_hit(list, judgments, qid, k);
        return rank > 0 ? 1.0 / static_cast<double>(rank) : 0.0;
    });
}

double recall_at_k(const Run& run, const Judgments& judgments, std::size_t k)
{
    check_args(judgments, k);
    if (judgments.answer_mode()) {
        throw std::invalid_argument("recall needs qrels judgments");
    }
    return mean_over_queries(run, judgments, [&](const std::string& qid, const RankedList& list) {
        const auto* positives = judgments.positives(qid);
        auto depth = std::min(k, list.entries.size());
        std::size_t found = 0;
        for (std::size_t r = 0; r < depth; ++r) {
            found += positives->contains(list.entries[r].id) ? 1 : 0;
        }
        return static_cast<double>(found) / static_cast<double>(positives->size());
    });
}

double surrogate_mrr(
    const EncoderParams& encoder, std::span<const SurrogatePair> pairs, const Corpus& corpus,
    const TokenizerConfig& tokenizer)
{
    auto ids = build_surrogate_index(pairs);
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<std::vector<double>> vectors;
    vectors.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto* passage = corpus.find(ids[i]);
        if (passage == nullptr) {
            throw std::out_of_range("surrogate passage '" + ids[i] + "' is not in the corpus");
        }
        vectors.push_back(encode_passage(encoder, tokenize(passage->text, tokenizer)));
        slot.emplace(ids[i], i);
    }

    double total = 0.0;
    for (const auto& pair : pairs) {
        auto q = encode_query(encoder, tokenize(pair.query.text, tokenizer));
        auto pos = slot.at(pair.positive);
        double pos_score = dot(q, vectors[pos]);
        std::size_t rank = 1;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (i == pos) {
                continue;
            }
            double s = dot(q, vectors[i]);
            if (s > pos_score || (s == pos_score && ids[i] < pair.positive)) {
                ++rank;
            }
        }
        total += 1.0 / static_cast<double>(rank);
    }
    return total / static_cast<double>(pairs.size());
}

double rbo(std::span<const std::string> a, std::span<const std::string> b, double p)
{
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("rbo persistence p must lie in (0, 1)");
    }
    for (auto list : {a, b}) {
        std::unordered_set<std::string_view> seen;
        for (const auto& id : list) {
            if (!seen.insert(id).second) {
                throw std::invalid_argument("rbo list contains duplicate id '" + id + "'");
            }
        }
    }
    if (a.empty() || b.empty()) {
        return a.empty() && b.empty() ? 1.0 : 0.0;
    }

    const auto depth = std::min(a.size(), b.size());
    // Every prefix agrees exactly, so A_d = 1 at all depths and the sum
    // telescopes to 1; return it without rounding error.
    if (std::equal(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(depth), b.begin())) {
        return 1.0;
    }

    std::unordered_set<std::string_view> seen_a, seen_b;
    std::size_t overlap = 0;
    double weighted = 0.0;
    double weight = 1.0;  // p^(d-1)
    double agreement = 0.0;
    for (std::size_t d = 1; d <= depth; ++d) {
        const auto& x = a[d - 1];
        const auto& y = b[d - 1];
        if (x == y) {
            ++overlap;
        } else {
            overlap += seen_b.contains(x) ? 1 : 0;
            overlap += seen_a.contains(y) ? 1 : 0;
        }
        seen_a.insert(x);
        seen_b.insert(y);
        agreement = static_cast<double>(overlap) / static_cast<double>(d);
        weighted += weight * agreement;
        weight *= p;
    }
    return (1.0 - p) * weighted + weight * agreement;
}

namespace {

std::string fixed6(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return buf;
}

std::string pad(const std::string& s, std::size_t width)
{
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string render_table(const std::vector<std::vector<std::string>>& rows)
{
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        widths.resize(std::max(widths.size(), row.size()), 0);
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], row[c].size());
        }
    }
    std::string out;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            line += c + 1 < row.size() ? pad(row[c], widths[c] + 2) : row[c];
        }
        out += line + '\n';
    }
    return out;
}

}  // namespace

std::string format_metric_table(std::span<const MetricValue> values)
{
    std::vector<std::vector<std::string>> rows{{"metric", "k", "value"}};
    for (const auto& v : values) {
        rows.push_back({v.metric, std::to_string(v.k), fixed6(v.value)});
    }
    return render_table(rows);
}

std::string format_metric_lines(std::span<const MetricValue> values)
{
    std::string out;
    for (const auto& v : values) {
        out += "metric=" + v.metric + ", k=" + std::to_string(v.k) + ", value=" + fixed6(v.value) + '\n';
    }
    return out;
}

std::vector<StressRow> shuffle_stress_test(
    std::span<const NamedRetriever> retrievers, std::span<const Query> queries, const Judgments& judgments,
    std::span<const std::size_t> k_values, std::uint64_t seed)
{
    if (k_values.empty()) {
        throw std::invalid_argument("stress test needs at least one k");
    }
    auto depth = *std::max_element(k_values.begin(), k_values.end());

    std::vector<Query> shuffled;
    shuffled.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        shuffled.push_back(shuffle_query_tokens(queries[i], mix_seed(seed, i)));
    }

    auto run_all = [&](const NamedRetriever& r, std::span<const Query> qs) {
        std::vector<RankedList> lists(qs.size());
        parallel_for(qs.size(), [&](std::size_t i) {
            lists[i] = r.retrieve(qs[i], depth);
            lists[i].query_id = qs[i].id;
        });
        return make_run(lists);
    };

    std::vector<StressRow> rows;
    for (const auto& r : retrievers) {
        auto original = run_all(r, queries);
        auto perturbed = run_all(r, shuffled);
        for (auto k : k_values) {
            StressRow row{r.name, k, accuracy_at_k(original, judgments, k), accuracy_at_k(perturbed, judgments, k), 0.0};
            row.delta = row.original - row.shuffled;
            rows.push_back(row);
        }
    }
    return rows;
}

NamedRetriever position_weighted_bm25(const InvertedIndex& index, Bm25Params params, double decay)
{
    validate(params);
    auto retrieve = [&index, params, decay](const Query& query, std::size_t k) {
        auto tokens = tokenize(query.text, index.tokenizer());
        std::vector<double> acc(index.doc_count(), 0.0);
        std::vector<std::uint32_t> touched;
        std::unordered_set<std::string> seen;
        double weight = 1.0;
        for (const auto& term : tokens) {
            if (seen.insert(term).second) {
                auto list = index.postings(term);
                auto idf = bm25_idf(index.doc_count(), list.size());
                for (const auto& p : list) {
                    if (acc[p.doc] == 0.0) {
                        touched.push_back(p.doc);
                    }
                    acc[p.doc] +=
                        weight * bm25_term_score(idf, p.tf, index.doc_length(p.doc), index.avg_doc_length(), params);
                }
            }
            weight *= decay;
        }
        std::vector<ScoredPassage> candidates;
        for (auto doc : touched) {
            if (acc[doc] > 0.0) {
                candidates.push_back(ScoredPassage{index.doc_id(doc), acc[doc]});
            }
        }
        return select_top_k(query.id, std::move(candidates), k);
    };
    return NamedRetriever{"position-weighted-bm25", std::move(retrieve)};
}

std::string format_stress_table(std::span<const StressRow> rows)
{
    std::vector<std::vector<std::string>> table{{"retriever", "k", "original", "shuffled", "delta"}};
    for (const auto& r : rows) {
        table.push_back({r.retriever, std::to_string(r.k), fixed6(r.original), fixed6(r.shuffled), fixed6(r.delta)});
    }
    return render_table(table);
}

std::string format_stress_lines(std::span<const StressRow> rows)
{
    std::string out;
    for (const auto& r : rows) {
        auto prefix = "retriever=" + r.retriever + ", metric=";
        auto suffix = ", k=" + std::to_string(r.k) + ", value=";
        out += prefix + "acc_original" + suffix + fixed6(r.original) + '\n';
        out += prefix + "acc_shuffled" + suffix + fixed6(r.shuffled) + '\n';
        out += prefix + "acc_delta" + suffix + fixed6(r.delta) + '\n';
    }
    return out;
}

}  // namespace spar
