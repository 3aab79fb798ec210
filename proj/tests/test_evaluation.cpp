#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "spar/dense_index.hpp"
#include "spar/evaluation.hpp"
#include "spar/rng.hpp"
#include "spar/synthetic.hpp"

using namespace spar;

namespace {

RankedList list_of(const std::string& qid, std::vector<std::string> ids)
{
    RankedList out{qid, {}};
    double s = static_cast<double>(ids.size());
    for (auto& id : ids) {
        out.entries.push_back(ScoredPassage{std::move(id), s--});
    }
    return out;
}

Judgments qrels(std::map<std::string, std::set<std::string>> m) { return Judgments::from_qrels(std::move(m)); }

// Extrapolated RBO straight from the definition, recounting each prefix.
double rbo_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b, double p)
{
    if (a.empty() && b.empty()) {
        return 1.0;
    }
    std::size_t depth = std::min(a.size(), b.size());
    if (depth == 0) {
        return 0.0;
    }
    double sum = 0.0;
    double weight = 1.0;
    double last = 0.0;
    for (std::size_t d = 1; d <= depth; ++d) {
        std::set<std::string> pa(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(d));
        std::size_t overlap = 0;
        for (std::size_t i = 0; i < d; ++i) {
            overlap += pa.count(b[i]);
        }
        last = static_cast<double>(overlap) / static_cast<double>(d);
        sum += weight * last;
        weight *= p;
    }
    return (1.0 - p) * sum + weight * last;
}

}  // namespace

TEST_CASE("accuracy at k")
{
    auto j = qrels({{"q1", {"a"}}, {"q2", {"z"}}});
    Run run{{"q1", list_of("q1", {"a", "b"})}, {"q2", list_of("q2", {"b", "c"})}};
    CHECK(accuracy_at_k(run, j, 20) == 0.5);
    Run perfect{{"q1", list_of("q1", {"a"})}, {"q2", list_of("q2", {"z"})}};
    CHECK(accuracy_at_k(perfect, j, 1) == 1.0);
    CHECK(accuracy_at_k(Run{}, j, 5) == 0.0);
    CHECK_THROWS_AS(accuracy_at_k(run, j, 0), std::invalid_argument);
    CHECK_THROWS_AS(accuracy_at_k(run, Judgments::from_qrels({}), 5), std::invalid_argument);
}

TEST_CASE("answer-mode containment")
{
    Corpus corpus({Passage{"p", std::nullopt, "He was  born in 1971."}, Passage{"o", std::nullopt, "other"}});
    QuerySet qs{Query{"q", "when", std::vector<std::string>{"1971"}, std::nullopt},
                Query{"r", "who", std::vector<std::string>{"BORN   IN"}, std::nullopt}};
    auto j = Judgments::from_answers(qs, corpus);
    CHECK(j.answer_mode());
    Run run{{"q", list_of("q", {"o", "p"})}, {"r", list_of("r", {"p"})}};
    CHECK(accuracy_at_k(run, j, 2) == 1.0);
    CHECK(accuracy_at_k(run, j, 1) == 0.5);
    CHECK_THROWS_AS(recall_at_k(run, j, 1), std::invalid_argument);
}

TEST_CASE("mrr at k")
{
    auto j = qrels({{"q", {"d"}}});
    Run run{{"q", list_of("q", {"a", "b", "c", "d"})}};
    CHECK(mrr_at_k(run, j, 10) == 0.25);
    CHECK(mrr_at_k(Run{{"q", list_of("q", {"d"})}}, j, 10) == 1.0);
    std::vector<std::string> eleven;
    for (int i = 0; i < 10; ++i) {
        eleven.push_back("x" + std::to_string(i));
    }
    eleven.push_back("d");
    CHECK(mrr_at_k(Run{{"q", list_of("q", eleven)}}, j, 10) == 0.0);
}

TEST_CASE("recall at k")
{
    auto j = qrels({{"q", {"a", "b"}}});
    CHECK(recall_at_k(Run{{"q", list_of("q", {"a", "b"})}}, j, 5) == 1.0);
    CHECK(recall_at_k(Run{{"q", list_of("q", {"a", "c"})}}, j, 5) == 0.5);
    CHECK(recall_at_k(Run{{"q", list_of("q", {"c"})}}, j, 5) == 0.0);
}

TEST_CASE("metric ordering properties on random runs")
{
    Rng rng(8);
    std::map<std::string, std::set<std::string>> m;
    Run run;
    for (int q = 0; q < 50; ++q) {
        auto qid = "q" + std::to_string(q);
        std::vector<std::string> ids;
        for (int i = 0; i < 30; ++i) {
            ids.push_back("p" + std::to_string(i));
        }
        rng.shuffle(std::span(ids));
        run[qid] = list_of(qid, ids);
        m[qid] = {"p" + std::to_string(rng.below(40)), "p" + std::to_string(rng.below(40))};
    }
    auto j = qrels(m);
    double prev_acc = 0.0;
    double prev_rec = 0.0;
    for (std::size_t k = 1; k <= 40; ++k) {
        double acc = accuracy_at_k(run, j, k);
        double rec = recall_at_k(run, j, k);
        CHECK(acc >= prev_acc);
        CHECK(rec >= prev_rec);
        CHECK(mrr_at_k(run, j, k) <= acc);
        prev_acc = acc;
        prev_rec = rec;
    }
}

TEST_CASE("qrels file")
{
    std::stringstream in("q1 0 a 1\nq1 0 b 0\nq2 0 c 2\n");
    auto j = read_qrels(in);
    CHECK(j.size() == 2);
    CHECK(j.is_positive("q1", "a"));
    CHECK(!j.is_positive("q1", "b"));
    std::stringstream bad("q1 0 a\n");
    CHECK_THROWS_AS(read_qrels(bad), FormatError);
}

TEST_CASE("rbo closed forms")
{
    std::vector<std::string> xy{"x", "y"}, yx{"y", "x"};
    CHECK(rbo(xy, yx, 0.9) == doctest::Approx(0.90).epsilon(1e-12));
    std::vector<std::string> a{"a", "b", "c", "d"};
    CHECK(rbo(a, a, 0.9) == 1.0);
    CHECK(rbo(a, a, 0.3) == 1.0);
    std::vector<std::string> other{"e", "f", "g"};
    CHECK(rbo(a, other, 0.9) == 0.0);
    std::vector<std::string> dup{"a", "a"};
    CHECK_THROWS_AS(rbo(dup, a, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(rbo(a, a, 1.0), std::invalid_argument);
}

TEST_CASE("rbo agrees with the definition and is symmetric")
{
    Rng rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::string> pool;
        for (int i = 0; i < 40; ++i) {
            pool.push_back("d" + std::to_string(i));
        }
        rng.shuffle(std::span(pool));
        std::vector<std::string> a(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(1 + rng.below(25)));
        rng.shuffle(std::span(pool));
        std::vector<std::string> b(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(1 + rng.below(25)));
        double p = trial % 2 == 0 ? 0.9 : rng.uniform(0.05, 0.95);
        CHECK(rbo(a, b, p) == rbo(b, a, p));
        CHECK(rbo(a, b, p) == doctest::Approx(rbo_oracle(a, b, p)).epsilon(1e-12));
    }
}

TEST_CASE("surrogate mrr definitions")
{
    Corpus corpus({Passage{"p1", std::nullopt, "alpha"}, Passage{"p2", std::nullopt, "beta"}});
    EncoderParams enc(std::vector<std::string>{"alpha", "beta", "qa"}, 2, Precision::f64);
    enc.query_embedding().row(2)[0] = 1.0;    // "qa" points at dimension 0
    enc.passage_embedding().row(0)[1] = 1.0;  // alpha lives on dimension 1
    enc.passage_embedding().row(1)[0] = 1.0;  // beta on dimension 0
    SurrogatePairs pairs{{Query{"q", "qa", std::nullopt, std::nullopt}, "p1", "p2"}};
    CHECK(surrogate_mrr(enc, pairs, corpus) == 0.5);
    SurrogatePairs flipped{{Query{"q", "qa", std::nullopt, std::nullopt}, "p2", "p1"}};
    CHECK(surrogate_mrr(enc, flipped, corpus) == 1.0);
}

TEST_CASE("untrained surrogate mrr is near the uniform-ranking expectation")
{
    synthetic::CollectionConfig cc;
    cc.passages = 1200;
    auto col = synthetic::make_collection(cc);
    Rng rng(4);
    SurrogatePairs pairs;
    std::vector<std::size_t> order(col.corpus.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    const std::size_t n = col.corpus.size() / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pos = col.corpus[order[2 * i]];
        pairs.push_back(SurrogatePair{Query{"q" + std::to_string(i), pos.text, std::nullopt, std::nullopt}, pos.id,
                                      col.corpus[order[2 * i + 1]].id});
    }
    // Queries are random text relative to an untrained encoder: use unrelated texts.
    auto queries = synthetic::make_queries(col, n, 8, 77);
    for (std::size_t i = 0; i < n; ++i) {
        pairs[i].query.text = queries[i].text;
    }
    auto enc = EncoderParams::random(build_vocab(col.corpus), 32, 9, Precision::f64);

    // Uniform rank over 2N items: E[1/R] = H_{2N} / 2N, Var from E[1/R^2].
    double h1 = 0.0, h2 = 0.0;
    for (std::size_t r = 1; r <= 2 * n; ++r) {
        h1 += 1.0 / static_cast<double>(r);
        h2 += 1.0 / static_cast<double>(r * r);
    }
    double mean = h1 / static_cast<double>(2 * n);
    double var = h2 / static_cast<double>(2 * n) - mean * mean;
    double se = std::sqrt(var / static_cast<double>(n));
    CHECK(std::abs(surrogate_mrr(enc, pairs, col.corpus) - mean) < 4.0 * se);
}

TEST_CASE("metric tables")
{
    std::vector<MetricValue> values{{"acc", 20, 0.5}, {"mrr", 10, 0.25}};
    CHECK(format_metric_lines(values) == "metric=acc, k=20, value=0.500000\nmetric=mrr, k=10, value=0.250000\n");
    CHECK(format_metric_table(values).find("0.500000") != std::string::npos);
}

TEST_CASE("stress test flags order-sensitive retrievers only")
{
    synthetic::CollectionConfig cc;
    cc.passages = 200;
    auto col = synthetic::make_collection(cc);
    auto idx = build_inverted_index(col.corpus);
    auto queries = synthetic::make_queries(col, 50, 8, 5);
    auto j = Judgments::from_qrels(synthetic::source_qrels(queries));
    std::vector<NamedRetriever> retrievers{
        {"bm25", [&](const Query& q, std::size_t k) { return retrieve_sparse(idx, q, k); }},
        position_weighted_bm25(idx, {}, 0.25)};
    std::vector<std::size_t> ks{1, 20};
    auto rows = shuffle_stress_test(retrievers, queries, j, ks, 3);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].delta == 0.0);
    CHECK(rows[1].delta == 0.0);
    bool detected = false;
    for (const auto& r : rows) {
        if (r.retriever == "position-weighted-bm25" && r.delta != 0.0) {
            detected = true;
        }
    }
    CHECK(detected);
    CHECK(format_stress_lines(rows).find("retriever=bm25") != std::string::npos);
}
