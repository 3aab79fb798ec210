#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "spar/corpus.hpp"
#include "spar/rng.hpp"
#include "spar/sparse.hpp"
#include "spar/synthetic.hpp"
#include "support.hpp"

using namespace spar;

TEST_CASE("tokenize")
{
    CHECK(tokenize("Thoros of Myr!") == std::vector<std::string>{"thoros", "of", "myr"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("A-B 12c") == std::vector<std::string>{"a", "b", "12c"});
    CHECK(tokenize("Ärger ÉCOLE naïve") == std::vector<std::string>{"ärger", "école", "naïve"});
    CHECK(tokenize("Привет, МИР") == std::vector<std::string>{"привет", "мир"});
    CHECK(tokenize("x\xe2\x80\x94y") == std::vector<std::string>{"x", "y"});  // em dash separates
    CHECK(tokenize("Keep CASE", TokenizerConfig{false, {}}) == std::vector<std::string>{"Keep", "CASE"});
    CHECK(tokenize("the cat and THE dog", TokenizerConfig{true, {"the", "and"}}) ==
          std::vector<std::string>{"cat", "dog"});
}

TEST_CASE("inverted index statistics")
{
    auto idx = build_inverted_index(Corpus({Passage{"p", std::nullopt, "a a b"}}));
    REQUIRE(idx.postings("a").size() == 1);
    CHECK(idx.postings("a")[0].tf == 2);
    CHECK(idx.postings("b")[0].tf == 1);
    CHECK(idx.avg_doc_length() == 3.0);
    CHECK(idx.doc_count() == 1);

    auto two = build_inverted_index(Corpus({Passage{"x", std::nullopt, "shared one"}, Passage{"y", std::nullopt, "shared two"}}));
    CHECK(two.doc_freq("shared") == 2);
    CHECK(two.doc_freq("missing") == 0);

    CHECK_THROWS_AS(build_inverted_index(Corpus{}), std::invalid_argument);
}

TEST_CASE("index content does not depend on corpus order")
{
    std::vector<Passage> ps{{"c", std::nullopt, "x y z"}, {"a", std::nullopt, "x x"}, {"b", std::nullopt, "z w"}};
    auto first = build_inverted_index(Corpus(ps));
    std::reverse(ps.begin(), ps.end());
    auto second = build_inverted_index(Corpus(ps));
    CHECK(first.terms() == second.terms());
    for (const auto& t : first.terms()) {
        auto a = first.postings(t);
        auto b = second.postings(t);
        CHECK(std::vector<Posting>(a.begin(), a.end()) == std::vector<Posting>(b.begin(), b.end()));
    }
    std::stringstream s1, s2;
    first.save(s1);
    second.save(s2);
    CHECK(s1.str() == s2.str());
}

TEST_CASE("bm25 closed form on a three-passage corpus")
{
    auto idx = build_inverted_index(
        Corpus({Passage{"p1", std::nullopt, "a b"}, Passage{"p2", std::nullopt, "a a c"}, Passage{"p3", std::nullopt, "d"}}));
    // N = 3, df(a) = 2, tf = 2, dl = 3, avgdl = 2
    double idf = std::log(1.0 + (3.0 - 2.0 + 0.5) / (2.0 + 0.5));
    double expected = idf * 2.0 * 1.9 / (2.0 + 0.9 * (1.0 - 0.4 + 0.4 * 3.0 / 2.0));
    std::vector<std::string> q{"a"};
    CHECK(bm25_score(idx, q, "p2") == doctest::Approx(expected).epsilon(1e-12));
    CHECK(bm25_score(idx, q, "p3") == 0.0);
    std::vector<std::string> twice{"a", "a"};
    CHECK(bm25_score(idx, twice, "p2") == bm25_score(idx, q, "p2"));
    CHECK_THROWS_AS(bm25_score(idx, q, "nope"), std::out_of_range);
}

TEST_CASE("retrieve_sparse edge cases")
{
    auto idx = build_inverted_index(
        Corpus({Passage{"p1", std::nullopt, "a b"}, Passage{"p2", std::nullopt, "a a c"}, Passage{"p3", std::nullopt, "d"}}));
    CHECK(retrieve_sparse(idx, Query{"q", "zzz", {}, {}}, 10).empty());
    auto all = retrieve_sparse(idx, Query{"q", "a", {}, {}}, 50);
    CHECK(all.size() == 2);
    CHECK(all.query_id == "q");
    CHECK(all.entries[0].id == "p2");
    CHECK_THROWS_AS(retrieve_sparse(idx, Query{"q", "a", {}, {}}, 0), std::invalid_argument);
}

TEST_CASE("retrieve_sparse matches the exhaustive oracle")
{
    synthetic::CollectionConfig cc;
    cc.passages = 200;
    cc.seed = 11;
    auto col = synthetic::make_collection(cc);
    auto idx = build_inverted_index(col.corpus);
    auto queries = synthetic::make_queries(col, 50, 6, 12);
    for (const auto& q : queries) {
        auto got = retrieve_sparse(idx, q, 50);
        auto want = test_support::bm25_oracle(col.corpus, q.text, 50, 0.9, 0.4);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got.entries[i].id == want[i].first);
            CHECK(std::abs(got.entries[i].score - want[i].second) <= 1e-6);
        }
    }
}

TEST_CASE("bm25 ignores query token order")
{
    synthetic::CollectionConfig cc;
    cc.passages = 100;
    auto col = synthetic::make_collection(cc);
    auto idx = build_inverted_index(col.corpus);
    for (const auto& q : synthetic::make_queries(col, 30, 8, 3)) {
        CHECK(retrieve_sparse(idx, q, 100) == retrieve_sparse(idx, shuffle_query_tokens(q, 77), 100));
    }
}

TEST_CASE("adding an unrelated passage keeps the relative order")
{
    std::vector<Passage> ps{
        {"a", std::nullopt, "red fox jumps"}, {"b", std::nullopt, "red red dog"}, {"c", std::nullopt, "fox den"},
        {"d", std::nullopt, "lazy dog sleeps all day long"}};
    Query q{"q", "red fox", {}, {}};
    auto before = retrieve_sparse(build_inverted_index(Corpus(ps)), q, 10).ids();
    ps.push_back(Passage{"e", std::nullopt, "nothing in common here"});
    auto after = retrieve_sparse(build_inverted_index(Corpus(ps)), q, 10).ids();
    CHECK(before == after);
}

TEST_CASE("sparse index file round-trips")
{
    synthetic::CollectionConfig cc;
    cc.passages = 30;
    auto col = synthetic::make_collection(cc);
    auto idx = build_inverted_index(col.corpus, TokenizerConfig{true, {"of"}});
    std::stringstream buf;
    idx.save(buf);
    auto back = InvertedIndex::load(buf);
    CHECK(back.terms() == idx.terms());
    CHECK(back.tokenizer() == idx.tokenizer());
    CHECK(back.avg_doc_length() == idx.avg_doc_length());
    auto q = synthetic::make_queries(col, 1, 6, 1)[0];
    CHECK(retrieve_sparse(back, q, 10) == retrieve_sparse(idx, q, 10));

    std::stringstream junk("NOTANIDX");
    CHECK_THROWS_AS(InvertedIndex::load(junk), FormatError);
}

TEST_CASE("bm25 parameter validation")
{
    CHECK_THROWS_AS(validate(Bm25Params{-1.0, 0.4}), std::invalid_argument);
    CHECK_THROWS_AS(validate(Bm25Params{0.9, 1.5}), std::invalid_argument);
    CHECK_NOTHROW(validate(Bm25Params{0.0, 1.0}));
}
