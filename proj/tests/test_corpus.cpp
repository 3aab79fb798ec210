#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "spar/corpus.hpp"
#include "spar/rng.hpp"
#include "spar/sparse.hpp"

using namespace spar;

namespace {

Corpus one_document(std::size_t passages, std::size_t sentences_each)
{
    std::string text;
    for (std::size_t s = 0; s < sentences_each; ++s) {
        text += (s == 0 ? "" : " ") + std::string("w") + std::to_string(s) + ".";
    }
    std::vector<Passage> out;
    for (std::size_t i = 0; i < passages; ++i) {
        out.push_back(Passage{"p" + std::to_string(i), std::string("Doc"), text});
    }
    return Corpus(std::move(out));
}

std::vector<std::string> sorted_tokens(const std::string& text)
{
    auto t = tokenize(text);
    std::sort(t.begin(), t.end());
    return t;
}

}  // namespace

TEST_CASE("split_sentences cuts after terminators followed by whitespace")
{
    CHECK(split_sentences("A b. C d.") == std::vector<std::string>{"A b.", "C d."});
    CHECK(split_sentences("no terminator") == std::vector<std::string>{"no terminator"});
    CHECK(split_sentences("X? Y! Z.").size() == 3);
    CHECK(split_sentences("v1.2 is out.") == std::vector<std::string>{"v1.2 is out."});
    CHECK(split_sentences("   ").empty());
}

TEST_CASE("corpus files round-trip")
{
    Corpus corpus({Passage{"a", std::string("Té"), "x \"quoted\"\ttab"}, Passage{"b", std::nullopt, "y"}});
    std::stringstream buf;
    write_corpus(buf, corpus);
    auto back = read_corpus(buf);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].id == corpus[i].id);
        CHECK(back[i].title == corpus[i].title);
        CHECK(back[i].text == corpus[i].text);
    }

    std::stringstream again;
    write_corpus(again, back);
    buf.clear();
    buf.seekg(0);
    std::stringstream first;
    write_corpus(first, corpus);
    CHECK(again.str() == first.str());
}

TEST_CASE("query files round-trip answers and sources")
{
    QuerySet qs{Query{"q1", "who", std::vector<std::string>{"x", "y"}, std::nullopt}, Query{"q2", "what", std::nullopt, std::string("p")}};
    std::stringstream buf;
    write_queries(buf, qs);
    auto back = read_queries(buf);
    REQUIRE(back.size() == 2);
    CHECK(back[0].answers == qs[0].answers);
    CHECK(back[1].source_id == qs[1].source_id);
    CHECK(!back[1].answers);
}

TEST_CASE("malformed corpus lines name the line")
{
    std::stringstream dup("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
    CHECK_THROWS_AS(read_corpus(dup), FormatError);

    std::stringstream bad("{\"id\":\"a\",\"text\":\"x\"}\nnot json\n");
    try {
        read_corpus(bad);
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    std::stringstream missing("{\"id\":\"a\"}\n");
    CHECK_THROWS_AS(read_corpus(missing), FormatError);
}

TEST_CASE("sampling guarantees a sentence per passage and is deterministic")
{
    std::vector<Passage> ps;
    for (int i = 0; i < 10; ++i) {
        ps.push_back(Passage{"p" + std::to_string(i), std::string("T") + std::to_string(i / 3), "One. Two. Three."});
    }
    Corpus corpus(std::move(ps));
    SamplingConfig cfg{0.3, 1, 17};
    auto a = sample_training_queries(corpus, cfg);
    auto b = sample_training_queries(corpus, cfg);
    CHECK(a.size() >= 10);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].text == b[i].text);
    }
    for (const auto& p : corpus) {
        CHECK(std::any_of(a.begin(), a.end(), [&](const Query& q) { return q.source_id == p.id; }));
    }

    CHECK_THROWS_AS(sample_training_queries(Corpus{}, cfg), std::invalid_argument);
}

TEST_CASE("min_per_passage is capped by the sentence count")
{
    Corpus corpus({Passage{"a", std::string("T"), "One. Two."}, Passage{"b", std::string("T"), "Three."}});
    auto qs = sample_training_queries(corpus, SamplingConfig{1e-9, 5, 0});
    CHECK(qs.size() == 3);
}

TEST_CASE("extra-sentence rate follows the positional decay")
{
    // tau = 0.5 makes position 4 keep extras with probability exp(-8).
    const std::size_t sentences = 2000;
    const std::size_t trials = 10000;
    auto corpus = one_document(5, sentences);
    std::vector<double> extra(5, 0.0);
    for (std::size_t t = 0; t < trials; ++t) {
        auto qs = sample_training_queries(corpus, SamplingConfig{0.5, 1, t});
        std::vector<std::size_t> emitted(5, 0);
        for (const auto& q : qs) {
            ++emitted[static_cast<std::size_t>(std::stoi(q.source_id->substr(1)))];
        }
        for (std::size_t p = 0; p < 5; ++p) {
            extra[p] += static_cast<double>(emitted[p] - 1);
        }
    }
    double opportunities = static_cast<double>(trials * (sentences - 1));
    double rate0 = extra[0] / opportunities;
    double rate4 = extra[4] / opportunities;
    double expected_ratio = std::exp(0.0) / std::exp(-8.0);
    CHECK(rate0 == doctest::Approx(1.0));
    CHECK(std::abs(rate0 / rate4 - expected_ratio) / expected_ratio < 0.05);
}

TEST_CASE("output size does not shrink as tau grows")
{
    std::vector<Passage> ps;
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        std::string text;
        auto n = 1 + rng.below(8);
        for (std::uint64_t s = 0; s < n; ++s) {
            text += "Sentence " + std::to_string(s) + ". ";
        }
        ps.push_back(Passage{"p" + std::to_string(i), std::string("D") + std::to_string(i / 7), text});
    }
    Corpus corpus(std::move(ps));
    std::size_t previous = 0;
    for (double tau : {0.25, 1.0, 4.0}) {
        auto n = sample_training_queries(corpus, SamplingConfig{tau, 1, 3}).size();
        CHECK(n >= previous);
        previous = n;
    }
}

TEST_CASE("shuffle_query_tokens permutes whitespace tokens")
{
    Query single{"q", "alone", std::nullopt, std::nullopt};
    CHECK(shuffle_query_tokens(single, 4).text == "alone");

    Query abc{"q", "a b c", std::nullopt, std::nullopt};
    auto s = shuffle_query_tokens(abc, 9);
    CHECK(sorted_tokens(s.text) == sorted_tokens(abc.text));
    CHECK(shuffle_query_tokens(abc, 9).text == s.text);
    CHECK(s.id == abc.id);
}

TEST_CASE("shuffle fuzz preserves the token multiset")
{
    Rng rng(2024);
    const std::vector<std::string> words{"alpha", "Beta", "gämma", "d3lta", "eps-ilon", "zeta!", "eta"};
    for (int i = 0; i < 1000; ++i) {
        std::string text;
        auto n = 1 + rng.below(12);
        for (std::uint64_t t = 0; t < n; ++t) {
            text += words[rng.below(words.size())];
            text += rng.below(4) == 0 ? "  " : " ";
        }
        Query q{"q" + std::to_string(i), text, std::nullopt, std::nullopt};
        auto s = shuffle_query_tokens(q, rng.next());
        CHECK(sorted_tokens(s.text) == sorted_tokens(q.text));
    }
}
