#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "spar/dense_index.hpp"
#include "spar/fusion.hpp"
#include "spar/rng.hpp"
#include "spar/synthetic.hpp"

using namespace spar;

namespace {

DenseIndex random_index(std::size_t n, std::size_t d, std::uint64_t seed, Precision prec = Precision::f64)
{
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back("p" + std::to_string(1000 + i));
    }
    DenseIndex idx(ids, d, prec);
    Rng rng(seed);
    std::vector<double> row(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& x : row) {
            x = rng.uniform(-1, 1);
        }
        idx.set_row(i, row);
    }
    return idx;
}

std::vector<double> random_vector(Rng& rng, std::size_t d)
{
    std::vector<double> v(d);
    for (auto& x : v) {
        x = rng.uniform(-1, 1);
    }
    return v;
}

std::string bytes_of(const DenseIndex& idx)
{
    std::stringstream s;
    idx.save(s);
    return s.str();
}

}  // namespace

TEST_CASE("fused query vectors")
{
    std::vector<double> q{1, 2}, lex{3, 4};
    CHECK(fuse_query_vector(q, lex, FusionConfig{FusionMode::concat, 0.5}) == std::vector<double>{1, 2, 1.5, 2});
    std::vector<double> zero{0, 0};
    CHECK(fuse_query_vector(q, zero, FusionConfig{FusionMode::sum, 1.0}) == q);
    std::vector<double> three{1, 2, 3};
    CHECK_THROWS_AS(fuse_query_vector(q, three, FusionConfig{FusionMode::sum, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(fuse_query_vector(q, lex, FusionConfig{FusionMode::concat, -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(fuse_query_vector(q, lex, FusionConfig{FusionMode::concat, NAN}), std::invalid_argument);
}

TEST_CASE("concat dot product splits into base plus weighted lexical")
{
    Rng rng(6);
    for (int t = 0; t < 100; ++t) {
        auto q = random_vector(rng, 5), ql = random_vector(rng, 3), p = random_vector(rng, 5), pl = random_vector(rng, 3);
        double mu = rng.uniform(0.1, 10.0);
        auto fq = fuse_query_vector(q, ql, FusionConfig{FusionMode::concat, mu});
        auto fp = fuse_passage_vector(p, pl, FusionMode::concat);
        CHECK(std::abs(dot(fq, fp) - (dot(q, p) + mu * dot(ql, pl))) < 1e-6);
    }
}

TEST_CASE("weighted sum is not score-linear")
{
    // Cross terms q.p_lex and q_lex.p survive in sum mode.
    std::vector<double> q{1, 0}, ql{0, 1}, p{0, 1}, pl{1, 0};
    const double mu = 2.0;
    auto fq = fuse_query_vector(q, ql, FusionConfig{FusionMode::sum, mu});
    auto fp = fuse_passage_vector(p, pl, FusionMode::sum);
    double linear = dot(q, p) + mu * dot(ql, pl);
    CHECK(linear == 0.0);
    CHECK(dot(fq, fp) == 3.0);
}

TEST_CASE("spar index shapes and weight independence")
{
    auto base = random_index(10, 4, 1);
    auto lex = random_index(10, 4, 2);
    auto concat = build_spar_index(base, lex, FusionConfig{FusionMode::concat, 1.0});
    CHECK(concat.dim() == 8);
    CHECK(bytes_of(build_spar_index(base, lex, FusionConfig{FusionMode::concat, 7.5})) == bytes_of(concat));

    DenseIndex zeros(base.ids(), 4, Precision::f64);
    auto summed = build_spar_index(base, zeros, FusionConfig{FusionMode::sum, 1.0});
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(std::vector<double>(summed.row(i).begin(), summed.row(i).end()) ==
              std::vector<double>(base.row(i).begin(), base.row(i).end()));
    }
    auto other = random_index(9, 4, 3);
    CHECK_THROWS_AS(build_spar_index(base, other, FusionConfig{}), std::invalid_argument);
}

TEST_CASE("dense retrieval basics")
{
    auto idx = random_index(5, 3, 4);
    std::vector<double> zero(3, 0.0);
    auto z = retrieve_dense(idx, zero, 3);
    CHECK(z.ids() == std::vector<std::string>{"p1000", "p1001", "p1002"});

    DenseIndex one(std::vector<std::string>{"only"}, 2);
    std::vector<double> q{0.3, -1};
    CHECK(retrieve_dense(one, q, 10).ids() == std::vector<std::string>{"only"});

    std::vector<double> wrong(4, 1.0);
    CHECK_THROWS_AS(retrieve_dense(idx, wrong, 3), std::invalid_argument);
    CHECK_THROWS_AS(DenseIndex(std::vector<std::string>{"a", "a"}, 2), std::invalid_argument);
}

TEST_CASE("dense retrieval equals an argsort oracle")
{
    auto idx = random_index(1000, 8, 5);
    Rng rng(10);
    for (int t = 0; t < 20; ++t) {
        auto q = random_vector(rng, 8);
        std::vector<std::size_t> order(idx.size());
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> s(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t c = 0; c < 8; ++c) {
                s[i] += q[c] * idx.row(i)[c];
            }
        }
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] > s[b]; });
        auto got = retrieve_dense(idx, q, 50);
        for (std::size_t r = 0; r < 50; ++r) {
            CHECK(got.entries[r].id == idx.ids()[order[r]]);
        }
    }
}

TEST_CASE("dense index build and file")
{
    Corpus corpus({Passage{"a", std::nullopt, "x y"}, Passage{"b", std::nullopt, "y x"}, Passage{"c", std::nullopt, "z"}});
    auto enc = EncoderParams::random(build_vocab(corpus), 6, 3);
    auto idx = build_dense_index(corpus, enc);
    CHECK(idx.size() == 3);
    CHECK(idx.dim() == 6);
    CHECK(std::equal(idx.row(0).begin(), idx.row(0).end(), idx.row(1).begin()));
    CHECK(bytes_of(build_dense_index(corpus, enc)) == bytes_of(idx));
    auto bytes = bytes_of(idx);
    CHECK(bytes.substr(0, 8) == "SPARIDX1");
    std::stringstream in(bytes);
    CHECK(DenseIndex::load(in) == idx);
    CHECK_THROWS_AS(build_dense_index(Corpus{}, enc), std::invalid_argument);

    auto one = build_dense_index(Corpus({Passage{"solo", std::nullopt, "x"}}), enc);
    CHECK(one.size() == 1);
}

TEST_CASE("nineteen candidate weights")
{
    auto c = weight_candidates();
    CHECK(c.size() == 19);
    CHECK(std::is_sorted(c.begin(), c.end()));
    CHECK(c.front() == doctest::Approx(0.1));
    CHECK(c[9] == 1.0);
    CHECK(c.back() == doctest::Approx(10.0));
    CHECK(std::set<double>(c.begin(), c.end()).size() == 19);
}

TEST_CASE("tuning ties go to the smallest weight")
{
    auto flat = tune_weight([](double) { return 0.42; });
    CHECK(flat.best_mu == doctest::Approx(0.1));
    CHECK(flat.table.size() == 19);
    auto peak = tune_weight([](double mu) { return -std::abs(std::log(mu / 2.5)); });
    CHECK(peak.best_mu == doctest::Approx(2.5));
    auto rising = tune_weight([](double mu) { return mu; });
    CHECK(rising.best_mu == doctest::Approx(10.0));
}

TEST_CASE("hybrid rerank policies")
{
    RankedList single{"q", {{"a", 2.0}}};
    auto doubled = hybrid_rerank(single, single, 1.0, 5);
    REQUIRE(doubled.size() == 1);
    CHECK(doubled.entries[0].score == 4.0);

    RankedList base{"q", {{"a", 3.0}}};
    RankedList lex{"q", {{"b", 5.0}}};
    auto zero_fill = hybrid_rerank(base, lex, 0.5, 5);
    REQUIRE(zero_fill.size() == 2);
    CHECK(zero_fill.entries[0].id == "a");
    CHECK(zero_fill.entries[1].score == 2.5);

    auto exact = hybrid_rerank(
        base, lex, 0.5, 5,
        MissingScorePolicy::recompute([](const std::string&) { return 1.0; }, [](const std::string&) { return 4.0; }));
    REQUIRE(exact.size() == 2);
    CHECK(exact.entries[0].score == 5.0);  // 3 + 0.5 * 4
    CHECK(exact.entries[1].score == 3.5);  // 1 + 0.5 * 5

    RankedList elsewhere{"other", {{"a", 1.0}}};
    CHECK_THROWS_AS(hybrid_rerank(base, elsewhere, 1.0, 5), std::invalid_argument);
}

TEST_CASE("exact-depth hybrid equals spar concat retrieval")
{
    synthetic::CollectionConfig cc;
    cc.passages = 120;
    auto col = synthetic::make_collection(cc);
    auto vocab = build_vocab(col.corpus);
    auto base = EncoderParams::random(vocab, 8, 1);
    auto lex = EncoderParams::random(vocab, 6, 2);
    auto bi = build_dense_index(col.corpus, base);
    auto li = build_dense_index(col.corpus, lex);
    auto spar_idx = build_spar_index(bi, li, FusionConfig{});
    SparModel model{&base, &lex, &spar_idx, FusionMode::concat, {}};
    const double mu = 1.7;
    auto n = col.corpus.size();
    for (const auto& q : synthetic::make_queries(col, 10, 6, 2)) {
        auto hybrid = hybrid_rerank(
            retrieve_with_encoder(base, bi, q, n), retrieve_with_encoder(lex, li, q, n), mu, 20,
            MissingScorePolicy::recompute([](const std::string&) { return 0.0; }, [](const std::string&) { return 0.0; }));
        auto direct = model.retrieve(q, mu, 20);
        REQUIRE(hybrid.size() == direct.size());
        for (std::size_t r = 0; r < direct.size(); ++r) {
            CHECK(hybrid.entries[r].id == direct.entries[r].id);
            CHECK(hybrid.entries[r].score == doctest::Approx(direct.entries[r].score).epsilon(1e-9));
        }
    }
}

TEST_CASE("small weights reproduce the base ranking where it is separated")
{
    synthetic::CollectionConfig cc;
    cc.passages = 150;
    auto col = synthetic::make_collection(cc);
    auto vocab = build_vocab(col.corpus);
    auto base = EncoderParams::random(vocab, 8, 11, Precision::f64, 1.0);
    auto lex = EncoderParams::random(vocab, 8, 12, Precision::f64, 1.0);
    auto bi = build_dense_index(col.corpus, base);
    auto spar_idx = build_spar_index(bi, build_dense_index(col.corpus, lex), FusionConfig{});
    SparModel model{&base, &lex, &spar_idx, FusionMode::concat, {}};
    for (const auto& q : synthetic::make_queries(col, 20, 6, 4)) {
        auto b = retrieve_with_encoder(base, bi, q, 30);
        auto s = model.retrieve(q, 1e-6, 30);
        for (std::size_t r = 0; r + 1 < b.size(); ++r) {
            bool separated = (r == 0 || b.entries[r - 1].score - b.entries[r].score > 1e-3) &&
                             b.entries[r].score - b.entries[r + 1].score > 1e-3;
            if (separated) {
                CHECK(s.entries[r].id == b.entries[r].id);
            }
        }
    }
}

TEST_CASE("scaling lexical queries against the weight leaves retrieval unchanged")
{
    Rng rng(12);
    auto base = random_index(300, 4, 7);
    auto lex = random_index(300, 4, 8);
    auto spar_idx = build_spar_index(base, lex, FusionConfig{});
    for (int t = 0; t < 20; ++t) {
        auto q = random_vector(rng, 4);
        auto ql = random_vector(rng, 4);
        const double mu = 0.75, c = 4.0;  // powers of two keep the products exact
        auto scaled = ql;
        for (auto& x : scaled) {
            x *= c;
        }
        auto a = retrieve_dense(spar_idx, fuse_query_vector(q, ql, FusionConfig{FusionMode::concat, mu}), 25);
        auto b = retrieve_dense(spar_idx, fuse_query_vector(q, scaled, FusionConfig{FusionMode::concat, mu / c}), 25);
        CHECK(a == b);
    }
}

TEST_CASE("mode and metric names")
{
    CHECK(parse_fusion_mode("concat") == FusionMode::concat);
    CHECK(to_string(FusionMode::sum) == "sum");
    CHECK_THROWS_AS(parse_fusion_mode("avg"), std::invalid_argument);
    CHECK(parse_tune_metric("mrr@10") == TuneMetric::mrr_at_10);
    CHECK(to_string(TuneMetric::acc_at_100) == "acc@100");
}
