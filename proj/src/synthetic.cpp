#include "spar/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>

#include "spar/rng.hpp"

namespace spar::synthetic {

namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

// Base-70 syllable digits, at least three of them. Equal lengths encode
// distinct ids distinctly and different lengths cannot collide.
std::string word(std::size_t id)
{
    const std::size_t radix = kConsonants.size() * kVowels.size();
    std::string out;
    std::size_t digits = 0;
    do {
        auto syl = id % radix;
        out.insert(out.begin(), kVowels[syl % kVowels.size()]);
        out.insert(out.begin(), kConsonants[syl / kVowels.size()]);
        id /= radix;
        ++digits;
    } while (id > 0 || digits < 3);
    return out;
}

std::string capitalized(std::string s)
{
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') {
        s[0] = static_cast<char>(s[0] - 'a' + 'A');
    }
    return s;
}

std::string padded(std::string_view prefix, std::size_t i, int width)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*zu", width, i);
    return std::string(prefix) + buf;
}

class Zipf {
  public:
    explicit Zipf(std::size_t n) : cumulative_(n)
    {
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            acc += 1.0 / static_cast<double>(r + 1);
            cumulative_[r] = acc;
        }
    }

    std::size_t draw(Rng& rng) const
    {
        double u = rng.uniform() * cumulative_.back();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
    }

  private:
    std::vector<double> cumulative_;
};

std::string join_sentence(const std::vector<std::string>& tokens)
{
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += i == 0 ? capitalized(tokens[i]) : tokens[i];
    }
    return out + ".";
}

struct Sampler {
    const CollectionConfig& cfg;
    Zipf background;
    Zipf topical;

    std::string token(const PassageProfile& profile, Rng& rng) const
    {
        double u = rng.uniform();
        if (u < cfg.entity_weight) {
            auto n = profile.doc_entities.size() + profile.passage_entities.size();
            if (n > 0) {
                auto j = static_cast<std::size_t>(rng.below(n));
                return j < profile.doc_entities.size() ? profile.doc_entities[j]
                                                       : profile.passage_entities[j - profile.doc_entities.size()];
            }
        } else if (u < cfg.entity_weight + cfg.topic_weight) {
            return word(cfg.background_vocab + profile.topic * cfg.topic_vocab + topical.draw(rng));
        }
        return word(background.draw(rng));
    }
};

}  // namespace

Collection make_collection(const CollectionConfig& cfg)
{
    if (cfg.passages == 0 || cfg.passages_per_doc == 0 || cfg.sentences_per_passage == 0 ||
        cfg.sentence_length == 0 || cfg.background_vocab == 0 || cfg.topics == 0 || cfg.topic_vocab == 0) {
        throw std::invalid_argument("collection sizes must be positive");
    }
    Rng rng(mix_seed(cfg.seed, 0xc011));
    Sampler sampler{cfg, Zipf(cfg.background_vocab), Zipf(cfg.topic_vocab)};
    std::size_t next_entity = cfg.background_vocab + cfg.topics * cfg.topic_vocab;

    Collection out;
    out.config = cfg;
    std::vector<Passage> passages;
    PassageProfile doc;
    std::string title;
    for (std::size_t i = 0; i < cfg.passages; ++i) {
        if (i % cfg.passages_per_doc == 0) {
            doc = PassageProfile{static_cast<std::size_t>(rng.below(cfg.topics)), {}, {}};
            for (std::size_t e = 0; e < cfg.doc_entities; ++e) {
                doc.doc_entities.push_back(word(next_entity++));
            }
            title = capitalized(doc.doc_entities.empty() ? word(next_entity++) : doc.doc_entities[0]);
        }
        PassageProfile profile = doc;
        for (std::size_t e = 0; e < cfg.passage_entities; ++e) {
            profile.passage_entities.push_back(word(next_entity++));
        }

        std::vector<std::vector<std::string>> sentences(cfg.sentences_per_passage);
        for (auto& s : sentences) {
            for (std::size_t t = 0; t < cfg.sentence_length; ++t) {
                s.push_back(sampler.token(profile, rng));
            }
        }
        // every passage mentions its own entities at least once
        for (std::size_t e = 0; e < profile.passage_entities.size(); ++e) {
            auto& s = sentences[e % sentences.size()];
            s[static_cast<std::size_t>(rng.below(s.size()))] = profile.passage_entities[e];
        }
        std::string text;
        for (const auto& s : sentences) {
            if (!text.empty()) {
                text += ' ';
            }
            text += join_sentence(s);
        }
        passages.push_back(Passage{padded("p", i, 5), title, std::move(text)});
        out.profiles.push_back(std::move(profile));
    }
    out.corpus = Corpus(std::move(passages));
    return out;
}

QuerySet make_queries(const Collection& collection, std::size_t count, std::size_t length, std::uint64_t seed)
{
    if (length == 0) {
        throw std::invalid_argument("query length must be positive");
    }
    const auto& cfg = collection.config;
    Sampler sampler{cfg, Zipf(cfg.background_vocab), Zipf(cfg.topic_vocab)};
    Rng rng(mix_seed(seed, 0x9e5));
    QuerySet out;
    for (std::size_t i = 0; i < count; ++i) {
        auto pi = static_cast<std::size_t>(rng.below(collection.corpus.size()));
        const auto& passage = collection.corpus[pi];
        const auto& profile = collection.profiles[pi];

        std::vector<std::string> tokens;
        for (std::size_t t = 0; t < length; ++t) {
            tokens.push_back(sampler.token(profile, rng));
        }
        // Ask about one entity; the answer is another one when there is one.
        std::optional<std::vector<std::string>> answers;
        const auto& ents = profile.passage_entities;
        if (!ents.empty()) {
            tokens[static_cast<std::size_t>(rng.below(length))] = ents[0];
            answers = std::vector<std::string>{ents.size() > 1 ? ents[1] : ents[0]};
        }
        auto text = join_sentence(tokens);
        text.back() = '?';
        out.push_back(Query{padded("q", i, 5), std::move(text), std::move(answers), passage.id});
    }
    return out;
}

std::map<std::string, std::set<std::string>> source_qrels(const QuerySet& queries)
{
    std::map<std::string, std::set<std::string>> out;
    for (const auto& q : queries) {
        if (q.source_id) {
            out[q.id].insert(*q.source_id);
        }
    }
    return out;
}

FusionFixture make_fusion_fixture(const FusionFixtureConfig& cfg)
{
    if (cfg.concepts < 2 || cfg.passages > cfg.concepts * (cfg.concepts - 1) / 2) {
        throw std::invalid_argument("not enough concept pairs for one unique pair per passage");
    }
    if (cfg.base_dim < cfg.concepts) {
        throw std::invalid_argument("base dimension must hold one basis vector per concept");
    }
    const auto slots = cfg.sentences_per_passage * cfg.sentence_length;
    if (cfg.sentence_length < 2 || slots < cfg.sentences_per_passage + 2) {
        throw std::invalid_argument("passages need room for two concepts and a rare token in every sentence");
    }
    if (cfg.dev_queries > cfg.passages) {
        throw std::invalid_argument("at most one dev query per passage");
    }
    auto concept_word = [&](std::size_t c) { return word(cfg.background_vocab + c); };
    auto synonym = [&](std::size_t c) { return word(cfg.background_vocab + cfg.concepts + c); };
    auto rare = [&](std::size_t i) { return word(cfg.background_vocab + 2 * cfg.concepts + i); };

    Rng rng(mix_seed(cfg.seed, 0xf00));
    Zipf background(cfg.background_vocab);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < cfg.concepts; ++a) {
        for (std::size_t b = a + 1; b < cfg.concepts; ++b) {
            pairs.emplace_back(a, b);
        }
    }
    rng.shuffle(std::span(pairs));

    std::vector<Passage> passages;
    for (std::size_t i = 0; i < cfg.passages; ++i) {
        std::vector<std::string> tokens(slots);
        for (auto& t : tokens) {
            t = word(background.draw(rng));
        }
        // The rare token opens a random slot of every sentence, the way a
        // passage keeps naming its subject; the concepts take two other slots.
        std::vector<std::size_t> free;
        for (std::size_t s = 0; s < cfg.sentences_per_passage; ++s) {
            auto at = s * cfg.sentence_length + static_cast<std::size_t>(rng.below(cfg.sentence_length));
            tokens[at] = rare(i);
            for (std::size_t t = s * cfg.sentence_length; t < (s + 1) * cfg.sentence_length; ++t) {
                if (t != at) {
                    free.push_back(t);
                }
            }
        }
        for (std::size_t k = 0; k < 2; ++k) {
            std::swap(free[k], free[k + static_cast<std::size_t>(rng.below(free.size() - k))]);
        }
        tokens[free[0]] = concept_word(pairs[i].first);
        tokens[free[1]] = concept_word(pairs[i].second);

        std::string text;
        for (std::size_t s = 0; s < cfg.sentences_per_passage; ++s) {
            std::vector<std::string> sentence(
                tokens.begin() + static_cast<std::ptrdiff_t>(s * cfg.sentence_length),
                tokens.begin() + static_cast<std::ptrdiff_t>((s + 1) * cfg.sentence_length));
            if (!text.empty()) {
                text += ' ';
            }
            text += join_sentence(sentence);
        }
        passages.push_back(Passage{padded("c", i, 5), std::nullopt, std::move(text)});
    }

    FusionFixture out;
    out.corpus = Corpus(std::move(passages));

    std::vector<std::size_t> targets(cfg.passages);
    std::iota(targets.begin(), targets.end(), 0);
    rng.shuffle(std::span(targets));
    auto fillers = [&](std::vector<std::string>& tokens) {
        for (std::size_t f = 0; f < cfg.filler_per_query; ++f) {
            tokens.push_back(word(background.draw(rng)));
        }
        rng.shuffle(std::span(tokens));
        return join_sentence(tokens);
    };
    const auto half = cfg.dev_queries / 2;
    for (std::size_t q = 0; q < cfg.dev_queries; ++q) {
        auto target = targets[q];
        const auto& pid = out.corpus[target].id;
        std::vector<std::string> tokens;
        if (q < half) {
            tokens.push_back(rare(target));
            out.lexical_queries.push_back(Query{padded("lex", q, 4), fillers(tokens), std::nullopt, pid});
            out.qrels[out.lexical_queries.back().id].insert(pid);
        } else {
            tokens.push_back(synonym(pairs[target].first));
            tokens.push_back(synonym(pairs[target].second));
            out.semantic_queries.push_back(Query{padded("sem", q - half, 4), fillers(tokens), std::nullopt, pid});
            out.qrels[out.semantic_queries.back().id].insert(pid);
        }
    }

    auto vocab = build_vocab(out.corpus);
    for (std::size_t c = 0; c < cfg.concepts; ++c) {
        vocab.push_back(synonym(c));
    }
    std::sort(vocab.begin(), vocab.end());
    out.base = EncoderParams(std::move(vocab), cfg.base_dim, Precision::f32);
    for (std::size_t c = 0; c < cfg.concepts; ++c) {
        for (const auto& w : {concept_word(c), synonym(c)}) {
            auto row = *out.base.row_of(w);
            out.base.query_embedding().row(row)[c] = cfg.base_scale;
            out.base.passage_embedding().row(row)[c] = cfg.base_scale;
        }
    }
    return out;
}

}  // namespace spar::synthetic
