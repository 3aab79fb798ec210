#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "spar/corpus.hpp"
#include "spar/encoder.hpp"

// Seeded generators for test and demo collections. Words are pronounceable
// syllable strings; every word class draws from its own id range, so a rare
// token never collides with a common one.
namespace spar::synthetic {

/// Topic-model collection: documents of consecutive passages sharing a title,
/// a topic and a handful of document entities; each passage adds its own
/// entities. Tokens mix Zipfian background words, the topic's words and the
/// entities.
struct CollectionConfig {
    std::size_t passages = 200;
    std::size_t passages_per_doc = 5;
    std::size_t sentences_per_passage = 4;
    std::size_t sentence_length = 10;
    std::size_t background_vocab = 2000;
    std::size_t topics = 20;
    std::size_t topic_vocab = 50;
    std::size_t doc_entities = 4;
    std::size_t passage_entities = 2;
    double topic_weight = 0.3;
    double entity_weight = 0.15;
    std::uint64_t seed = 0;
};

struct PassageProfile {
    std::size_t topic = 0;
    std::vector<std::string> doc_entities;
    std::vector<std::string> passage_entities;
};

struct Collection {
    CollectionConfig config;
    Corpus corpus;
    std::vector<PassageProfile> profiles;  // aligned with the corpus
};

Collection make_collection(const CollectionConfig& cfg);

/// Fresh sentences drawn from the generative profile of randomly chosen
/// passages, so none of them occurs in the corpus. source_id names the
/// passage and the single answer is one of its passage entities.
QuerySet make_queries(const Collection& collection, std::size_t count, std::size_t length, std::uint64_t seed);

/// Judgments naming each query's source passage.
std::map<std::string, std::set<std::string>> source_qrels(const QuerySet& queries);

/// A collection built so that half the dev queries can only be matched
/// lexically and half only semantically. Every passage carries a unique rare
/// token, named once per sentence, and a unique pair of concept words. Lexical queries name the rare
/// token; semantic queries name the concepts through synonyms that never occur
/// in the corpus. The planted base encoder maps each concept word and its
/// synonym to the same basis vector and every other token to zero.
struct FusionFixtureConfig {
    std::size_t passages = 400;
    std::size_t concepts = 40;
    std::size_t background_vocab = 500;
    std::size_t sentences_per_passage = 5;
    std::size_t sentence_length = 10;
    std::size_t dev_queries = 200;       // split evenly between the halves
    std::size_t filler_per_query = 2;
    std::size_t base_dim = 64;           // at least `concepts`
    double base_scale = 1.0;             // length of the planted vectors
    std::uint64_t seed = 0;
};

struct FusionFixture {
    Corpus corpus;
    QuerySet lexical_queries;
    QuerySet semantic_queries;
    std::map<std::string, std::set<std::string>> qrels;  // both halves
    EncoderParams base;
};

FusionFixture make_fusion_fixture(const FusionFixtureConfig& cfg);

}  // namespace spar::synthetic
