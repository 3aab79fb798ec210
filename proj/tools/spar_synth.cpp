// spar_synth: writes the bundled demo collection. The output is a pure
// function of the seed, so the files in data/demo can be regenerated exactly.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "spar/evaluation.hpp"
#include "spar/imitation.hpp"
#include "spar/rng.hpp"
#include "spar/synthetic.hpp"

using namespace spar;

namespace {

QuerySet renamed(QuerySet queries, char prefix)
{
    for (auto& q : queries) {
        q.id[0] = prefix;
    }
    return queries;
}

void save_qrels(const std::filesystem::path& path, const QuerySet& queries)
{
    std::ofstream out(path);
    write_qrels(out, synthetic::source_qrels(queries));
}

// Supervised pairs for the demo base encoder: each generated question is
// paired with the passage it was drawn from, against random other passages.
std::vector<ImitationExample> supervised_pairs(
    const synthetic::Collection& collection, const QuerySet& questions, std::size_t negatives, std::uint64_t seed)
{
    Rng rng(mix_seed(seed, 0xba5e));
    const auto n = collection.corpus.size();
    std::vector<ImitationExample> out;
    for (const auto& q : questions) {
        ImitationExample ex{q, {*q.source_id}, {}};
        while (ex.negatives.size() < negatives) {
            const auto& id = collection.corpus[static_cast<std::size_t>(rng.below(n))].id;
            if (id != *q.source_id && std::find(ex.negatives.begin(), ex.negatives.end(), id) == ex.negatives.end()) {
                ex.negatives.push_back(id);
            }
        }
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Generate the synthetic demo collection"};
    std::filesystem::path out_dir = "data/demo";
    std::uint64_t seed = 2021;
    std::size_t passages = 200;
    std::size_t queries = 50;
    std::size_t dev = 50;
    std::size_t train_questions = 2000;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--passages", passages, "corpus size");
    app.add_option("--queries", queries, "test queries");
    app.add_option("--dev", dev, "dev queries for weight tuning");
    app.add_option("--train", train_questions, "supervised questions for the base encoder");
    CLI11_PARSE(app, argc, argv);

    synthetic::CollectionConfig cfg;
    cfg.passages = passages;
    cfg.seed = seed;
    auto collection = synthetic::make_collection(cfg);
    auto test = synthetic::make_queries(collection, queries, 8, mix_seed(seed, 1));
    auto dev_set = renamed(synthetic::make_queries(collection, dev, 8, mix_seed(seed, 2)), 'd');
    auto train_set = renamed(synthetic::make_queries(collection, train_questions, 8, mix_seed(seed, 3)), 't');

    std::filesystem::create_directories(out_dir);
    save_corpus(out_dir / "corpus.jsonl", collection.corpus);
    save_queries(out_dir / "queries.jsonl", test);
    save_qrels(out_dir / "qrels.txt", test);
    save_queries(out_dir / "dev_queries.jsonl", dev_set);
    save_qrels(out_dir / "dev_qrels.txt", dev_set);
    save_imitation_data(out_dir / "base_train.jsonl", supervised_pairs(collection, train_set, 5, seed));
    std::printf("wrote %zu passages, %zu queries, %zu dev queries, %zu base pairs to %s\n", collection.corpus.size(),
                test.size(), dev_set.size(), train_set.size(), out_dir.c_str());
    return 0;
}
