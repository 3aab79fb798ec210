// spar: command-line driver for the retrieval pipeline. Every subcommand reads
// a flat config (--config) plus flag overrides and writes its artifact with a
// manifest beside it.
//
// Exit codes: 0 success, 1 configuration error, 2 data format error.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "spar/corpus.hpp"
#include "spar/dense_index.hpp"
#include "spar/evaluation.hpp"
#include "spar/fusion.hpp"
#include "spar/imitation.hpp"
#include "spar/parallel.hpp"
#include "spar/run_file.hpp"
#include "spar/sparse.hpp"
#include "spar/trainer.hpp"

using namespace spar;
using cli::Config;
using cli::KeyKind;
using cli::KeySpec;

namespace {

constexpr std::string_view kVersion = "spar 1.0.0";

// ---------------------------------------------------------------------------
// Shared key groups

const std::vector<KeySpec> kCommon{
    {"threads", "0", "worker cap for parallel stages (0 = SPAR_THREADS or all cores)"},
};

const std::vector<KeySpec> kTokenizer{
    {"sparse.lowercase", "true", "lowercase tokens"},
    {"sparse.stopwords", "", "file with one stopword per line", KeyKind::input},
};

const std::vector<KeySpec> kBm25{
    {"sparse.k1", "0.9", "BM25 k1"},
    {"sparse.b", "0.4", "BM25 b"},
};

const std::vector<KeySpec> kJudgments{
    {"judgments.mode", "qrels", "qrels or answers"},
    {"judgments.qrels", "", "qrels file (qrels mode)", KeyKind::input},
    {"judgments.corpus", "", "corpus for answer matching (answers mode)", KeyKind::input},
};

std::vector<KeySpec> join(std::initializer_list<std::vector<KeySpec>> groups)
{
    std::vector<KeySpec> out;
    for (const auto& g : groups) {
        out.insert(out.end(), g.begin(), g.end());
    }
    return out;
}

TokenizerConfig tokenizer_from(const Config& c)
{
    TokenizerConfig t;
    t.lowercase = c.flag("sparse.lowercase");
    if (c.set("sparse.stopwords")) {
        std::ifstream in(c.input("sparse.stopwords"));
        std::string w;
        while (in >> w) {
            for (auto& tok : tokenize(w, TokenizerConfig{t.lowercase, {}})) {
                t.stopwords.insert(std::move(tok));
            }
        }
    }
    return t;
}

Bm25Params bm25_from(const Config& c)
{
    Bm25Params p{c.real("sparse.k1"), c.real("sparse.b")};
    validate(p);
    return p;
}

Precision precision_from(const std::string& name)
{
    if (name == "f32") {
        return Precision::f32;
    }
    if (name == "f64") {
        return Precision::f64;
    }
    throw ConfigError("precision must be f32 or f64, got '" + name + "'");
}

Judgments judgments_from(const Config& c, const QuerySet& queries)
{
    const auto& mode = c.str("judgments.mode");
    if (mode == "qrels") {
        return load_qrels(c.input("judgments.qrels"));
    }
    if (mode == "answers") {
        return Judgments::from_answers(queries, load_corpus(c.input("judgments.corpus")));
    }
    throw ConfigError("judgments.mode must be qrels or answers, got '" + mode + "'");
}

// Round-trippable decimal form of a double.
std::string exact(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << text;
}

// ---------------------------------------------------------------------------
// Subcommands

struct Command {
    std::string name;
    std::string help;
    std::vector<KeySpec> keys;
    std::function<void(const Config&)> run;
};

void build_sparse_index_cmd(const Config& c)
{
    auto corpus = load_corpus(c.input("corpus.path"));
    auto index = build_inverted_index(corpus, tokenizer_from(c));
    auto out = c.output("output.index");
    index.save(out);
    cli::write_manifest(out, "build-sparse-index", c, kVersion);
    std::printf("indexed %zu passages, %zu terms -> %s\n", index.doc_count(), index.term_count(), out.c_str());
}

void make_queries_cmd(const Config& c)
{
    auto corpus = load_corpus(c.input("corpus.path"));
    SamplingConfig s{c.real("sampling.decay_tau"), c.count("sampling.min_per_passage"), c.seed("sampling.seed")};
    auto queries = sample_training_queries(corpus, s);
    auto out = c.output("output.queries");
    save_queries(out, queries);
    cli::write_manifest(out, "make-queries", c, kVersion);
    std::printf("sampled %zu training queries -> %s\n", queries.size(), out.c_str());
}

void make_imitation_data_cmd(const Config& c)
{
    auto index = InvertedIndex::load(c.input("sparse.index"));
    auto teacher = bm25_teacher(index, bm25_from(c));
    auto queries = load_queries(c.input("queries.path"));
    ImitationConfig ic{c.count("imitation.depth"), c.count("imitation.positives"), c.count("imitation.negatives")};
    auto data = generate_imitation_data(teacher, queries, ic);
    auto out = c.output("output.data");
    save_imitation_data(out, data.examples);
    cli::write_manifest(out, "make-imitation-data", c, kVersion);
    std::printf("labeled %zu queries (%zu dropped) -> %s\n", data.examples.size(), data.dropped, out.c_str());

    if (c.set("dev.queries")) {
        auto dev = load_queries(c.input("dev.queries"));
        auto pairs = generate_validation_pairs(teacher, dev, ic.depth);
        auto vout = c.output("output.validation");
        save_surrogate_pairs(vout, pairs.pairs);
        cli::write_manifest(vout, "make-imitation-data", c, kVersion);
        std::printf("built %zu validation pairs (%zu dropped) -> %s\n", pairs.pairs.size(), pairs.dropped, vout.c_str());
    }
}

void train_cmd(const Config& c)
{
    auto corpus = load_corpus(c.input("corpus.path"));
    auto data = load_imitation_data(c.input("train.data"));
    SurrogatePairs validation;
    if (c.set("train.validation")) {
        validation = load_surrogate_pairs(c.input("train.validation"));
    }
    TrainerConfig t;
    t.learning_rate = c.real("trainer.lr");
    t.batch_size = c.count("trainer.batch");
    t.epochs = c.count("trainer.epochs");
    t.seed = c.seed("trainer.seed");
    t.mode = parse_trainer_mode(c.str("trainer.mode"));
    t.dim = c.count("trainer.dim");
    t.init_scale = c.real("trainer.init_scale");
    t.precision = precision_from(c.str("trainer.precision"));
    t.initial_mu = c.real("trainer.initial_mu");
    if (t.mode == TrainerMode::init_from_model) {
        t.initial_model = EncoderParams::load(c.input("trainer.init_model"));
    }
    if (t.mode == TrainerMode::joint_frozen_lexical) {
        t.frozen_lexical = EncoderParams::load(c.input("trainer.lexical_model"));
    }
    auto tokenizer = tokenizer_from(c);
    auto result = train(t, corpus, data, validation, tokenizer);

    auto out = c.output("output.model");
    result.params.save(out);
    cli::write_manifest(out, "train", c, kVersion);

    std::ostringstream history;
    if (result.initial_surrogate_mrr) {
        history << "epoch=0, surrogate_mrr=" << *result.initial_surrogate_mrr << "\n";
    }
    for (const auto& e : result.history) {
        history << "epoch=" << e.epoch << ", loss=" << e.loss;
        if (e.surrogate_mrr) {
            history << ", surrogate_mrr=" << *e.surrogate_mrr;
        }
        history << "\n";
    }
    if (result.mu) {
        history << "mu=" << *result.mu << "\n";
    }
    auto hist_path = out;
    hist_path += ".history";
    write_text(hist_path, history.str());
    std::cout << history.str();
    std::printf("model (V=%zu, d=%zu) -> %s\n", result.params.vocab_size(), result.params.dim(), out.c_str());
}

void build_dense_index_cmd(const Config& c)
{
    auto corpus = load_corpus(c.input("corpus.path"));
    auto model = EncoderParams::load(c.input("model.path"));
    auto index = build_dense_index(corpus, model, tokenizer_from(c));
    auto out = c.output("output.index");
    index.save(out);
    cli::write_manifest(out, "build-dense-index", c, kVersion);
    std::printf("encoded %zu passages (d=%zu) -> %s\n", index.size(), index.dim(), out.c_str());
}

void fuse_cmd(const Config& c)
{
    auto base = DenseIndex::load(c.input("base.index"));
    auto lex = DenseIndex::load(c.input("lexical.index"));
    auto fused = build_spar_index(base, lex, FusionConfig{parse_fusion_mode(c.str("fusion.mode")), 1.0});
    auto out = c.output("output.index");
    fused.save(out);
    cli::write_manifest(out, "fuse", c, kVersion);
    std::printf("fused index (d=%zu) -> %s\n", fused.dim(), out.c_str());
}

// SPAR model pieces loaded from config, kept alive together.
struct LoadedSpar {
    EncoderParams base;
    EncoderParams lexical;
    DenseIndex index;
    SparModel model;
};

std::unique_ptr<LoadedSpar> load_spar(const Config& c)
{
    auto s = std::make_unique<LoadedSpar>();
    s->base = EncoderParams::load(c.input("base.model"));
    s->lexical = EncoderParams::load(c.input("lexical.model"));
    s->index = DenseIndex::load(c.input("spar.index"));
    s->model = SparModel{&s->base, &s->lexical, &s->index, parse_fusion_mode(c.str("fusion.mode")), tokenizer_from(c)};
    return s;
}

WeightTuning tune_from(const Config& c, const SparModel& model)
{
    auto dev = load_queries(c.input("dev.queries"));
    auto judgments = judgments_from(c, dev);
    return tune_weight(dev, judgments, model, parse_tune_metric(c.str("tune.metric")));
}

void retrieve_cmd(const Config& c)
{
    auto queries = load_queries(c.input("queries.path"));
    const auto k = c.count("k");
    const auto& kind = c.str("retriever");
    auto tokenizer = tokenizer_from(c);
    std::vector<RankedList> lists(queries.size());
    std::string note;
    std::map<std::string, std::string> results;

    if (kind == "bm25") {
        auto index = InvertedIndex::load(c.input("sparse.index"));
        lists = retrieve_sparse_batch(index, queries, k, bm25_from(c));
    } else if (kind == "dense") {
        auto model = EncoderParams::load(c.input("model.path"));
        auto index = DenseIndex::load(c.input("dense.index"));
        parallel_for(queries.size(), [&](std::size_t i) {
            lists[i] = retrieve_with_encoder(model, index, queries[i], k, tokenizer);
        });
    } else if (kind == "spar") {
        auto spar = load_spar(c);
        double mu = 0.0;
        if (c.str("fusion.mu") == "tune") {
            mu = tune_from(c, spar->model).best_mu;
            note = "tuned mu=" + std::to_string(mu);
            results["fusion.mu"] = exact(mu);
        } else {
            mu = c.real("fusion.mu");
        }
        parallel_for(queries.size(), [&](std::size_t i) { lists[i] = spar->model.retrieve(queries[i], mu, k); });
    } else if (kind == "hybrid") {
        // Base dense retriever plus the BM25 teacher, fused by reranking.
        auto model = EncoderParams::load(c.input("base.model"));
        auto dense = DenseIndex::load(c.input("base.index"));
        auto sparse = InvertedIndex::load(c.input("sparse.index"));
        auto bm25 = bm25_from(c);
        const double mu = c.real("fusion.mu");
        const auto depth = c.count("hybrid.depth");
        const auto& policy_name = c.str("hybrid.policy");
        if (policy_name != "zero" && policy_name != "recompute") {
            throw ConfigError("hybrid.policy must be zero or recompute, got '" + policy_name + "'");
        }
        std::unordered_map<std::string, std::size_t> row_of;
        for (std::size_t i = 0; i < dense.size(); ++i) {
            row_of.emplace(dense.ids()[i], i);
        }
        parallel_for(queries.size(), [&](std::size_t i) {
            const auto& q = queries[i];
            auto qvec = encode_query(model, tokenize(q.text, tokenizer));
            auto qtokens = tokenize(q.text, sparse.tokenizer());
            auto policy = policy_name == "zero"
                              ? MissingScorePolicy::zero()
                              : MissingScorePolicy::recompute(
                                    [&](const std::string& id) { return dot(qvec, dense.row(row_of.at(id))); },
                                    [&](const std::string& id) { return bm25_score(sparse, qtokens, id, bm25); });
            lists[i] = hybrid_rerank(
                retrieve_dense(dense, qvec, depth, q.id), retrieve_sparse(sparse, q, depth, bm25), mu, k, policy);
            lists[i].query_id = q.id;
        });
    } else {
        throw ConfigError("retriever must be bm25, dense, spar or hybrid, got '" + kind + "'");
    }

    auto out = c.output("output.run");
    save_trec_run(out, lists, c.set("run.tag") ? c.str("run.tag") : kind);
    cli::write_manifest(out, "retrieve", c, kVersion, results);
    std::printf("retrieved %zu queries with %s%s -> %s\n", queries.size(), kind.c_str(),
                note.empty() ? "" : (" (" + note + ")").c_str(), out.c_str());
}

void tune_weight_cmd(const Config& c)
{
    auto spar = load_spar(c);
    auto tuning = tune_from(c, spar->model);
    std::ostringstream table;
    table << "mu          " << c.str("tune.metric") << "\n";
    for (const auto& [mu, value] : tuning.table) {
        char line[96];
        std::snprintf(line, sizeof line, "%-11.6f %.6f\n", mu, value);
        table << line;
    }
    char best[64];
    std::snprintf(best, sizeof best, "best_mu=%.6f\n", tuning.best_mu);
    table << best;
    auto out = c.output("output.table");
    write_text(out, table.str());
    cli::write_manifest(out, "tune-weight", c, kVersion, {{"fusion.mu", exact(tuning.best_mu)}});
    std::cout << table.str();
}

// "acc@20" -> ("acc", 20)
std::pair<std::string, std::size_t> parse_metric(const std::string& spec)
{
    auto at = spec.find('@');
    if (at == std::string::npos) {
        throw ConfigError("metric '" + spec + "' must look like name@k");
    }
    auto name = spec.substr(0, at);
    std::size_t k = 0;
    try {
        k = std::stoul(spec.substr(at + 1));
    } catch (const std::logic_error&) {
        throw ConfigError("metric '" + spec + "' has a bad cutoff");
    }
    if (name != "acc" && name != "mrr" && name != "recall") {
        throw ConfigError("unknown metric '" + name + "' (expected acc, mrr or recall)");
    }
    return {name, k};
}

void evaluate_cmd(const Config& c)
{
    auto run = load_trec_run(c.input("run.path"));
    QuerySet queries;
    if (c.set("queries.path")) {
        queries = load_queries(c.input("queries.path"));
    }
    auto judgments = judgments_from(c, queries);
    std::vector<MetricValue> values;
    for (const auto& m : c.list("metrics")) {
        auto [name, k] = parse_metric(m);
        double v = name == "acc" ? accuracy_at_k(run, judgments, k)
                   : name == "mrr" ? mrr_at_k(run, judgments, k)
                                   : recall_at_k(run, judgments, k);
        values.push_back(MetricValue{name, k, v});
    }
    auto out = c.output("output.report");
    auto text = format_metric_table(values) + "\n" + format_metric_lines(values);
    write_text(out, text);
    cli::write_manifest(out, "evaluate", c, kVersion);
    std::cout << text;
}

void stress_test_cmd(const Config& c)
{
    auto queries = load_queries(c.input("queries.path"));
    auto judgments = judgments_from(c, queries);
    auto sparse = InvertedIndex::load(c.input("sparse.index"));
    auto bm25 = bm25_from(c);
    auto tokenizer = tokenizer_from(c);
    std::vector<NamedRetriever> retrievers{
        {"bm25", [&](const Query& q, std::size_t k) { return retrieve_sparse(sparse, q, k, bm25); }}};

    EncoderParams lexical;
    DenseIndex lexical_index;
    if (c.set("lexical.model")) {
        lexical = EncoderParams::load(c.input("lexical.model"));
        lexical_index = DenseIndex::load(c.input("lexical.index"));
        retrievers.push_back(NamedRetriever{"lexical-model", [&](const Query& q, std::size_t k) {
                                                return retrieve_with_encoder(lexical, lexical_index, q, k, tokenizer);
                                            }});
    }
    if (c.flag("stress.mock")) {
        retrievers.push_back(position_weighted_bm25(sparse, bm25));
    }
    std::vector<std::size_t> ks;
    for (const auto& k : c.list("stress.k")) {
        try {
            ks.push_back(std::stoul(k));
        } catch (const std::logic_error&) {
            throw ConfigError("stress.k entries must be integers, got '" + k + "'");
        }
    }
    auto rows = shuffle_stress_test(retrievers, queries, judgments, ks, c.seed("stress.seed"));
    auto text = format_stress_table(rows) + "\n" + format_stress_lines(rows);
    auto out = c.output("output.report");
    write_text(out, text);
    cli::write_manifest(out, "stress-test", c, kVersion);
    std::cout << text;
}

std::vector<Command> commands()
{
    return {
        {"build-sparse-index", "tokenize a corpus into a BM25 inverted index",
         join({kCommon, kTokenizer,
               {{"corpus.path", "", "corpus JSONL", KeyKind::input}, {"output.index", "", "index file", KeyKind::output}}}),
         build_sparse_index_cmd},
        {"make-queries", "sample sentence queries from a corpus",
         join({kCommon,
               {{"corpus.path", "", "corpus JSONL", KeyKind::input},
                {"sampling.decay_tau", "1.0", "positional decay of extra sentences"},
                {"sampling.min_per_passage", "1", "sentences guaranteed per passage"},
                {"sampling.seed", "0", "sampling seed"},
                {"output.queries", "", "query JSONL", KeyKind::output}}}),
         make_queries_cmd},
        {"make-imitation-data", "label queries with the BM25 teacher",
         join({kCommon, kBm25,
               {{"sparse.index", "", "BM25 index", KeyKind::input},
                {"queries.path", "", "training queries", KeyKind::input},
                {"imitation.depth", "100", "teacher depth K"},
                {"imitation.positives", "10", "positives per query n_p"},
                {"imitation.negatives", "5", "negatives per query n_n"},
                {"dev.queries", "", "dev queries for validation pairs", KeyKind::input},
                {"output.data", "", "imitation data JSONL", KeyKind::output},
                {"output.validation", "", "validation pairs JSONL", KeyKind::output}}}),
         make_imitation_data_cmd},
        {"train", "train a bi-encoder on imitation data",
         join({kCommon, kTokenizer,
               {{"corpus.path", "", "corpus JSONL", KeyKind::input},
                {"train.data", "", "imitation data JSONL", KeyKind::input},
                {"train.validation", "", "validation pairs JSONL", KeyKind::input},
                {"trainer.lr", "0.01", "SGD learning rate"},
                {"trainer.batch", "32", "batch size"},
                {"trainer.epochs", "1", "epochs"},
                {"trainer.seed", "0", "seed"},
                {"trainer.mode", "standard", "standard, init_from_model or joint_frozen_lexical"},
                {"trainer.dim", "64", "embedding dimension"},
                {"trainer.init_scale", "0.1", "uniform init half-width"},
                {"trainer.precision", "f32", "f32 or f64 storage"},
                {"trainer.init_model", "", "starting model (init_from_model)", KeyKind::input},
                {"trainer.lexical_model", "", "frozen lexical model (joint_frozen_lexical)", KeyKind::input},
                {"trainer.initial_mu", "1.0", "starting weight (joint_frozen_lexical)"},
                {"output.model", "", "model file", KeyKind::output}}}),
         train_cmd},
        {"build-dense-index", "encode every passage with a model",
         join({kCommon, kTokenizer,
               {{"corpus.path", "", "corpus JSONL", KeyKind::input},
                {"model.path", "", "model file", KeyKind::input},
                {"output.index", "", "dense index file", KeyKind::output}}}),
         build_dense_index_cmd},
        {"fuse", "concatenate or sum a base and a lexical index",
         join({kCommon,
               {{"base.index", "", "base dense index", KeyKind::input},
                {"lexical.index", "", "lexical dense index", KeyKind::input},
                {"fusion.mode", "concat", "concat or sum"},
                {"output.index", "", "fused index file", KeyKind::output}}}),
         fuse_cmd},
        {"retrieve", "write a TREC run with bm25, dense, spar or hybrid retrieval",
         join({kCommon, kTokenizer, kBm25, kJudgments,
               {{"retriever", "bm25", "bm25, dense, spar or hybrid"},
                {"queries.path", "", "queries JSONL", KeyKind::input},
                {"k", "100", "results per query"},
                {"sparse.index", "", "BM25 index (bm25, hybrid)", KeyKind::input},
                {"model.path", "", "model (dense)", KeyKind::input},
                {"dense.index", "", "dense index (dense)", KeyKind::input},
                {"base.model", "", "base model (spar, hybrid)", KeyKind::input},
                {"base.index", "", "base dense index (hybrid)", KeyKind::input},
                {"lexical.model", "", "lexical model (spar)", KeyKind::input},
                {"spar.index", "", "fused index (spar)", KeyKind::input},
                {"fusion.mode", "concat", "concat or sum (spar)"},
                {"fusion.mu", "1.0", "lexical weight, or 'tune' (spar)"},
                {"tune.metric", "acc@100", "tuning metric when fusion.mu = tune"},
                {"dev.queries", "", "dev queries when fusion.mu = tune", KeyKind::input},
                {"hybrid.depth", "100", "candidates per retriever (hybrid)"},
                {"hybrid.policy", "zero", "missing-score policy: zero or recompute (hybrid)"},
                {"run.tag", "", "run tag (defaults to the retriever)"},
                {"output.run", "", "TREC run file", KeyKind::output}}}),
         retrieve_cmd},
        {"tune-weight", "grid-search the lexical weight over the 19 candidates",
         join({kCommon, kTokenizer, kJudgments,
               {{"base.model", "", "base model", KeyKind::input},
                {"lexical.model", "", "lexical model", KeyKind::input},
                {"spar.index", "", "fused index", KeyKind::input},
                {"fusion.mode", "concat", "concat or sum"},
                {"tune.metric", "acc@100", "acc@100 or mrr@10"},
                {"dev.queries", "", "dev queries", KeyKind::input},
                {"output.table", "", "tuning table", KeyKind::output}}}),
         tune_weight_cmd},
        {"evaluate", "score a run against judgments",
         join({kCommon, kJudgments,
               {{"run.path", "", "TREC run", KeyKind::input},
                {"queries.path", "", "queries (answers mode)", KeyKind::input},
                {"metrics", "acc@20,acc@100,mrr@10", "comma-separated name@k list (acc, mrr, recall)"},
                {"output.report", "", "report file", KeyKind::output}}}),
         evaluate_cmd},
        {"stress-test", "Acc@k on original vs token-shuffled queries",
         join({kCommon, kTokenizer, kBm25, kJudgments,
               {{"queries.path", "", "queries JSONL", KeyKind::input},
                {"sparse.index", "", "BM25 index", KeyKind::input},
                {"lexical.model", "", "lexical model to include", KeyKind::input},
                {"lexical.index", "", "its dense index", KeyKind::input},
                {"stress.mock", "true", "include the order-sensitive mock retriever"},
                {"stress.k", "20,100", "cutoffs"},
                {"stress.seed", "0", "shuffle seed"},
                {"output.report", "", "report file", KeyKind::output}}}),
         stress_test_cmd},
    };
}

int fail(int code, std::string_view kind, const std::string& message)
{
    std::string flat = message;
    std::replace(flat.begin(), flat.end(), '\n', ' ');
    std::fprintf(stderr, "error=%.*s message=%s\n", static_cast<int>(kind.size()), kind.data(), flat.c_str());
    return code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"SPAR retrieval toolkit"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    auto cmds = commands();
    std::vector<std::map<std::string, std::string>> flag_values(cmds.size());
    std::vector<std::string> config_paths(cmds.size());
    std::vector<std::vector<std::pair<std::string, CLI::Option*>>> options(cmds.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < cmds.size(); ++i) {
        auto* sub = app.add_subcommand(cmds[i].name, cmds[i].help);
        sub->add_option("--config", config_paths[i], "flat key = value config file");
        for (const auto& spec : cmds[i].keys) {
            auto* opt = sub->add_option("--" + spec.key, flag_values[i][spec.key], spec.help);
            if (!spec.default_value.empty()) {
                opt->default_str(spec.default_value);
            }
            options[i].emplace_back(spec.key, opt);
        }
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(1, "config", e.what());
    }

    for (std::size_t i = 0; i < cmds.size(); ++i) {
        if (!subs[i]->parsed()) {
            continue;
        }
        try {
            std::map<std::string, std::string> file_values;
            if (!config_paths[i].empty()) {
                file_values = cli::load_config(config_paths[i]);
            }
            std::map<std::string, std::string> given;
            for (const auto& [key, opt] : options[i]) {
                if (opt->count() > 0) {
                    given[key] = flag_values[i][key];
                }
            }
            Config config(cmds[i].keys, file_values, given);
            set_thread_count(config.count("threads"));
            cmds[i].run(config);
            return 0;
        } catch (const FormatError& e) {
            return fail(2, "format", e.what());
        } catch (const ConfigError& e) {
            return fail(1, "config", e.what());
        } catch (const std::invalid_argument& e) {
            return fail(1, "config", e.what());
        } catch (const std::out_of_range& e) {
            return fail(2, "format", e.what());
        } catch (const std::exception& e) {
            return fail(1, "runtime", e.what());
        }
    }
    return 0;
}
