#include "spar/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "spar/binary_io.hpp"
#include "spar/detail/contrastive.hpp"
#include "spar/rng.hpp"

namespace spar {

namespace {

constexpr std::string_view kModelMagic = "SPARENC1";

}  // namespace

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

EncoderParams::EncoderParams(std::vector<std::string> vocab, std::size_t dim, Precision precision)
    : vocab_(std::move(vocab)),
      dim_(dim),
      precision_(precision),
      query_(vocab_.size(), dim),
      passage_(vocab_.size(), dim)
{
    if (dim == 0) {
        throw std::invalid_argument("embedding dimension must be positive");
    }
    row_by_token_.reserve(vocab_.size());
    for (std::uint32_t i = 0; i < vocab_.size(); ++i) {
        if (!row_by_token_.emplace(vocab_[i], i).second) {
            throw std::invalid_argument("duplicate vocabulary token '" + vocab_[i] + "'");
        }
    }
}

EncoderParams EncoderParams::random(
    std::vector<std::string> vocab, std::size_t dim, std::uint64_t seed, Precision precision, double scale)
{
    EncoderParams params(std::move(vocab), dim, precision);
    Rng rng(seed);
    for (auto& x : params.query_.data()) {
        x = rng.uniform(-scale, scale);
    }
    for (auto& x : params.passage_.data()) {
        x = rng.uniform(-scale, scale);
    }
    params.round_to_precision();
    return params;
}

std::optional<std::uint32_t> EncoderParams::row_of(std::string_view token) const
{
    auto it = row_by_token_.find(std::string(token));
    if (it == row_by_token_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void EncoderParams::round_to_precision()
{
    if (precision_ == Precision::f64) {
        return;
    }
    for (auto* m : {&query_, &passage_}) {
        for (auto& x : m->data()) {
            x = store(precision_, x);
        }
    }
}

EncoderParams EncoderParams::with_precision(Precision precision) const
{
    EncoderParams out = *this;
    out.precision_ = precision;
    out.round_to_precision();
    return out;
}

void EncoderParams::save(std::ostream& out) const
{
    using namespace binary;
    write_magic(out, kModelMagic);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(vocab_.size()));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(precision_));
    for (const auto& token : vocab_) {
        write_string(out, token);
    }
    for (const auto* m : {&query_, &passage_}) {
        for (double x : m->data()) {
            if (precision_ == Precision::f32) {
                write_pod<float>(out, static_cast<float>(x));
            } else {
                write_pod<double>(out, x);
            }
        }
    }
}

EncoderParams EncoderParams::load(std::istream& in)
{
    using namespace binary;
    expect_magic(in, kModelMagic);
    auto vocab_size = read_pod<std::uint32_t>(in);
    auto dim = read_pod<std::uint32_t>(in);
    auto flag = read_pod<std::uint8_t>(in);
    if (flag > 1) {
        throw FormatError("unknown precision flag " + std::to_string(flag));
    }
    if (dim == 0) {
        throw FormatError("model dimension is zero");
    }
    std::vector<std::string> vocab;
    vocab.reserve(vocab_size);
    for (std::uint32_t i = 0; i < vocab_size; ++i) {
        vocab.push_back(read_string(in));
    }
    EncoderParams params;
    try {
        params = EncoderParams(std::move(vocab), dim, static_cast<Precision>(flag));
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
    for (auto* m : {&params.query_, &params.passage_}) {
        for (auto& x : m->data()) {
            x = flag == 0 ? static_cast<double>(read_pod<float>(in)) : read_pod<double>(in);
        }
    }
    return params;
}

void EncoderParams::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    save(out);
}

EncoderParams EncoderParams::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return load(in);
}

std::vector<std::string> build_vocab(const Corpus& corpus, const TokenizerConfig& cfg)
{
    std::set<std::string> tokens;
    for (const auto& p : corpus) {
        for (auto& t : tokenize(p.text, cfg)) {
            tokens.insert(std::move(t));
        }
    }
    return {tokens.begin(), tokens.end()};
}

TokenBag make_bag(const EncoderParams& params, std::span<const std::string> tokens)
{
    std::vector<std::uint32_t> rows;
    rows.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (auto r = params.row_of(t)) {
            rows.push_back(*r);
        }
    }
    std::sort(rows.begin(), rows.end());
    TokenBag bag;
    bag.total = static_cast<std::uint32_t>(rows.size());
    for (std::size_t i = 0; i < rows.size();) {
        auto j = i;
        while (j < rows.size() && rows[j] == rows[i]) {
            ++j;
        }
        bag.rows.push_back(rows[i]);
        bag.counts.push_back(static_cast<std::uint32_t>(j - i));
        i = j;
    }
    return bag;
}

std::vector<double> pool(const Matrix& table, const TokenBag& bag)
{
    std::vector<double> v(table.cols(), 0.0);
    if (bag.total == 0) {
        return v;
    }
    for (std::size_t k = 0; k < bag.rows.size(); ++k) {
        auto row = table.row(bag.rows[k]);
        auto c = static_cast<double>(bag.counts[k]);
        for (std::size_t t = 0; t < v.size(); ++t) {
            v[t] += c * row[t];
        }
    }
    auto n = static_cast<double>(bag.total);
    for (auto& x : v) {
        x /= n;
    }
    return v;
}

std::vector<double> encode_query(const EncoderParams& params, std::span<const std::string> tokens)
{
    return pool(params.query_embedding(), make_bag(params, tokens));
}

std::vector<double> encode_passage(const EncoderParams& params, std::span<const std::string> tokens)
{
    return pool(params.passage_embedding(), make_bag(params, tokens));
}

namespace detail {

RowGradients::RowGradients(std::size_t vocab_size, std::size_t dim) : dim_(dim), slot_of_row_(vocab_size, -1) {}

void RowGradients::add(const TokenBag& bag, std::span<const double> vector_grad)
{
    if (bag.total == 0) {
        return;
    }
    auto n = static_cast<double>(bag.total);
    for (std::size_t k = 0; k < bag.rows.size(); ++k) {
        auto row = bag.rows[k];
        auto& slot = slot_of_row_[row];
        if (slot < 0) {
            slot = static_cast<std::int64_t>(rows_.size());
            rows_.push_back(row);
            values_.resize(values_.size() + dim_, 0.0);
        }
        double w = static_cast<double>(bag.counts[k]) / n;
        double* dst = values_.data() + static_cast<std::size_t>(slot) * dim_;
        for (std::size_t t = 0; t < dim_; ++t) {
            dst[t] += w * vector_grad[t];
        }
    }
}

void RowGradients::clear()
{
    for (auto row : rows_) {
        slot_of_row_[row] = -1;
    }
    rows_.clear();
    values_.clear();
}

void RowGradients::scatter_into(Matrix& dense) const
{
    for (std::size_t slot = 0; slot < rows_.size(); ++slot) {
        auto dst = dense.row(rows_[slot]);
        auto src = gradient(slot);
        for (std::size_t t = 0; t < dim_; ++t) {
            dst[t] += src[t];
        }
    }
}

double contrastive_core(
    const EncoderParams& params, const BagBatch& batch, double mu, RowGradients& query_grad,
    RowGradients& passage_grad, double* weight_grad)
{
    const auto b = batch.size();
    const auto d = params.dim();
    const auto& qt = params.query_embedding();
    const auto& pt = params.passage_embedding();
    const bool joint = batch.joint();

    std::vector<std::vector<double>> q_vecs(b), p_vecs(b);
    for (std::size_t i = 0; i < b; ++i) {
        q_vecs[i] = pool(qt, *batch.queries[i]);
        p_vecs[i] = pool(pt, *batch.positives[i]);
    }

    std::vector<std::vector<double>> p_grads(b, std::vector<double>(d, 0.0));
    std::vector<double> q_grad(d);
    std::vector<double> n_grad(d);
    std::vector<double> scores;
    std::vector<double> lex_scores;
    double loss_sum = 0.0;
    const double inv_b = 1.0 / static_cast<double>(b);

    for (std::size_t i = 0; i < b; ++i) {
        const auto& negs = batch.negatives[i];
        std::vector<std::vector<double>> n_vecs(negs.size());
        for (std::size_t m = 0; m < negs.size(); ++m) {
            n_vecs[m] = pool(pt, *negs[m]);
        }

        const auto n_cand = b + negs.size();
        scores.assign(n_cand, 0.0);
        lex_scores.assign(joint ? n_cand : 0, 0.0);
        for (std::size_t j = 0; j < b; ++j) {
            scores[j] = dot(q_vecs[i], p_vecs[j]);
            if (joint) {
                lex_scores[j] = dot(batch.lex_queries[i], batch.lex_positives[j]);
            }
        }
        for (std::size_t m = 0; m < negs.size(); ++m) {
            scores[b + m] = dot(q_vecs[i], n_vecs[m]);
            if (joint) {
                lex_scores[b + m] = dot(batch.lex_queries[i], batch.lex_negatives[i][m]);
            }
        }
        if (joint) {
            for (std::size_t j = 0; j < n_cand; ++j) {
                scores[j] += mu * lex_scores[j];
            }
        }

        double max_score = *std::max_element(scores.begin(), scores.end());
        double z = 0.0;
        for (double s : scores) {
            z += std::exp(s - max_score);
        }
        double log_z = max_score + std::log(z);
        loss_sum += log_z - scores[i];

        // d(loss)/d(score_j) = (softmax_j - [j == i]) / B
        std::fill(q_grad.begin(), q_grad.end(), 0.0);
        for (std::size_t j = 0; j < n_cand; ++j) {
            double g = std::exp(scores[j] - log_z);
            if (j == i) {
                g -= 1.0;
            }
            g *= inv_b;
            if (weight_grad != nullptr && joint) {
                *weight_grad += g * lex_scores[j];
            }
            const auto& cand = j < b ? p_vecs[j] : n_vecs[j - b];
            for (std::size_t t = 0; t < d; ++t) {
                q_grad[t] += g * cand[t];
            }
            if (j < b) {
                for (std::size_t t = 0; t < d; ++t) {
                    p_grads[j][t] += g * q_vecs[i][t];
                }
            } else {
                for (std::size_t t = 0; t < d; ++t) {
                    n_grad[t] = g * q_vecs[i][t];
                }
                passage_grad.add(*negs[j - b], n_grad);
            }
        }
        query_grad.add(*batch.queries[i], q_grad);
    }
    for (std::size_t j = 0; j < b; ++j) {
        passage_grad.add(*batch.positives[j], p_grads[j]);
    }
    return loss_sum * inv_b;
}

}  // namespace detail

namespace {

struct BatchBags {
    std::vector<TokenBag> queries;
    std::vector<TokenBag> positives;
    std::vector<std::vector<TokenBag>> negatives;
};

BatchBags bags_for(const EncoderParams& params, const TrainingBatch& batch)
{
    if (batch.empty()) {
        throw std::invalid_argument("training batch must not be empty");
    }
    BatchBags bags;
    for (const auto& item : batch) {
        bags.queries.push_back(make_bag(params, item.query));
        bags.positives.push_back(make_bag(params, item.positive));
        auto& negs = bags.negatives.emplace_back();
        for (const auto& n : item.negatives) {
            negs.push_back(make_bag(params, n));
        }
    }
    return bags;
}

detail::BagBatch view_of(const BatchBags& bags)
{
    detail::BagBatch view;
    for (std::size_t i = 0; i < bags.queries.size(); ++i) {
        view.queries.push_back(&bags.queries[i]);
        view.positives.push_back(&bags.positives[i]);
        auto& negs = view.negatives.emplace_back();
        for (const auto& n : bags.negatives[i]) {
            negs.push_back(&n);
        }
    }
    return view;
}

Gradients densify(const EncoderParams& params, const detail::RowGradients& gq, const detail::RowGradients& gp)
{
    Gradients g{Matrix(params.vocab_size(), params.dim()), Matrix(params.vocab_size(), params.dim())};
    gq.scatter_into(g.query);
    gp.scatter_into(g.passage);
    return g;
}

}  // namespace

LossResult contrastive_loss(const EncoderParams& params, const TrainingBatch& batch)
{
    auto bags = bags_for(params, batch);
    auto view = view_of(bags);
    detail::RowGradients gq(params.vocab_size(), params.dim());
    detail::RowGradients gp(params.vocab_size(), params.dim());
    double loss = detail::contrastive_core(params, view, 0.0, gq, gp, nullptr);
    return LossResult{loss, densify(params, gq, gp)};
}

JointLossResult joint_contrastive_loss(
    const EncoderParams& params, const EncoderParams& lexical, double mu, const TrainingBatch& batch)
{
    auto bags = bags_for(params, batch);
    auto view = view_of(bags);

    std::vector<std::vector<double>> lex_q, lex_p;
    std::vector<std::vector<std::vector<double>>> lex_n;
    for (const auto& item : batch) {
        lex_q.push_back(encode_query(lexical, item.query));
        lex_p.push_back(encode_passage(lexical, item.positive));
        auto& negs = lex_n.emplace_back();
        for (const auto& n : item.negatives) {
            negs.push_back(encode_passage(lexical, n));
        }
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
        view.lex_queries.emplace_back(lex_q[i]);
        view.lex_positives.emplace_back(lex_p[i]);
        auto& negs = view.lex_negatives.emplace_back();
        for (const auto& n : lex_n[i]) {
            negs.emplace_back(n);
        }
    }

    detail::RowGradients gq(params.vocab_size(), params.dim());
    detail::RowGradients gp(params.vocab_size(), params.dim());
    double weight_grad = 0.0;
    double loss = detail::contrastive_core(params, view, mu, gq, gp, &weight_grad);
    return JointLossResult{loss, densify(params, gq, gp), weight_grad};
}

double grad_check(const EncoderParams& params, const TrainingBatch& batch, const GradCheckOptions& options)
{
    if (!(options.epsilon > 0.0)) {
        throw std::invalid_argument("grad_check epsilon must be positive");
    }
    auto analytic = contrastive_loss(params, batch).gradients;

    auto bags = bags_for(params, batch);
    auto view = view_of(bags);
    EncoderParams probe = params;
    detail::RowGradients gq(params.vocab_size(), params.dim());
    detail::RowGradients gp(params.vocab_size(), params.dim());
    auto loss_at = [&]() {
        gq.clear();
        gp.clear();
        return detail::contrastive_core(probe, view, 0.0, gq, gp, nullptr);
    };

    const std::size_t per_table = params.vocab_size() * params.dim();
    const std::size_t total = 2 * per_table;
    std::vector<std::size_t> coords(total);
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coordinates != 0 && options.max_coordinates < total) {
        auto n = std::min(total, std::max<std::size_t>(200, options.max_coordinates));
        Rng rng(options.seed);
        for (std::size_t i = 0; i < n; ++i) {
            auto j = i + static_cast<std::size_t>(rng.below(total - i));
            std::swap(coords[i], coords[j]);
        }
        coords.resize(n);
    }

    double worst = 0.0;
    for (auto c : coords) {
        bool is_query = c < per_table;
        auto offset = is_query ? c : c - per_table;
        auto& value = (is_query ? probe.query_embedding() : probe.passage_embedding()).data()[offset];
        double a = (is_query ? analytic.query : analytic.passage).data()[offset];
        double original = value;
        value = original + options.epsilon;
        double up = loss_at();
        value = original - options.epsilon;
        double down = loss_at();
        value = original;
        double numeric = (up - down) / (2.0 * options.epsilon);
        double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    }
    return worst;
}

}  // namespace spar
