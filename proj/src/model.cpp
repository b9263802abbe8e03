#include "softfreeze/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "softfreeze/errors.hpp"
#include "softfreeze/rng.hpp"
#include "softfreeze/sampler.hpp"

namespace softfreeze {
namespace {

std::vector<double> gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
    std::vector<double> m(rows * cols);
    for (double& x : m) x = stddev * standard_normal(rng);
    return m;
}

void matvec(const std::vector<double>& w, std::span<const double> x, std::span<double> y) {
    const std::size_t cols = x.size();
    for (std::size_t r = 0; r < y.size(); ++r) {
        double acc = 0.0;
        const double* row = w.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

std::vector<double> rms_normalize(std::span<const double> x) {
    double ss = 0.0;
    for (double v : x) ss += v * v;
    const double inv = 1.0 / std::sqrt(ss / static_cast<double>(x.size()) + 1e-12);
    std::vector<double> out(x.begin(), x.end());
    for (double& v : out) v *= inv;
    return out;
}

std::vector<double> random_unit(Rng& rng, std::size_t n,
                                std::initializer_list<const std::vector<double>*> against) {
    std::vector<double> v(n);
    for (double& x : v) x = standard_normal(rng);
    for (const auto* u : against) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += v[i] * (*u)[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= dot * (*u)[i];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

// W <- W (I - u u^T): the map ignores the input direction u.
void remove_input_direction(std::vector<double>& w, std::size_t cols, const std::vector<double>& u) {
    const std::size_t rows = w.size() / cols;
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = w.data() + r * cols;
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += row[c] * u[c];
        for (std::size_t c = 0; c < cols; ++c) row[c] -= dot * u[c];
    }
}

// Rows [first, first + u.size()) <- (I - u u^T) rows: outputs of that block
// carry no component along u.
void remove_output_direction(std::vector<double>& w, std::size_t cols, std::size_t first,
                             const std::vector<double>& u) {
    for (std::size_t c = 0; c < cols; ++c) {
        double dot = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * w[(first + i) * cols + c];
        for (std::size_t i = 0; i < u.size(); ++i) w[(first + i) * cols + c] -= dot * u[i];
    }
}

// w[first + i][c] += gain * out[i] * in[c]
void add_rank_one(std::vector<double>& w, std::size_t cols, std::size_t first,
                  const std::vector<double>& out, const std::vector<double>& in, double gain) {
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t c = 0; c < cols; ++c) {
            w[(first + i) * cols + c] += gain * out[i] * in[c];
        }
    }
}

}  // namespace

void ModelConfig::validate() const {
    if (d_model < 1) throw ConfigError("model.d_model must be >= 1");
    if (n_heads < 1) throw ConfigError("model.n_heads must be >= 1");
    if (n_layers < 1) throw ConfigError("model.n_layers must be >= 1");
    if (d_model % n_heads != 0) {
        throw ConfigError("model.d_model (" + std::to_string(d_model) + ") must be divisible by n_heads (" +
                          std::to_string(n_heads) + ")");
    }
    if (vocab_size < 2) throw ConfigError("model.vocab_size must be >= 2");
}

void attend_head(std::span<const double> query, const KvShape& shape, std::size_t layer,
                 std::size_t head, std::span<const ActiveEntry> entries, std::span<double> out) {
    if (entries.empty()) {
        throw InvariantError("attention over an empty active set");
    }
    const std::size_t dk = shape.head_dim;
    const std::size_t off = shape.offset(layer, head);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    std::vector<double> logits(entries.size());
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < entries.size(); ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < dk; ++i) dot += query[i] * entries[j].keys[off + i];
        logits[j] = dot * scale;
        max_logit = std::max(max_logit, logits[j]);
    }
    double denom = 0.0;
    for (double& l : logits) {
        l = std::exp(l - max_logit);
        denom += l;
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t j = 0; j < entries.size(); ++j) {
        const double w = logits[j] / denom;
        for (std::size_t i = 0; i < dk; ++i) out[i] += w * entries[j].values[off + i];
    }
}

std::vector<double> attend(std::span<const double> layer_query, const KvShape& shape,
                           std::size_t layer, std::span<const ActiveEntry> entries) {
    if (layer_query.size() != shape.heads * shape.head_dim) {
        throw ConfigError("attend: query has " + std::to_string(layer_query.size()) +
                          " components, expected " + std::to_string(shape.heads * shape.head_dim));
    }
    std::vector<double> out(shape.heads * shape.head_dim);
    for (std::size_t h = 0; h < shape.heads; ++h) {
        attend_head(layer_query.subspan(h * shape.head_dim, shape.head_dim), shape, layer, h,
                    entries, std::span(out).subspan(h * shape.head_dim, shape.head_dim));
    }
    return out;
}

std::vector<double> position_code(Position position, int d_model) {
    std::vector<double> code(static_cast<std::size_t>(d_model));
    for (int i = 0; i < d_model; i += 2) {
        const double freq = std::pow(10000.0, -static_cast<double>(i) / d_model);
        const double angle = static_cast<double>(position) * freq;
        code[static_cast<std::size_t>(i)] = std::sin(angle);
        if (i + 1 < d_model) code[static_cast<std::size_t>(i + 1)] = std::cos(angle);
    }
    return code;
}

ToyModel::ToyModel(ModelConfig config) : config_(config) {
    config_.validate();
    const auto d = static_cast<std::size_t>(config_.d_model);
    const auto vocab = static_cast<std::size_t>(config_.vocab_size);
    const double proj_std = 1.0 / std::sqrt(static_cast<double>(d));

    Rng rng(config_.seed);
    weights_.embedding = gaussian_matrix(rng, vocab, d, 1.0);
    weights_.layers.resize(static_cast<std::size_t>(config_.n_layers));
    for (auto& layer : weights_.layers) {
        layer.wq = gaussian_matrix(rng, d, d, proj_std);
        layer.wk = gaussian_matrix(rng, d, d, proj_std);
        layer.wv = gaussian_matrix(rng, d, d, proj_std);
        layer.wo = gaussian_matrix(rng, d, d, proj_std);
    }
    weights_.unembedding = gaussian_matrix(rng, vocab, d, proj_std);
}

std::vector<double> ToyModel::embed(int token, Position position) const {
    if (token < 0 || token >= config_.vocab_size) {
        throw ConfigError("token id " + std::to_string(token) + " outside vocabulary of " +
                          std::to_string(config_.vocab_size));
    }
    const auto d = static_cast<std::size_t>(config_.d_model);
    std::vector<double> x = position_code(position, config_.d_model);
    const double* row = weights_.embedding.data() + static_cast<std::size_t>(token) * d;
    for (std::size_t i = 0; i < d; ++i) x[i] += row[i];
    return x;
}

ForwardResult ToyModel::forward(int token, Position position,
                                std::span<const ActiveEntry> context) const {
    const KvShape shape = config_.kv_shape();
    const auto d = static_cast<std::size_t>(config_.d_model);
    for (const auto& entry : context) {
        if (entry.keys.size() != shape.per_token() || entry.values.size() != shape.per_token()) {
            throw ConfigError("context entry at position " + std::to_string(entry.position) +
                              " does not match the model's KV shape");
        }
    }

    ForwardResult result;
    result.queries.resize(shape.per_token());
    result.keys.resize(shape.per_token());
    result.values.resize(shape.per_token());

    std::vector<ActiveEntry> entries(context.begin(), context.end());
    entries.push_back({position, result.keys, result.values});

    std::vector<double> x = embed(token, position);
    std::vector<double> update(d);
    for (std::size_t l = 0; l < weights_.layers.size(); ++l) {
        const auto& layer = weights_.layers[l];
        const std::vector<double> h = rms_normalize(x);
        const std::size_t off = shape.offset(l, 0);
        auto q = std::span(result.queries).subspan(off, d);
        matvec(layer.wq, h, q);
        matvec(layer.wk, h, std::span(result.keys).subspan(off, d));
        matvec(layer.wv, h, std::span(result.values).subspan(off, d));
        const std::vector<double> context_vec = attend(q, shape, l, entries);
        matvec(layer.wo, context_vec, update);
        for (std::size_t i = 0; i < d; ++i) x[i] += update[i];
    }
    result.logits.resize(static_cast<std::size_t>(config_.vocab_size));
    matvec(weights_.unembedding, rms_normalize(x), result.logits);
    return result;
}

void apply_retrieval_bias(ToyModel& model, const RetrievalBias& bias) {
    const ModelConfig& cfg = model.config();
    const int vocab = cfg.vocab_size;
    if (bias.passkey_token == bias.query_token || bias.passkey_token < 0 ||
        bias.passkey_token >= vocab || bias.query_token < 0 || bias.query_token >= vocab) {
        throw ConfigError("retrieval bias needs two distinct in-vocabulary token ids");
    }
    if (cfg.d_model < 3) {
        throw ConfigError("retrieval bias needs d_model >= 3");
    }
    const auto d = static_cast<std::size_t>(cfg.d_model);
    const auto dk = static_cast<std::size_t>(cfg.head_dim());
    ModelWeights& w = model.mutable_weights();
    Rng rng(bias.seed);

    const std::vector<double> passkey_dir = random_unit(rng, d, {});
    const std::vector<double> query_dir = random_unit(rng, d, {&passkey_dir});
    const std::vector<double> align = random_unit(rng, dk, {});
    const std::vector<double> carry = random_unit(rng, dk, {});

    for (int t = 0; t < vocab; ++t) {
        std::vector<double> row(w.embedding.begin() + t * cfg.d_model,
                                w.embedding.begin() + (t + 1) * cfg.d_model);
        for (const auto* u : {&passkey_dir, &query_dir}) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += row[i] * (*u)[i];
            for (std::size_t i = 0; i < d; ++i) row[i] -= dot * (*u)[i];
        }
        const std::vector<double>* marker = t == bias.passkey_token ? &passkey_dir
                                            : t == bias.query_token ? &query_dir
                                                                    : nullptr;
        if (marker != nullptr) {
            for (std::size_t i = 0; i < d; ++i) row[i] += bias.marker_scale * (*marker)[i];
        }
        std::copy(row.begin(), row.end(), w.embedding.begin() + t * cfg.d_model);
    }

    LayerWeights& first = w.layers.front();
    for (auto* m : {&first.wq, &first.wk, &first.wv}) {
        remove_input_direction(*m, d, passkey_dir);
        remove_input_direction(*m, d, query_dir);
    }
    remove_output_direction(first.wq, d, 0, align);
    remove_output_direction(first.wk, d, 0, align);
    remove_output_direction(first.wv, d, 0, carry);
    add_rank_one(first.wq, d, 0, align, query_dir, bias.gain);
    add_rank_one(first.wk, d, 0, align, passkey_dir, bias.gain);
    add_rank_one(first.wv, d, 0, carry, passkey_dir, bias.gain);

    // Output projection: head 0's `carry` component maps onto the passkey's
    // unembedding direction and nothing else.
    std::vector<double> carry_full(d, 0.0);
    std::copy(carry.begin(), carry.end(), carry_full.begin());
    remove_input_direction(first.wo, d, carry_full);
    std::vector<double> target(w.unembedding.begin() + bias.passkey_token * cfg.d_model,
                               w.unembedding.begin() + (bias.passkey_token + 1) * cfg.d_model);
    double norm = 0.0;
    for (double x : target) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : target) x /= norm;
    add_rank_one(first.wo, d, 0, target, carry_full, bias.output_gain);
}

}  // namespace softfreeze

namespace softfreeze {

StepOutput forward_step(CacheLedger& ledger, const ToyModel& model, int token) {
    if (!(ledger.shape() == model.config().kv_shape())) {
        throw ConfigError("ledger KV shape does not match the model");
    }
    const std::vector<ActiveEntry> view = ledger.active_view();
    ForwardResult fr = model.forward(token, static_cast<Position>(ledger.size()), view);

    TokenRecord record;
    record.keys = std::move(fr.keys);
    record.values = std::move(fr.values);

    StepOutput out;
    out.position = ledger.insert_token(std::move(record));
    out.queries = std::move(fr.queries);
    out.probs = softmax(fr.logits);
    out.entropy = entropy(out.probs);
    out.logits = std::move(fr.logits);
    return out;
}

}  // namespace softfreeze
