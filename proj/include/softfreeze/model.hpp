#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "softfreeze/cache_ledger.hpp"

namespace softfreeze {

struct ModelConfig {
    int d_model = 32;
    int n_heads = 4;
    int n_layers = 2;
    int vocab_size = 64;
    std::uint64_t seed = 1234;

    int head_dim() const { return d_model / n_heads; }
    KvShape kv_shape() const {
        return {static_cast<std::size_t>(n_layers), static_cast<std::size_t>(n_heads),
                static_cast<std::size_t>(head_dim())};
    }
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// Row-major d_model x d_model projections of one decoder layer.
struct LayerWeights {
    std::vector<double> wq, wk, wv, wo;
};

struct ModelWeights {
    std::vector<double> embedding;    // vocab x d_model
    std::vector<double> unembedding;  // vocab x d_model
    std::vector<LayerWeights> layers;
};

struct ForwardResult {
    std::vector<double> queries;  // per (layer, head), KvShape order
    std::vector<double> keys;
    std::vector<double> values;
    std::vector<double> logits;
};

// softmax(q . k / sqrt(head_dim)) . v over `entries` for a single (layer, head),
// stabilized by subtracting the largest logit. Writes head_dim outputs to `out`.
void attend_head(std::span<const double> query, const KvShape& shape, std::size_t layer,
                 std::size_t head, std::span<const ActiveEntry> entries, std::span<double> out);

// Context vector for every head of `layer`, concatenated (heads * head_dim).
// Throws InvariantError on an empty entry list.
std::vector<double> attend(std::span<const double> layer_query, const KvShape& shape,
                           std::size_t layer, std::span<const ActiveEntry> entries);

// Deterministic decoder-only transformer with seeded synthetic weights.
// Each layer: RMS-normalize, project Q/K/V, attend over the supplied context
// plus the token itself, project back and add to the residual stream.
class ToyModel {
public:
    explicit ToyModel(ModelConfig config);

    const ModelConfig& config() const { return config_; }
    const ModelWeights& weights() const { return weights_; }
    ModelWeights& mutable_weights() { return weights_; }

    std::vector<double> embed(int token, Position position) const;
    ForwardResult forward(int token, Position position,
                          std::span<const ActiveEntry> context) const;

private:
    ModelConfig config_;
    ModelWeights weights_;
};

struct StepOutput {
    Position position = 0;        // where the new token was inserted
    std::vector<double> queries;  // per (layer, head), KvShape order
    std::vector<double> logits;
    std::vector<double> probs;    // softmax(logits), before any truncation
    double entropy = 0.0;
    int sampled = -1;             // filled in by the caller's sampler
};

// Runs `token` through the model against the ledger's active view, appends
// the new token's KV as an active record and returns the step output.
StepOutput forward_step(CacheLedger& ledger, const ToyModel& model, int token);

// Positional code added to embeddings; fixed per absolute position.
std::vector<double> position_code(Position position, int d_model);

// Marks `passkey` and `query` so the query token's head-0 query (layer 0) aligns
// with the passkey's key, and the value read from the passkey pushes the output
// towards the passkey id. Both tokens gain private embedding directions that
// every other token and the base layer-0 projections are orthogonal to.
struct RetrievalBias {
    int passkey_token = 0;
    int query_token = 1;
    double marker_scale = 11.0;
    double gain = 1.5;         // query/key/value alignment strength
    double output_gain = 4.0;  // push of the retrieved value towards the passkey logit
    std::uint64_t seed = 7;
};
void apply_retrieval_bias(ToyModel& model, const RetrievalBias& bias);

}  // namespace softfreeze
