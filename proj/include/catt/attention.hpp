#pragma once

#include <memory>
#include <string>
#include <vector>

#include "catt/dictionary.hpp"
#include "catt/tensor.hpp"

namespace catt {

// Weights of one multi-head scaled dot-product block: per-head Q/K/V
// projections d x (d/h), the d x d output matrix, and the feed-forward
// residual stage applied to the concatenated heads.
struct AttentionParams {
    std::size_t heads = 1;
    std::size_t model_dim = 0;
    std::vector<ParamPtr> wq, wk, wv;
    ParamPtr wh;
    EmbedParams embed;

    std::size_t head_dim() const { return model_dim / heads; }
    std::vector<ParamPtr> parameters() const;
};

using AttentionParamsPtr = std::shared_ptr<AttentionParams>;

AttentionParamsPtr init_attention_params(std::size_t heads, std::size_t model_dim, Rng& rng,
                                         const std::string& prefix);

// One causal attention block: an in-sample side and a cross-sample side.
// With shared == true both sides are the identical AttentionParams object,
// which keeps their outputs in the same representation space.
struct CattBlockParams {
    AttentionParamsPtr is_att;
    AttentionParamsPtr cs_att;
    bool shared = false;

    std::vector<ParamPtr> parameters() const;
};

CattBlockParams init_catt_block(std::size_t heads, std::size_t model_dim, bool shared, Rng& rng,
                                const std::string& prefix);

// Additive (top-down) scorer: a_n = w^T (W_k k_n + W_q q), alpha = softmax(a).
struct AdditiveParams {
    ParamPtr w;    // d x 1
    ParamPtr w_k;  // d x d
    ParamPtr w_q;  // d x d
    std::vector<ParamPtr> parameters() const { return {w, w_k, w_q}; }
};

AdditiveParams init_additive_params(std::size_t dim, Rng& rng, const std::string& prefix);

struct MultiHeadResult {
    Value output;               // nq x d
    std::vector<Value> probs;   // one nq x nk attention matrix per head
};

// Scaled dot-product attention with h heads; per-head logits are scaled by
// 1/sqrt(d/h). Output is the feed-forward residual stage applied to the
// concatenated heads times the output matrix.
MultiHeadResult multi_head(Graph& g, Value q, Value k, Value v, const AttentionParams& p);

// In-sample attention: keys and values are the current sample's rows.
Value is_att(Graph& g, Value sample_values, Value queries, const AttentionParams& p);

// Cross-sample attention: keys and values are the global dictionary.
Value cs_att(Graph& g, const GlobalDictionary& dict, Value queries, const AttentionParams& p);

struct CattBlockResult {
    Value z_hat;  // in-sample estimate
    Value x_hat;  // cross-sample estimate
};

CattBlockResult catt_block(Graph& g, Value sample, const GlobalDictionary& dict, Value queries,
                           const CattBlockParams& p);

// Returns the 1 x N attention distribution over the key rows.
Value additive_scores(Graph& g, Value query_row, Value keys, const AdditiveParams& p);

}  // namespace catt
