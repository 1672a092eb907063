#include "catt/attention.hpp"

#include <cmath>

namespace catt {

std::vector<ParamPtr> AttentionParams::parameters() const {
    std::vector<ParamPtr> out;
    for (std::size_t i = 0; i < heads; ++i) {
        out.push_back(wq[i]);
        out.push_back(wk[i]);
        out.push_back(wv[i]);
    }
    out.push_back(wh);
    for (const auto& p : embed.parameters()) out.push_back(p);
    return out;
}

AttentionParamsPtr init_attention_params(std::size_t heads, std::size_t model_dim, Rng& rng,
                                         const std::string& prefix) {
    if (heads == 0 || model_dim == 0 || model_dim % heads != 0) {
        throw ConfigError("attention: model_dim " + std::to_string(model_dim) +
                          " must be a positive multiple of heads " + std::to_string(heads));
    }
    auto p = std::make_shared<AttentionParams>();
    p->heads = heads;
    p->model_dim = model_dim;
    std::size_t hd = model_dim / heads;
    for (std::size_t i = 0; i < heads; ++i) {
        std::string si = std::to_string(i);
        p->wq.push_back(make_param_xavier(prefix + ".wq" + si, model_dim, hd, rng));
        p->wk.push_back(make_param_xavier(prefix + ".wk" + si, model_dim, hd, rng));
        p->wv.push_back(make_param_xavier(prefix + ".wv" + si, model_dim, hd, rng));
    }
    p->wh = make_param_xavier(prefix + ".wh", model_dim, model_dim, rng);
    p->embed = init_embed_params(model_dim, rng, prefix);
    return p;
}

std::vector<ParamPtr> CattBlockParams::parameters() const {
    std::vector<ParamPtr> out = is_att->parameters();
    if (!shared) {
        for (const auto& p : cs_att->parameters()) out.push_back(p);
    }
    return out;
}

CattBlockParams init_catt_block(std::size_t heads, std::size_t model_dim, bool shared, Rng& rng,
                                const std::string& prefix) {
    CattBlockParams block;
    block.shared = shared;
    if (shared) {
        block.is_att = init_attention_params(heads, model_dim, rng, prefix + ".attn");
        block.cs_att = block.is_att;
    } else {
        block.is_att = init_attention_params(heads, model_dim, rng, prefix + ".is");
        block.cs_att = init_attention_params(heads, model_dim, rng, prefix + ".cs");
    }
    return block;
}

AdditiveParams init_additive_params(std::size_t dim, Rng& rng, const std::string& prefix) {
    AdditiveParams p;
    p.w = make_param_xavier(prefix + ".w", dim, 1, rng);
    p.w_k = make_param_xavier(prefix + ".w_k", dim, dim, rng);
    p.w_q = make_param_xavier(prefix + ".w_q", dim, dim, rng);
    return p;
}

MultiHeadResult multi_head(Graph& g, Value q, Value k, Value v, const AttentionParams& p) {
    const Tensor& tq = g.value(q);
    const Tensor& tk = g.value(k);
    const Tensor& tv = g.value(v);
    if (tq.cols() != p.model_dim || tk.cols() != p.model_dim || tv.cols() != p.model_dim) {
        throw ShapeError("multi_head: widths " + tq.shape_str() + ", " + tk.shape_str() + ", " +
                         tv.shape_str() + " must all be " + std::to_string(p.model_dim) + " wide");
    }
    if (tk.rows() == 0) throw InputError("multi_head: empty key set");
    if (tk.rows() != tv.rows()) {
        throw ShapeError("multi_head: key/value row counts differ: " + tk.shape_str() + " vs " +
                         tv.shape_str());
    }

    double inv_scale = 1.0 / std::sqrt(static_cast<double>(p.head_dim()));
    MultiHeadResult result;
    Value heads_cat{};
    for (std::size_t i = 0; i < p.heads; ++i) {
        Value qp = g.matmul(q, g.param(p.wq[i]));
        Value kp = g.matmul(k, g.param(p.wk[i]));
        Value logits = g.scale(g.matmul(qp, g.transpose(kp)), inv_scale);
        Value prob = g.softmax_rows(logits);
        result.probs.push_back(prob);
        Value head = g.matmul(prob, g.matmul(v, g.param(p.wv[i])));
        heads_cat = i == 0 ? head : g.concat_cols(heads_cat, head);
    }
    result.output = embed_block(g, g.matmul(heads_cat, g.param(p.wh)), p.embed);
    return result;
}

Value is_att(Graph& g, Value sample_values, Value queries, const AttentionParams& p) {
    return multi_head(g, queries, sample_values, sample_values, p).output;
}

Value cs_att(Graph& g, const GlobalDictionary& dict, Value queries, const AttentionParams& p) {
    if (!dict.entries || dict.size() == 0) {
        throw ConfigError("cs_att: empty global dictionary");
    }
    Value entries = g.param(dict.entries);
    return multi_head(g, queries, entries, entries, p).output;
}

CattBlockResult catt_block(Graph& g, Value sample, const GlobalDictionary& dict, Value queries,
                           const CattBlockParams& p) {
    CattBlockResult r;
    r.z_hat = is_att(g, sample, queries, *p.is_att);
    r.x_hat = cs_att(g, dict, queries, *p.cs_att);
    return r;
}

Value additive_scores(Graph& g, Value query_row, Value keys, const AdditiveParams& p) {
    const Tensor& tq = g.value(query_row);
    const Tensor& tk = g.value(keys);
    std::size_t d = p.w->value.rows();
    if (tq.rows() != 1 || tq.cols() != d || tk.cols() != d) {
        throw ShapeError("additive_scores: query " + tq.shape_str() + " and keys " +
                         tk.shape_str() + " must be " + std::to_string(d) + " wide");
    }
    if (tk.rows() == 0) throw InputError("additive_scores: empty key set");

    Value shifted = g.add_row_bias(g.matmul(keys, g.param(p.w_k)), g.matmul(query_row, g.param(p.w_q)));
    Value logits = g.matmul(shifted, g.param(p.w));  // N x 1
    return g.softmax_rows(g.transpose(logits));      // 1 x N
}

}  // namespace catt
