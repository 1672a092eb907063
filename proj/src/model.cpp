#include "catt/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

namespace catt {

void ModelConfig::validate() const {
    if (enc_layers < 1 || dec_layers < 1) throw ConfigError("model: layer counts must be >= 1");
    if (d < 1 || heads < 1 || d % heads != 0) {
        throw ConfigError("model: d (" + std::to_string(d) + ") must be a positive multiple of heads (" +
                          std::to_string(heads) + ")");
    }
    if (k_feat < 1 || k_ctx < 1) throw ConfigError("model: dictionary sizes must be >= 1");
    if (vocab_in < 1 || vocab_out < 2) throw ConfigError("model: vocab sizes too small");
}

CattModel::CattModel(ModelConfig config, ModelMode mode, std::uint64_t seed)
    : config_(config), mode_(mode) {
    config_.validate();
    Rng rng(seed);
    bool cs = mode_ == ModelMode::catt;

    feat_embed_ = register_param(
        make_param_uniform("feat_embed", config_.vocab_in, config_.d, 0.5, rng));
    ctx_embed_ = register_param(
        make_param_uniform("ctx_embed", config_.vocab_out, config_.d, 0.5, rng));

    for (std::size_t l = 0; l < config_.enc_layers; ++l) {
        auto block = init_catt_block(config_.heads, config_.d, !cs || config_.share_params, rng,
                                     "enc" + std::to_string(l));
        register_block(block);
        enc_blocks_.push_back(std::move(block));
    }
    for (std::size_t l = 0; l < config_.dec_layers; ++l) {
        auto block = init_catt_block(config_.heads, config_.d, !cs || config_.share_params, rng,
                                     "dec" + std::to_string(l));
        register_block(block);
        dec_self_blocks_.push_back(std::move(block));
        if (l >= 1) {
            auto cross = init_catt_block(config_.heads, config_.d, !cs || config_.share_params, rng,
                                         "dec" + std::to_string(l) + ".cross");
            register_block(cross);
            dec_cross_blocks_.push_back(std::move(cross));
        }
    }

    if (cs) {
        feat_dict_ = random_init(config_.k_feat, config_.d, 0.5, rng.next_u64());
        feat_dict_.entries->name = "feat_dict";
        register_param(feat_dict_.entries);
        ctx_dict_ = random_init(config_.k_ctx, config_.d, 0.5, rng.next_u64());
        ctx_dict_.entries->name = "ctx_dict";
        register_param(ctx_dict_.entries);
    }

    std::size_t pred_in = cs ? 2 * config_.d : config_.d;
    predictor_w_ = register_param(make_param_xavier("predictor_w", pred_in, config_.vocab_out, rng));
    predictor_b_ = register_param(make_param("predictor_b", Tensor::zeros({1, config_.vocab_out})));
}

ParamPtr CattModel::register_param(ParamPtr p) {
    params_.push_back(p);
    return p;
}

void CattModel::register_block(const CattBlockParams& block) {
    // shared blocks contribute each tensor once
    for (const auto& p : block.parameters()) register_param(p);
}

std::size_t CattModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->size();
    return n;
}

void CattModel::install_feature_dictionary(const GlobalDictionary& dict) {
    if (mode_ != ModelMode::catt) throw ConfigError("model: baseline has no dictionaries");
    if (!dict.entries->value.same_shape(feat_dict_.entries->value)) {
        throw ConfigError("model: feature dictionary shape " + dict.entries->value.shape_str() +
                          " does not match config " + feat_dict_.entries->value.shape_str());
    }
    feat_dict_.entries->value = dict.entries->value;
    feat_dict_.source = dict.source;
    feat_dict_.inertia = dict.inertia;
    feat_dict_.inertia_history = dict.inertia_history;
    feat_dict_.iterations = dict.iterations;
}

void CattModel::install_context_dictionary(const GlobalDictionary& dict) {
    if (mode_ != ModelMode::catt) throw ConfigError("model: baseline has no dictionaries");
    if (!dict.entries->value.same_shape(ctx_dict_.entries->value)) {
        throw ConfigError("model: context dictionary shape " + dict.entries->value.shape_str() +
                          " does not match config " + ctx_dict_.entries->value.shape_str());
    }
    ctx_dict_.entries->value = dict.entries->value;
    ctx_dict_.source = dict.source;
    ctx_dict_.inertia = dict.inertia;
    ctx_dict_.inertia_history = dict.inertia_history;
    ctx_dict_.iterations = dict.iterations;
}

Value CattModel::embed_tokens(Graph& g, const ParamPtr& table, const std::vector<std::size_t>& ids,
                              const char* what) const {
    if (ids.empty()) throw InputError(std::string(what) + ": empty token sequence");
    std::size_t vocab = table->value.rows();
    for (auto id : ids) {
        if (id >= vocab) {
            throw InputError(std::string(what) + ": token id " + std::to_string(id) +
                             " out of range [0, " + std::to_string(vocab) + ")");
        }
    }
    // one-hot rows times the table keeps the lookup differentiable
    Tensor onehot = Tensor::zeros({ids.size(), vocab});
    for (std::size_t i = 0; i < ids.size(); ++i) onehot.at(i, ids[i]) = 1.0;
    return g.matmul(g.input(std::move(onehot)), g.param(table));
}

CattModel::Streams CattModel::encode(Graph& g, const std::vector<std::size_t>& features) const {
    Value e = embed_tokens(g, feat_embed_, features, "encode");
    Streams s;
    s.has_cs = mode_ == ModelMode::catt;
    const CattBlockParams& first = enc_blocks_.front();
    if (s.has_cs) {
        CattBlockResult r = catt_block(g, e, feat_dict_, e, first);
        s.is = r.z_hat;
        s.cs = r.x_hat;
    } else {
        s.is = is_att(g, e, e, *first.is_att);
    }
    for (std::size_t l = 1; l < enc_blocks_.size(); ++l) {
        const CattBlockParams& block = enc_blocks_[l];
        s.is = is_att(g, s.is, s.is, *block.is_att);
        if (s.has_cs) s.cs = is_att(g, s.cs, s.cs, *block.cs_att);
    }
    return s;
}

CattModel::Streams CattModel::decode(Graph& g, const std::vector<std::size_t>& context,
                                     const Streams& enc) const {
    Value c = embed_tokens(g, ctx_embed_, context, "decode");
    Streams s;
    s.has_cs = mode_ == ModelMode::catt;
    const CattBlockParams& first = dec_self_blocks_.front();
    if (s.has_cs) {
        CattBlockResult r = catt_block(g, c, ctx_dict_, c, first);
        s.is = r.z_hat;
        s.cs = r.x_hat;
    } else {
        s.is = is_att(g, c, c, *first.is_att);
    }
    for (std::size_t l = 1; l < dec_self_blocks_.size(); ++l) {
        const CattBlockParams& self_block = dec_self_blocks_[l];
        s.is = is_att(g, s.is, s.is, *self_block.is_att);
        if (s.has_cs) s.cs = is_att(g, s.cs, s.cs, *self_block.cs_att);

        // cross-attention into the encoder streams
        const CattBlockParams& cross = dec_cross_blocks_[l - 1];
        s.is = is_att(g, enc.is, s.is, *cross.is_att);
        if (s.has_cs) s.cs = is_att(g, enc.cs, s.cs, *cross.cs_att);
    }
    Streams pooled;
    pooled.has_cs = s.has_cs;
    pooled.is = g.mean_rows(s.is);
    if (s.has_cs) pooled.cs = g.mean_rows(s.cs);
    return pooled;
}

Value CattModel::predict_logits(Graph& g, const Streams& pooled) const {
    Value joint = pooled.has_cs ? g.concat_cols(pooled.is, pooled.cs) : pooled.is;
    return g.add_row_bias(g.matmul(joint, g.param(predictor_w_)), g.param(predictor_b_));
}

Tensor CattModel::predict(const std::vector<std::size_t>& features,
                          const std::vector<std::size_t>& context) const {
    Graph g;
    Streams enc = encode(g, features);
    Streams pooled = decode(g, context, enc);
    Value probs = g.softmax_rows(predict_logits(g, pooled));
    return g.value(probs);
}

Value CattModel::forward_loss(Graph& g, const Batch& batch) const {
    if (batch.size() == 0) throw InputError("loss: empty batch");
    if (batch.features.size() != batch.size() || batch.contexts.size() != batch.size()) {
        throw InputError("loss: batch field lengths disagree");
    }
    Value total{};
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch.labels[i] >= config_.vocab_out) {
            throw InputError("loss: label " + std::to_string(batch.labels[i]) + " out of range");
        }
        Streams enc = encode(g, batch.features[i]);
        Streams pooled = decode(g, batch.contexts[i], enc);
        Value probs = g.softmax_rows(predict_logits(g, pooled));
        Value nll = g.scale(g.log(g.pick_rows(probs, {batch.labels[i]})), -1.0);
        total = i == 0 ? nll : g.add(total, nll);
    }
    return g.scale(total, 1.0 / static_cast<double>(batch.size()));
}

double CattModel::loss_and_grads(const Batch& batch) {
    Graph g;
    Value loss = forward_loss(g, batch);
    g.backward(loss);
    return g.value(loss).data[0];
}

double CattModel::batch_loss(const Batch& batch) const {
    Graph g;
    Value loss = forward_loss(g, batch);
    return g.value(loss).data[0];
}

void CattModel::zero_grad() {
    for (const auto& p : params_) p->zero_grad();
}

void CattModel::sgd_step(double lr) {
    for (const auto& p : params_) {
        for (std::size_t i = 0; i < p->size(); ++i) p->value.data[i] -= lr * p->grad.data[i];
    }
}

std::vector<EpochMetrics> train(CattModel& model, const Batch& train_set, const Batch& eval_set,
                                const TrainSettings& settings) {
    if (train_set.size() == 0) throw InputError("train: empty dataset");
    if (settings.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");

    Rng rng(settings.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<EpochMetrics> history;
    for (std::size_t epoch = 0; epoch < settings.epochs; ++epoch) {
        auto started = std::chrono::steady_clock::now();
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += settings.batch_size) {
            std::size_t stop = std::min(order.size(), start + settings.batch_size);
            Batch batch;
            for (std::size_t i = start; i < stop; ++i) {
                batch.features.push_back(train_set.features[order[i]]);
                batch.contexts.push_back(train_set.contexts[order[i]]);
                batch.labels.push_back(train_set.labels[order[i]]);
            }
            model.zero_grad();
            loss_sum += model.loss_and_grads(batch);
            model.sgd_step(settings.lr);
            ++batches;
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_sum / static_cast<double>(batches);
        m.eval_accuracy = eval_set.size() == 0 ? 0.0 : evaluate(eval_set, model).accuracy();
        m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        history.push_back(m);
    }
    return history;
}

namespace {

void eval_range(const Batch& dataset, const CattModel& model, std::size_t begin, std::size_t end,
                std::vector<std::size_t>& predictions) {
    for (std::size_t i = begin; i < end; ++i) {
        Tensor probs = model.predict(dataset.features[i], dataset.contexts[i]);
        std::size_t best = 0;
        for (std::size_t j = 1; j < probs.cols(); ++j) {
            if (probs.at(0, j) > probs.at(0, best)) best = j;
        }
        predictions[i] = best;
    }
}

}  // namespace

EvalReport evaluate(const Batch& dataset, const CattModel& model, std::size_t threads) {
    if (dataset.size() == 0) throw InputError("evaluate: empty dataset");
    std::size_t v = model.config().vocab_out;
    std::vector<std::size_t> predictions(dataset.size(), 0);

    threads = std::max<std::size_t>(1, std::min(threads, dataset.size()));
    if (threads == 1) {
        eval_range(dataset, model, 0, dataset.size(), predictions);
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (dataset.size() + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            std::size_t begin = t * chunk;
            std::size_t end = std::min(dataset.size(), begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(eval_range, std::cref(dataset), std::cref(model), begin, end,
                              std::ref(predictions));
        }
        for (auto& th : pool) th.join();
    }

    EvalReport report;
    report.total = dataset.size();
    report.confusion.assign(v * v, 0);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        std::size_t gold = dataset.labels[i];
        if (gold >= v) throw InputError("evaluate: label out of range");
        ++report.confusion[gold * v + predictions[i]];
        if (predictions[i] == gold) ++report.correct;
    }
    return report;
}

}  // namespace catt
