#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "catt/attention.hpp"
#include "catt/dictionary.hpp"
#include "catt/tensor.hpp"

namespace catt {

struct ModelConfig {
    std::size_t enc_layers = 2;
    std::size_t dec_layers = 2;
    std::size_t d = 16;
    std::size_t heads = 2;
    std::size_t k_feat = 16;
    std::size_t k_ctx = 16;
    std::size_t vocab_in = 32;
    std::size_t vocab_out = 4;
    bool share_params = true;

    void validate() const;
};

// baseline drops the cross-sample stream and both dictionaries; the predictor
// then reads the in-sample estimate alone.
enum class ModelMode { catt, baseline };

struct Batch {
    std::vector<std::vector<std::size_t>> features;
    std::vector<std::vector<std::size_t>> contexts;
    std::vector<std::size_t> labels;

    std::size_t size() const { return labels.size(); }
};

struct EvalReport {
    std::size_t total = 0;
    std::size_t correct = 0;
    std::vector<std::size_t> confusion;  // gold * vocab_out + predicted

    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

// Encoder-decoder over a feature sequence and a context sequence. The first
// layer of each stack is a causal attention block (in-sample plus
// dictionary-backed cross-sample); deeper layers run the two streams through
// self blocks, and decoder layers additionally cross-attend into the encoder
// streams. The predictor is softmax over a linear map of the pooled pair.
class CattModel {
public:
    CattModel(ModelConfig config, ModelMode mode, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    ModelMode mode() const { return mode_; }

    // Copies centroids into the model's dictionary parameter (shape-checked).
    void install_feature_dictionary(const GlobalDictionary& dict);
    void install_context_dictionary(const GlobalDictionary& dict);
    const GlobalDictionary& feature_dictionary() const { return feat_dict_; }
    const GlobalDictionary& context_dictionary() const { return ctx_dict_; }

    const Tensor& feature_embedding() const { return feat_embed_->value; }
    const Tensor& context_embedding() const { return ctx_embed_->value; }
    const std::vector<CattBlockParams>& encoder_blocks() const { return enc_blocks_; }
    const std::vector<CattBlockParams>& decoder_self_blocks() const { return dec_self_blocks_; }
    const std::vector<CattBlockParams>& decoder_cross_blocks() const { return dec_cross_blocks_; }

    struct Streams {
        Value is;
        Value cs;
        bool has_cs = false;
    };

    Streams encode(Graph& g, const std::vector<std::size_t>& features) const;
    Streams decode(Graph& g, const std::vector<std::size_t>& context, const Streams& enc) const;
    Value predict_logits(Graph& g, const Streams& pooled) const;

    // Full forward for one sample; returns the output distribution.
    Tensor predict(const std::vector<std::size_t>& features,
                   const std::vector<std::size_t>& context) const;

    // Mean cross-entropy over the batch; backward accumulates into all grads.
    double loss_and_grads(const Batch& batch);
    // Forward only.
    double batch_loss(const Batch& batch) const;

    void zero_grad();
    void sgd_step(double lr);

    const std::vector<ParamPtr>& parameters() const { return params_; }
    std::size_t parameter_count() const;

private:
    Value forward_loss(Graph& g, const Batch& batch) const;
    Value embed_tokens(Graph& g, const ParamPtr& table, const std::vector<std::size_t>& ids,
                       const char* what) const;
    ParamPtr register_param(ParamPtr p);
    void register_block(const CattBlockParams& block);

    ModelConfig config_;
    ModelMode mode_;
    ParamPtr feat_embed_;  // vocab_in x d
    ParamPtr ctx_embed_;   // vocab_out x d
    std::vector<CattBlockParams> enc_blocks_;
    std::vector<CattBlockParams> dec_self_blocks_;
    std::vector<CattBlockParams> dec_cross_blocks_;  // one per decoder layer >= 2
    GlobalDictionary feat_dict_;
    GlobalDictionary ctx_dict_;
    ParamPtr predictor_w_;  // (2d or d) x vocab_out
    ParamPtr predictor_b_;  // 1 x vocab_out
    std::vector<ParamPtr> params_;
};

struct TrainSettings {
    double lr = 0.05;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double eval_accuracy = 0.0;
    double seconds = 0.0;  // wall clock, reporting only
};

// Seeded-shuffle SGD over mini-batches; records loss and held-out accuracy
// per epoch. Deterministic per seed (wall seconds aside).
std::vector<EpochMetrics> train(CattModel& model, const Batch& train_set, const Batch& eval_set,
                                const TrainSettings& settings);

// Argmax predictions, ties to the lowest class id. threads > 1 shards the
// dataset; shard results merge in fixed order.
EvalReport evaluate(const Batch& dataset, const CattModel& model, std::size_t threads = 1);

}  // namespace catt
