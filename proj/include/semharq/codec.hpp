#pragma once

#include <cstdint>
#include <vector>

#include "semharq/channel.hpp"
#include "semharq/corpus.hpp"
#include "semharq/layers.hpp"

namespace semharq {

/// Channel-input/-output semantic representation: an L x V feature matrix
/// whose consecutive entries form I/Q pairs on the air.
struct SemanticFrame {
    Tensor features;  // [L x V]

    double power() const;  // mean squared entry
};

/// Per-position probability vectors over the vocabulary, rows sum to 1.
struct WordDistribution {
    Tensor probs;  // [L x W]
};

struct CodecConfig {
    std::size_t vocab_size = 0;
    std::size_t max_len = 12;      // L
    std::size_t embed_dim = 16;    // D
    std::size_t feature_dim = 32;  // V, must be even
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t head_mult = 4;

    std::size_t ff_hidden() const { return 4 * embed_dim; }
    // The channel-adaptation heads are two dense layers with a ReLU between
    // them; the hidden width scales with the feature dimension.
    std::size_t head_hidden() const { return head_mult * feature_dim; }
    std::size_t frame_symbols() const { return max_len * feature_dim / 2; }
    void validate() const;
};

/// Semantic encoder/decoder pair: embedding -> transformer encoder stack ->
/// dense head to width V on the transmit side; dense head from V ->
/// transformer decoder stack -> projection to vocabulary logits on the
/// receive side. Decoding is position-wise (no autoregression) so that
/// decision-level combining can operate on per-position distributions.
class CodecModel {
public:
    CodecModel(CodecConfig cfg, std::uint64_t seed);

    const CodecConfig& config() const { return cfg_; }
    const std::vector<Var>& parameters() const { return params_.params; }
    ParamSet& param_set() { return params_; }

    Var encode_var(const Sentence& sentence) const;     // power-normalized [L x V]
    Var decode_logits_var(const Var& received) const;   // [L x W]

    SemanticFrame encode(const Sentence& sentence) const;
    WordDistribution decode_distribution(const SemanticFrame& frame) const;

    /// Mean embedding of the encoder stack output over the true-length
    /// prefix; used by the similarity embedder.
    std::vector<double> encoder_embedding(const Sentence& sentence) const;

private:
    Var encoder_stack(const Sentence& sentence) const;  // [L x D]

    CodecConfig cfg_;
    ParamSet params_;
    Var embedding_;
    std::vector<TransformerLayer> encoder_;
    LayerNorm encoder_norm_;
    DenseLayer encoder_head1_, encoder_head2_;
    DenseLayer decoder_head1_, decoder_head2_;
    std::vector<TransformerLayer> decoder_;
    LayerNorm decoder_norm_;
    DenseLayer output_proj_;
    Tensor positions_;
};

SemanticFrame power_normalize(const SemanticFrame& frame);

/// Per-position argmax; ties break toward the lowest token id, trailing
/// pads define the true length.
Sentence greedy_decode(const WordDistribution& dist, int pad_id);

struct TrainError : std::runtime_error {
    std::size_t epoch;
    TrainError(const std::string& what, std::size_t epoch_)
        : std::runtime_error(what), epoch(epoch_) {}
};

struct CodecTrainOptions {
    std::size_t epochs = 60;
    std::size_t batch_size = 16;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
    ChannelConfig channel;  // taps/noise are redrawn per sentence per batch
};

/// Joint end-to-end training of encoder and decoder through the channel
/// surrogate (taps and noise held constant in the backward pass). Returns
/// per-epoch mean cross-entropy.
std::vector<double> train_codec(CodecModel& model, const std::vector<Sentence>& corpus,
                                const CodecTrainOptions& opts);

/// Fraction of positions (over all L slots) reproduced by greedy decoding
/// through the given channel config; identity channel when null.
double token_accuracy(const CodecModel& model, const std::vector<Sentence>& corpus,
                      const ChannelConfig* channel = nullptr, std::uint64_t seed = 0);

}  // namespace semharq
