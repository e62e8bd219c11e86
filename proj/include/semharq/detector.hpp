#pragma once

#include <cstdint>
#include <vector>

#include "semharq/codec.hpp"
#include "semharq/corpus.hpp"
#include "semharq/layers.hpp"

namespace semharq {

struct KbSampleK3;

struct DetectorConfig {
    std::size_t vocab_size = 0;
    std::size_t max_len = 12;
    std::size_t embed_dim = 16;
    std::size_t heads = 4;
    std::size_t layers = 3;  // fixed by the architecture

    void validate() const;
};

/// Sentence-level semantic error detector D_delta: embedding, three
/// transformer layers, average pooling over positions, then an MLP with
/// hidden widths D and D/2 ending in a sigmoid confidence.
class DetectorNet {
public:
    DetectorNet(DetectorConfig cfg, std::uint64_t seed);

    const DetectorConfig& config() const { return cfg_; }
    const std::vector<Var>& parameters() const { return params_.params; }
    ParamSet& param_set() { return params_; }

    Var forward_raw_var(const Sentence& sentence) const;  // pre-sigmoid scalar
    double detect_confidence(const Sentence& sentence) const;

private:
    DetectorConfig cfg_;
    ParamSet params_;
    Var embedding_;
    std::vector<TransformerLayer> layers_;
    LayerNorm final_norm_;
    std::vector<DenseLayer> mlp_;
    Tensor positions_;
};

enum class Feedback { Ack, Nack };

/// ACK iff p_hat > lambda, strictly.
Feedback feedback_decision(double p_hat, double lambda);

struct DetectorTrainOptions {
    std::size_t epochs = 15;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
};

/// Minibatch BCE over (decoded sentence, label) samples from K3; both
/// labels must be present.
std::vector<double> train_detector(DetectorNet& net, const std::vector<KbSampleK3>& k3,
                                   const DetectorTrainOptions& opts);

}  // namespace semharq
