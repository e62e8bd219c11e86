#include "semharq/detector.hpp"

#include <cmath>
#include <stdexcept>

#include "semharq/knowledge_base.hpp"

namespace semharq {

void DetectorConfig::validate() const {
    if (vocab_size < 4) throw std::invalid_argument("detector: vocabulary too small");
    if (embed_dim % heads != 0) {
        throw std::invalid_argument("detector: embed_dim must be divisible by heads");
    }
    if (embed_dim < 2) throw std::invalid_argument("detector: embed_dim too small");
    if (layers != 3) throw std::invalid_argument("detector: transformer depth is fixed at 3");
}

DetectorNet::DetectorNet(DetectorConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(mix_seed(seed, 0xDE7Eu));
    embedding_ = params_.add(
        glorot_uniform({cfg_.vocab_size, cfg_.embed_dim}, cfg_.vocab_size, cfg_.embed_dim, rng),
        "embedding");
    for (std::size_t i = 0; i < cfg_.layers; ++i) {
        layers_.emplace_back(params_, "layer" + std::to_string(i), cfg_.embed_dim, cfg_.heads,
                             4 * cfg_.embed_dim, rng);
    }
    final_norm_ = LayerNorm(params_, "final_norm", cfg_.embed_dim);
    const std::size_t widths[] = {cfg_.embed_dim, cfg_.embed_dim, cfg_.embed_dim / 2, 1};
    for (std::size_t i = 0; i + 1 < std::size(widths); ++i) {
        mlp_.emplace_back(params_, "mlp.fc" + std::to_string(i), widths[i], widths[i + 1], rng);
    }
    positions_ = sinusoidal_positions(cfg_.max_len, cfg_.embed_dim);
}

Var DetectorNet::forward_raw_var(const Sentence& sentence) const {
    if (sentence.ids.size() != cfg_.max_len) {
        throw std::invalid_argument("detector: sentence length != configured L");
    }
    Var x = add(embedding_lookup(embedding_, sentence.ids), constant(positions_));
    for (const auto& layer : layers_) x = layer.forward(x);
    x = mean_rows(final_norm_.forward(x), cfg_.max_len);
    for (std::size_t i = 0; i < mlp_.size(); ++i) {
        x = mlp_[i].forward(x);
        if (i + 1 < mlp_.size()) x = relu(x);
    }
    return x;
}

double DetectorNet::detect_confidence(const Sentence& sentence) const {
    const double raw = forward_raw_var(sentence)->value.data[0];
    return 1.0 / (1.0 + std::exp(-raw));
}

Feedback feedback_decision(double p_hat, double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("feedback: lambda not in [0,1]");
    return p_hat > lambda ? Feedback::Ack : Feedback::Nack;
}

std::vector<double> train_detector(DetectorNet& net, const std::vector<KbSampleK3>& k3,
                                   const DetectorTrainOptions& opts) {
    if (k3.empty()) throw TrainError("train_detector: empty K3", 0);
    bool has_pos = false, has_neg = false;
    for (const auto& s : k3) (s.label ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw TrainError("train_detector: K3 must contain both labels", 0);

    AdamOptimizer adam(net.parameters(), AdamConfig{opts.learning_rate, 0.9, 0.999, 1e-8});
    EpochSampler sampler(k3.size(), mix_seed(opts.seed, 0xBA7C6u));

    std::vector<double> history;
    const std::size_t batches_per_epoch = (k3.size() + opts.batch_size - 1) / opts.batch_size;
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            const auto batch = sampler.next_batch(std::min(opts.batch_size, k3.size() - seen));
            net.param_set().zero_grad();
            for (std::size_t idx : batch) {
                const auto& sample = k3[idx];
                const Var raw = net.forward_raw_var(sample.decoded);
                const Var loss =
                    scale(bce_with_logits(raw, {static_cast<double>(sample.label)}),
                          1.0 / static_cast<double>(batch.size()));
                const double value = loss->value.data[0] * static_cast<double>(batch.size());
                if (!std::isfinite(value)) {
                    throw TrainError("train_detector: non-finite loss", epoch);
                }
                epoch_loss += value;
                backward(loss);
            }
            adam.step();
            seen += batch.size();
        }
        history.push_back(epoch_loss / static_cast<double>(k3.size()));
    }
    return history;
}

}  // namespace semharq
