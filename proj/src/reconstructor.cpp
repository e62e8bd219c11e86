#include "semharq/reconstructor.hpp"

#include <cmath>
#include <stdexcept>

#include "semharq/knowledge_base.hpp"

namespace semharq {

DiscriminatorNet::DiscriminatorNet(std::size_t feature_dim, std::uint64_t seed, bool relu_output)
    : feature_dim_(feature_dim), relu_output_(relu_output) {
    if (feature_dim < 8 || feature_dim % 8 != 0) {
        throw std::invalid_argument("discriminator: feature_dim must be a positive multiple of 8");
    }
    Rng rng(mix_seed(seed, 0xD15Cu));
    const std::size_t widths[] = {feature_dim, feature_dim / 2, feature_dim / 4, feature_dim / 8, 1};
    for (std::size_t i = 0; i + 1 < std::size(widths); ++i) {
        stack_.emplace_back(params_, "disc.fc" + std::to_string(i), widths[i], widths[i + 1], rng);
    }
}

Var DiscriminatorNet::forward_raw_var(const Var& frame) const {
    if (frame->value.rank() != 2 || frame->value.cols() != feature_dim_) {
        throw std::invalid_argument("discriminator: expected [L x V] frame");
    }
    Var x = mean_rows(frame, frame->value.rows());
    for (std::size_t i = 0; i < stack_.size(); ++i) {
        x = stack_[i].forward(x);
        if (i + 1 < stack_.size()) x = relu(x);
    }
    return x;
}

double DiscriminatorNet::discriminate(const SemanticFrame& frame) const {
    const double raw = forward_raw_var(constant(frame.features))->value.data[0];
    if (relu_output_) return std::max(raw, 0.0);
    return 1.0 / (1.0 + std::exp(-raw));
}

GeneratorNet::GeneratorNet(std::size_t feature_dim, std::uint64_t seed, bool relu_output)
    : feature_dim_(feature_dim), relu_output_(relu_output) {
    if (feature_dim == 0) throw std::invalid_argument("generator: zero feature_dim");
    Rng rng(mix_seed(seed, 0x6E4u));
    const std::size_t widths[] = {feature_dim, 4 * feature_dim, 16 * feature_dim, 4 * feature_dim,
                                  feature_dim};
    for (std::size_t i = 0; i + 1 < std::size(widths); ++i) {
        stack_.emplace_back(params_, "gen.fc" + std::to_string(i), widths[i], widths[i + 1], rng);
    }
}

Var GeneratorNet::forward_var(const Var& frame) const {
    if (frame->value.rank() != 2 || frame->value.cols() != feature_dim_) {
        throw std::invalid_argument("generator: expected [L x V] frame");
    }
    Var x = frame;
    for (std::size_t i = 0; i < stack_.size(); ++i) {
        x = stack_[i].forward(x);
        if (i + 1 < stack_.size() || relu_output_) x = relu(x);
    }
    return x;
}

SemanticFrame GeneratorNet::generate_corrected(const SemanticFrame& frame) const {
    return SemanticFrame{forward_var(constant(frame.features))->value};
}

SemanticFrame reconstruct(const SemanticFrame& frame, const DiscriminatorNet& disc,
                          const GeneratorNet& gen, double gate_threshold) {
    if (disc.discriminate(frame) >= gate_threshold) return frame;
    return gen.generate_corrected(frame);
}

SemanticFrame reconstruct_with_mode(const SemanticFrame& frame, const DiscriminatorNet* disc,
                                    const GeneratorNet* gen, double gate_threshold,
                                    ReconstructorMode mode) {
    switch (mode) {
        case ReconstructorMode::Off:
            return frame;
        case ReconstructorMode::GeneratorOnly:
            if (gen == nullptr) throw std::invalid_argument("reconstruct: generator missing");
            return gen->generate_corrected(frame);
        case ReconstructorMode::Full:
            if (disc == nullptr || gen == nullptr) {
                throw std::invalid_argument("reconstruct: nets missing for full mode");
            }
            return reconstruct(frame, *disc, *gen, gate_threshold);
    }
    throw std::logic_error("reconstruct: unreachable");
}

std::vector<double> train_discriminator(DiscriminatorNet& net, const std::vector<KbSampleK1>& k1,
                                        const ReconTrainOptions& opts) {
    if (k1.empty()) throw TrainError("train_discriminator: empty K1", 0);
    bool has_pos = false, has_neg = false;
    for (const auto& s : k1) (s.label ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
        throw TrainError("train_discriminator: K1 must contain both labels", 0);
    }

    Rng rng(mix_seed(opts.seed, 0x7D15Cu));
    AdamOptimizer adam(net.parameters(), AdamConfig{opts.learning_rate, 0.9, 0.999, 1e-8});
    EpochSampler sampler(k1.size(), mix_seed(opts.seed, 0xBA7C4u));

    std::vector<double> history;
    const std::size_t batches_per_epoch =
        (k1.size() + opts.batch_size - 1) / opts.batch_size;
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            const auto batch = sampler.next_batch(std::min(opts.batch_size, k1.size() - seen));
            net.param_set().zero_grad();
            for (std::size_t idx : batch) {
                const auto& sample = k1[idx];
                const Var raw = net.forward_raw_var(constant(sample.received_frame));
                const Var loss = scale(
                    bce_with_logits(raw, {static_cast<double>(sample.label)}),
                    1.0 / static_cast<double>(batch.size()));
                const double value = loss->value.data[0] * static_cast<double>(batch.size());
                if (!std::isfinite(value)) {
                    throw TrainError("train_discriminator: non-finite loss", epoch);
                }
                epoch_loss += value;
                backward(loss);
            }
            adam.step();
            seen += batch.size();
        }
        history.push_back(epoch_loss / static_cast<double>(k1.size()));
    }
    return history;
}

std::vector<double> train_generator(GeneratorNet& net, const std::vector<KbSampleK2>& k2,
                                    const ReconTrainOptions& opts) {
    if (k2.empty()) throw TrainError("train_generator: empty K2", 0);
    AdamOptimizer adam(net.parameters(), AdamConfig{opts.learning_rate, 0.9, 0.999, 1e-8});
    EpochSampler sampler(k2.size(), mix_seed(opts.seed, 0xBA7C5u));

    std::vector<double> history;
    const std::size_t batches_per_epoch =
        (k2.size() + opts.batch_size - 1) / opts.batch_size;
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            const auto batch = sampler.next_batch(std::min(opts.batch_size, k2.size() - seen));
            net.param_set().zero_grad();
            for (std::size_t idx : batch) {
                const auto& pair = k2[idx];
                const Var out = net.forward_var(constant(pair.corrupted_frame));
                const Var loss = scale(mse_loss(out, pair.clean_frame),
                                       1.0 / static_cast<double>(batch.size()));
                const double value = loss->value.data[0] * static_cast<double>(batch.size());
                if (!std::isfinite(value)) {
                    throw TrainError("train_generator: non-finite loss", epoch);
                }
                epoch_loss += value;
                backward(loss);
            }
            adam.step();
            seen += batch.size();
        }
        history.push_back(epoch_loss / static_cast<double>(k2.size()));
    }
    return history;
}

}  // namespace semharq
