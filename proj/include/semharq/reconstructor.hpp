#pragma once

#include <cstdint>
#include <vector>

#include "semharq/codec.hpp"
#include "semharq/layers.hpp"

namespace semharq {

struct KbSampleK1;
struct KbSampleK2;

/// Fading discriminator D_A: average-pooled frame (length V) through
/// hidden widths V/2, V/4, V/8 to a scalar probability. The paper puts
/// ReLU on the output; a sigmoid is used by default so the gate threshold
/// acts on a probability (ReLU output selectable for fidelity runs).
class DiscriminatorNet {
public:
    DiscriminatorNet(std::size_t feature_dim, std::uint64_t seed, bool relu_output = false);

    std::size_t feature_dim() const { return feature_dim_; }
    const std::vector<Var>& parameters() const { return params_.params; }
    ParamSet& param_set() { return params_; }

    Var forward_raw_var(const Var& frame) const;  // pre-activation scalar
    double discriminate(const SemanticFrame& frame) const;

private:
    std::size_t feature_dim_;
    bool relu_output_;
    ParamSet params_;
    std::vector<DenseLayer> stack_;
};

/// Conditional corrector G_A applied independently to each position
/// vector: V -> 4V -> 16V -> 4V -> V with ReLU hidden layers. The output
/// layer is linear by default because semantic features are signed; the
/// paper's literal ReLU output is selectable.
class GeneratorNet {
public:
    GeneratorNet(std::size_t feature_dim, std::uint64_t seed, bool relu_output = false);

    std::size_t feature_dim() const { return feature_dim_; }
    const std::vector<Var>& parameters() const { return params_.params; }
    ParamSet& param_set() { return params_; }

    Var forward_var(const Var& frame) const;  // [L x V] -> [L x V]
    SemanticFrame generate_corrected(const SemanticFrame& frame) const;

private:
    std::size_t feature_dim_;
    bool relu_output_;
    ParamSet params_;
    std::vector<DenseLayer> stack_;
};

enum class ReconstructorMode { Full, Off, GeneratorOnly };

/// The gate: pass the frame untouched when D_A calls it normal
/// (p >= threshold), otherwise emit the corrected frame.
SemanticFrame reconstruct(const SemanticFrame& frame, const DiscriminatorNet& disc,
                          const GeneratorNet& gen, double gate_threshold);

SemanticFrame reconstruct_with_mode(const SemanticFrame& frame, const DiscriminatorNet* disc,
                                    const GeneratorNet* gen, double gate_threshold,
                                    ReconstructorMode mode);

struct ReconTrainOptions {
    std::size_t epochs = 12;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
};

/// Binary cross-entropy on K1 labels; requires both classes present.
std::vector<double> train_discriminator(DiscriminatorNet& net, const std::vector<KbSampleK1>& k1,
                                        const ReconTrainOptions& opts);

/// MSE between generated and clean frames over K2 pairs.
std::vector<double> train_generator(GeneratorNet& net, const std::vector<KbSampleK2>& k2,
                                    const ReconTrainOptions& opts);

}  // namespace semharq
